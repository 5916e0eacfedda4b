#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "symshrink/io.hpp"
#include "symshrink/synth.hpp"

#ifndef SYMSHRINK_CLI
#error "SYMSHRINK_CLI must name the built command-line binary"
#endif

using namespace symshrink;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("symshrink_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const std::string& stderr_to = "/dev/null") {
    const std::string cmd = std::string(SYMSHRINK_CLI) + " " + args + " >/dev/null 2>" + stderr_to;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

CsvTable table(const std::string& path) {
    std::ifstream in(path);
    return read_csv_table(in, path);
}

}  // namespace

TEST_CASE("project: identity stays identity, orthogonal group gives the trace mean") {
    Scratch s;
    save_matrix(SymmetricMatrix::identity(4), s / "id.csv");
    REQUIRE(run("project --matrix " + (s / "id.csv") + " --group cyclic --out " + (s / "p.csv")) == 0);
    CHECK(testing_support::max_abs_diff(load_matrix(s / "p.csv"), SymmetricMatrix::identity(4)) == 0.0);

    save_matrix(SymmetricMatrix(3, {1.0, 0.3, 0.2, 0.3, 2.0, -0.1, 0.2, -0.1, 3.0}), s / "a.csv");
    REQUIRE(run("project --matrix " + (s / "a.csv") + " --group haar --out " + (s / "h.csv")) == 0);
    CHECK(testing_support::max_abs_diff(load_matrix(s / "h.csv"), SymmetricMatrix::identity(3, 2.0)) < 1e-15);

    REQUIRE(run("project --matrix " + (s / "a.csv") + " --group swap:0:2 --out " + (s / "once.csv")) == 0);
    REQUIRE(run("project --matrix " + (s / "once.csv") + " --group swap:0:2 --out " + (s / "twice.csv")) == 0);
    CHECK(slurp(s / "once.csv") == slurp(s / "twice.csv"));
}

TEST_CASE("estimate and calibrate write parseable outputs") {
    Scratch s;
    const auto sigma = make_population([] {
        PopulationSpec p;
        p.kind = PopulationKind::GroupInvariant;
        p.m = 8;
        p.base_seed = 2;
        p.group = cyclic(8, "Z8");
        return p;
    }());
    save_dataset(sample_gaussian(sigma, 30, 4), s / "d.csv");
    for (const std::string est : {"Sample", "LW2004", "LWNL", "ShahProjection", "AD", "ADLWNL"}) {
        const std::string group = est == "Sample" || est == "LW2004" || est == "LWNL" ? "" : " --group cyclic";
        REQUIRE(run("estimate --data " + (s / "d.csv") + " --estimator " + est + group + " --out " + (s / "e.csv")) == 0);
        const auto r = load_estimator(s / "e.csv");
        CHECK(to_string(r.estimator) == est);
        CHECK(r.matrix.dim() == 8);
    }
    REQUIRE(run("calibrate --data " + (s / "d.csv") + " --group cyclic --trace " + (s / "t.csv") + " --out " +
                (s / "c.csv")) == 0);
    const auto c = table(s / "c.csv");
    CHECK(c.header == std::vector<std::string>{"group", "method", "alpha", "best_score", "v_perp", "v_plus_d"});
    CHECK(table(s / "t.csv").rows.size() == 5 * 13);
    REQUIRE(run("calibrate --data " + (s / "d.csv") + " --group cyclic --method plugin --out " + (s / "c2.csv")) == 0);
    CHECK(table(s / "c2.csv").rows.size() == 1);
}

TEST_CASE("bmg: matched fixture recovers the generating group") {
    Scratch s;
    PopulationSpec p;
    p.kind = PopulationKind::GroupInvariant;
    p.m = 12;
    p.base_seed = 8;
    p.source_correlation = 0.6;
    p.group = wreath(cyclic(4), 3);
    save_dataset(sample_gaussian(make_population(p), 60, 1), s / "d.csv");
    fs::create_directories(s / "lib");
    write_group_file(GroupAction::trivial(12), s / "lib/trivial.txt");
    write_group_file(cyclic(12, "Z12"), s / "lib/z12.txt");
    write_group_file(wreath(cyclic(4), 3, WreathTop::Symmetric, "Z4-wr-S3"), s / "lib/wreath.txt");
    write_group_file(cartesian_power(cyclic(4), 3, "Z4-cartesian"), s / "lib/cart.txt");
    REQUIRE(run("bmg --data " + (s / "d.csv") + " --library " + (s / "lib") + " --builtin sym --report " +
                (s / "r.csv") + " --out " + (s / "e.csv")) == 0);
    std::ifstream in(s / "r.csv");
    const auto report = read_bmg_report_csv(in);
    CHECK(report.selected == "Z4-wr-S3");
    CHECK(report.candidates.size() == 5);
    CHECK(load_estimator(s / "e.csv").group_name.value() == "Z4-wr-S3");
}

TEST_CASE("bmg: a one-row dataset falls back with the flag set and exit status zero") {
    Scratch s;
    write_text(s / "d.csv", "1,3\n0.5,-1,2\n");
    REQUIRE(run("bmg --data " + (s / "d.csv") + " --builtin cyclic --builtin swap:0:1 --report " + (s / "r.csv") +
                " --out " + (s / "e.csv")) == 0);
    const auto est = load_estimator(s / "e.csv");
    CHECK(est.estimator == EstimatorName::LW2004);
    CHECK(est.has(EstimatorFlag::BmgFallback));
    for (const auto& row : table(s / "r.csv").rows) CHECK(row[4] == "0");
}

TEST_CASE("bmg: no decoy is selected on wreath data") {
    Scratch s;
    PopulationSpec p;
    p.kind = PopulationKind::GroupInvariant;
    p.m = 100;
    p.base_seed = 7;
    p.source_correlation = 0.6;
    const auto lib = build_pathway_library();
    p.group = lib.find("Z-K-pc1-wreath");
    save_dataset(sample_gaussian(make_population(p), 50, 3), s / "d.csv");
    REQUIRE(run("bmg --data " + (s / "d.csv") + " --pathway --decoys --report " + (s / "r.csv") + " --out " +
                (s / "e.csv")) == 0);
    const auto t = table(s / "r.csv");
    CHECK(t.rows.size() == 20);
    const auto decoys = build_decoy_library(100);
    for (const auto& row : t.rows) {
        if (row[4] != "1") continue;
        bool is_decoy = false;
        for (const auto& g : decoys.candidates()) is_decoy |= g.name() == row[0];
        CHECK_FALSE(is_decoy);
    }
}

TEST_CASE("sweep: row count, seed determinism and thread independence") {
    Scratch s;
    write_text(s / "cfg.txt",
               "population = group-invariant\ngroup = cyclic\nm = 8\nn_train = 10, 30\ntrials = 3\n"
               "library = trivial,cyclic,sym\n");
    REQUIRE(run("--seed 4 sweep --config " + (s / "cfg.txt") + " --out " + (s / "a.csv")) == 0);
    REQUIRE(run("--seed 4 --threads 3 sweep --config " + (s / "cfg.txt") + " --out " + (s / "b.csv")) == 0);
    REQUIRE(run("--seed 5 sweep --config " + (s / "cfg.txt") + " --out " + (s / "c.csv")) == 0);
    const auto t = table(s / "a.csv");
    CHECK(t.rows.size() == 6);
    CHECK(t.header.front() == "cell");
    CHECK(slurp(s / "a.csv") == slurp(s / "b.csv"));
    CHECK(slurp(s / "a.csv") != slurp(s / "c.csv"));
    for (const auto& row : t.rows)
        for (std::size_t k = 6; k < 18; ++k) CHECK_NOTHROW(parse_double_field(row[k], "sweep"));
}

TEST_CASE("verify-lwnl reports PRIAL near the identity benchmark") {
    Scratch s;
    REQUIRE(run("verify-lwnl --c 0.5 --population identity --m 64 --trials 20 --out " + (s / "v.csv")) == 0);
    const auto t = table(s / "v.csv");
    REQUIRE(t.rows.size() == 2);
    for (const auto& row : t.rows) {
        if (row[5] != "LWNL") continue;
        const double prial = parse_double_field(row[6], "prial");
        CHECK(prial >= 94.0);
        CHECK(prial <= 100.0);
    }
}

TEST_CASE("decoy emits one row per candidate per trial and an aggregate") {
    Scratch s;
    write_text(s / "cfg.txt",
               "population = group-invariant\ngroup = wreath:20x5\nsource_correlation = 0.6\npopulation_seed = 7\n"
               "n_train = 50\ntrials = 2\nlibrary = pathway\n");
    REQUIRE(run("decoy --config " + (s / "cfg.txt") + " --out " + (s / "d.csv") + " --summary " + (s / "s.csv")) == 0);
    CHECK(table(s / "d.csv").rows.size() == 2 * 20);
    const auto summary = table(s / "s.csv");
    CHECK(summary.header ==
          std::vector<std::string>{"candidate", "role", "admitted_trials", "mean_cv_nll", "selected_trials"});
    CHECK(summary.rows.size() == 20);
}

TEST_CASE("errors map to exit codes with a single diagnostic line") {
    Scratch s;
    CHECK(run("--help") == 0);
    CHECK(run("project --bogus") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("project --matrix " + (s / "missing.csv") + " --group cyclic", s / "err.txt") == 4);
    const auto err = slurp(s / "err.txt");
    CHECK(err.find("missing.csv") != std::string::npos);
    CHECK(std::count(err.begin(), err.end(), '\n') == 1);
    write_text(s / "bad.csv", "2\n1,5\n0,1\n");
    CHECK(run("project --matrix " + (s / "bad.csv") + " --group cyclic") == 2);
    write_text(s / "cfg.txt", "m = 8\nwhatever = 3\nlibrary = trivial\n");
    CHECK(run("sweep --config " + (s / "cfg.txt")) == 2);
    save_matrix(SymmetricMatrix::identity(3), s / "id.csv");
    CHECK(run("project --matrix " + (s / "id.csv") + " --group cyclic --out " + (s / "no/dir/x.csv")) == 4);
}

TEST_CASE("help lists every subcommand and flag") {
    Scratch s;
    const std::string cmd = std::string(SYMSHRINK_CLI) + " --help > " + (s / "h.txt");
    REQUIRE(std::system(cmd.c_str()) == 0);
    const auto help = slurp(s / "h.txt");
    for (const char* word : {"project", "estimate", "calibrate", "bmg", "sweep", "verify-lwnl", "decoy", "--threads",
                             "--seed", "--kernels"})
        CHECK(help.find(word) != std::string::npos);
    const std::string sub = std::string(SYMSHRINK_CLI) + " bmg --help > " + (s / "b.txt");
    REQUIRE(std::system(sub.c_str()) == 0);
    const auto bh = slurp(s / "b.txt");
    for (const char* word : {"--data", "--library", "--builtin", "--pathway", "--decoys", "--kappa", "--folds", "--grid",
                             "--lwnl", "--report", "--out"})
        CHECK(bh.find(word) != std::string::npos);
}
