// Command-line front end: file-level projection, estimation, calibration and
// group selection, plus the synthetic sweep, spectrum check and decoy runs.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "symshrink/bmg.hpp"
#include "symshrink/calibration.hpp"
#include "symshrink/error.hpp"
#include "symshrink/format.hpp"
#include "symshrink/groups.hpp"
#include "symshrink/io.hpp"
#include "symshrink/kernels.hpp"
#include "symshrink/shrinkage.hpp"
#include "symshrink/synth.hpp"

namespace fs = std::filesystem;
using namespace symshrink;

namespace {

struct GlobalOptions {
    std::optional<std::size_t> threads;
    std::optional<std::uint64_t> seed;
};

// Output goes to a file when a path is given, otherwise to stdout.
class Sink {
public:
    explicit Sink(const std::string& path) : path_(path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw IoError("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    // Writes one complete record and flushes, so an interrupted run ends on a record boundary.
    void record(const std::string& text) {
        stream() << text;
        stream().flush();
        if (!stream()) throw IoError("write to '" + (path_.empty() ? std::string("<stdout>") : path_) + "' failed");
    }

private:
    std::string path_;
    std::unique_ptr<std::ofstream> file_;
};

GroupAction resolve_group(const std::string& spec, const std::string& file, std::size_t dim) {
    if (!file.empty()) {
        auto g = read_group_file(file);
        if (g.dim() != dim) {
            throw DimensionError(file + ": group acts on " + std::to_string(g.dim()) + " indices, input has " +
                                 std::to_string(dim));
        }
        return g;
    }
    if (spec.empty()) throw ConfigError("a group is required (--group or --group-file)");
    return builtin_group(spec, dim);
}

CandidateLibrary resolve_library(const std::string& dir, const std::vector<std::string>& builtins, bool pathway,
                                 bool decoys, std::size_t dim) {
    CandidateLibrary lib;
    if (pathway) lib.append(build_pathway_library());
    for (const auto& spec : builtins) lib.add(builtin_group(spec, dim));
    if (!dir.empty()) {
        if (!fs::is_directory(dir)) throw IoError("library directory '" + dir + "' does not exist");
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) lib.add(read_group_file(f.string()));
    }
    if (decoys) lib.append(build_decoy_library(dim));
    if (lib.empty()) throw ConfigError("candidate library is empty (use --library, --builtin or --pathway)");
    if (lib.dim() != dim) throw DimensionError("library dimension differs from the data");
    return lib;
}

Dataset load_centered(const std::string& path) {
    const auto raw = load_dataset(path);
    return raw.centered_copy();
}

SweepConfig load_config(const std::string& path, const GlobalOptions& global) {
    auto cfg = read_sweep_config(path);
    if (global.seed) cfg.seed = *global.seed;
    if (global.threads) cfg.threads = *global.threads;
    return cfg;
}

std::string record_text(const TrialRecord& r) {
    std::ostringstream os;
    write_trial_row(r, os);
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group-symmetric covariance shrinkage"};
    app.require_subcommand(1);
    GlobalOptions global;
    std::uint64_t seed_value = 0;
    app.add_option("--threads", global.threads, "Worker threads for sweeps; overrides the config (default 1)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
    auto* seed_opt = app.add_option("--seed", seed_value, "Base seed; overrides the config file seed");
    std::string kernels = "auto";
    app.add_option("--kernels", kernels, "Arithmetic kernels: auto, scalar or avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    // project
    auto* project = app.add_subcommand("project", "Project a matrix onto the commutant of a group");
    std::string p_in, p_group, p_group_file, p_out;
    project->add_option("--matrix", p_in, "Input matrix CSV")->required();
    project->add_option("--group", p_group, "Builtin group spec (e.g. cyclic, wreath:20x5)");
    project->add_option("--group-file", p_group_file, "Group specification file");
    project->add_option("--out", p_out, "Output matrix CSV (default stdout)");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "Fit one estimator to a dataset");
    std::string e_in, e_est = "Sample", e_group, e_group_file, e_out;
    std::optional<double> e_alpha;
    std::size_t e_folds = 5, e_grid = 13;
    estimate->add_option("--data", e_in, "Dataset CSV")->required();
    estimate->add_option("--estimator", e_est, "Sample, LW2004, LWNL, ShahProjection, AD or ADLWNL")
        ->check(CLI::IsMember({"Sample", "LW2004", "LWNL", "ShahProjection", "AD", "ADLWNL"}));
    estimate->add_option("--group", e_group, "Builtin group spec");
    estimate->add_option("--group-file", e_group_file, "Group specification file");
    estimate->add_option("--alpha", e_alpha, "Fixed shrinkage intensity; calibrated when omitted")
        ->check(CLI::Range(0.0, 1.0));
    estimate->add_option("--folds", e_folds, "Folds for cross-validated calibration")->check(CLI::Range(2, 1000000));
    estimate->add_option("--grid", e_grid, "Alpha grid size")->check(CLI::Range(2, 100000));
    estimate->add_option("--out", e_out, "Output estimator CSV (default stdout)");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate alpha at one group");
    std::string c_in, c_group, c_group_file, c_method = "cv", c_trace, c_out;
    std::size_t c_folds = 5, c_grid = 13;
    bool c_lwnl = false;
    calibrate->add_option("--data", c_in, "Dataset CSV")->required();
    calibrate->add_option("--group", c_group, "Builtin group spec");
    calibrate->add_option("--group-file", c_group_file, "Group specification file");
    calibrate->add_option("--method", c_method, "cv (held-out NLL) or plugin (Frobenius plug-in)")
        ->check(CLI::IsMember({"cv", "plugin"}));
    calibrate->add_option("--folds", c_folds, "Fold count")->check(CLI::Range(2, 1000000));
    calibrate->add_option("--grid", c_grid, "Alpha grid size")->check(CLI::Range(2, 100000));
    calibrate->add_flag("--lwnl", c_lwnl, "Use the LW-NL estimate as the unstructured term");
    calibrate->add_option("--trace", c_trace, "Write per-fold scores (fold,alpha,nll)");
    calibrate->add_option("--out", c_out, "Summary CSV (default stdout)");

    // bmg
    auto* bmg = app.add_subcommand("bmg", "Select a group from a candidate library and fit");
    std::string b_in, b_lib, b_report, b_out;
    std::vector<std::string> b_builtin;
    bool b_pathway = false, b_decoys = false, b_lwnl = false;
    double b_kappa = 2.0;
    std::size_t b_folds = 5, b_grid = 13;
    bmg->add_option("--data", b_in, "Dataset CSV")->required();
    bmg->add_option("--library", b_lib, "Directory of group specification files");
    bmg->add_option("--builtin", b_builtin, "Builtin group specs to add to the library");
    bmg->add_flag("--pathway", b_pathway, "Add the 8-candidate pathway library (M = 100)");
    bmg->add_flag("--decoys", b_decoys, "Add the 12 decoy candidates (M = 100)");
    bmg->add_option("--kappa", b_kappa, "Rank prefilter constant")->check(CLI::Range(1.0, 1e12));
    bmg->add_option("--folds", b_folds, "Fold count")->check(CLI::Range(2, 1000000));
    bmg->add_option("--grid", b_grid, "Alpha grid size")->check(CLI::Range(2, 100000));
    bmg->add_flag("--lwnl", b_lwnl, "Blend against LW-NL instead of the sample covariance");
    bmg->add_option("--report", b_report, "Per-candidate report CSV");
    bmg->add_option("--out", b_out, "Output estimator CSV (default stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep from a key=value config");
    std::string s_config, s_out;
    sweep->add_option("--config", s_config, "Sweep config file")->required();
    sweep->add_option("--out", s_out, "Trial CSV (default stdout)");

    // verify-lwnl
    auto* verify = app.add_subcommand("verify-lwnl", "PRIAL of LW2004 and LW-NL on a synthetic population");
    double v_c = 0.5, v_ratio = 10.0, v_split = 0.5, v_decay = 0.95;
    std::string v_population = "identity", v_out;
    std::size_t v_m = 64, v_trials = 50;
    verify->add_option("--c", v_c, "Concentration M/N in (0, 1)");
    verify->add_option("--population", v_population, "identity, two-block or geometric-spread");
    verify->add_option("--m", v_m, "Dimension")->check(CLI::PositiveNumber);
    verify->add_option("--trials", v_trials, "Monte Carlo trials (>= 10)");
    verify->add_option("--ratio", v_ratio, "two-block eigenvalue ratio");
    verify->add_option("--split", v_split, "two-block fraction at the upper level");
    verify->add_option("--decay", v_decay, "geometric-spread decay");
    verify->add_option("--out", v_out, "Summary CSV (default stdout)");

    // decoy
    auto* decoy = app.add_subcommand("decoy", "Selection stress test with the decoy candidates added");
    std::string d_config, d_out, d_summary;
    decoy->add_option("--config", d_config, "Sweep config file (decoys are always added)")->required();
    decoy->add_option("--out", d_out, "Per-candidate per-trial CSV (default stdout)");
    decoy->add_option("--summary", d_summary, "Per-candidate aggregate CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (*seed_opt) global.seed = seed_value;

    try {
        if (kernels == "scalar") kernels::force_backend(kernels::Backend::Scalar);
        if (kernels == "avx2") kernels::force_backend(kernels::Backend::Avx2);

        if (*project) {
            const auto a = load_matrix(p_in);
            const auto g = resolve_group(p_group, p_group_file, a.dim());
            Sink out(p_out);
            write_matrix_csv(reynolds_project(g, a), out.stream());
        } else if (*estimate) {
            const auto data = load_centered(e_in);
            const auto name = parse_estimator_name(e_est);
            const bool needs_group = name == EstimatorName::ShahProjection || name == EstimatorName::AD ||
                                     name == EstimatorName::ADLWNL;
            std::optional<GroupAction> g;
            if (needs_group) g = resolve_group(e_group, e_group_file, data.dim());
            EstimatorResult r;
            const auto r_hat = sample_covariance(data);
            switch (name) {
                case EstimatorName::Sample: r = sample_estimator(data); break;
                case EstimatorName::LW2004: r = e_alpha ? lw2004(r_hat, *e_alpha) : lw2004_auto(data); break;
                case EstimatorName::LWNL: r = lwnl(data); break;
                case EstimatorName::ShahProjection: r = shah_projection(r_hat, *g); break;
                case EstimatorName::AD:
                case EstimatorName::ADLWNL: {
                    const bool nl = name == EstimatorName::ADLWNL;
                    double alpha = 0.0;
                    if (e_alpha) {
                        alpha = *e_alpha;
                    } else {
                        alpha = cv_nll_alpha(data, *g, AlphaGrid::uniform(e_grid),
                                             FoldScheme::contiguous(data.n_obs(), e_folds), nl)
                                    .alpha;
                    }
                    r = nl ? ad_lwnl_blend(data, *g, alpha) : ad_blend(r_hat, *g, alpha);
                    break;
                }
            }
            Sink out(e_out);
            write_estimator_csv(r, out.stream());
        } else if (*calibrate) {
            const auto data = load_centered(c_in);
            const auto g = resolve_group(c_group, c_group_file, data.dim());
            CalibrationResult res;
            if (c_method == "plugin") {
                res = mse_plugin_alpha(data, g);
            } else {
                res = cv_nll_alpha(data, g, AlphaGrid::uniform(c_grid), FoldScheme::contiguous(data.n_obs(), c_folds),
                                   c_lwnl);
            }
            Sink out(c_out);
            out.stream() << "group,method,alpha,best_score,v_perp,v_plus_d\n"
                         << g.name() << ',' << c_method << ',' << format_double(res.alpha) << ','
                         << (c_method == "cv" ? format_double(res.best_score()) : std::string("nan")) << ','
                         << format_double(res.v_perp_hat.value_or(std::nan(""))) << ','
                         << format_double(res.v_plus_d_hat.value_or(std::nan(""))) << '\n';
            if (!c_trace.empty()) {
                Sink trace(c_trace);
                write_cv_trace_csv(res, trace.stream());
            }
        } else if (*bmg) {
            const auto data = load_centered(b_in);
            const auto lib = resolve_library(b_lib, b_builtin, b_pathway, b_decoys, data.dim());
            BmgOptions opts;
            opts.kappa = b_kappa;
            opts.folds = b_folds;
            opts.grid = AlphaGrid::uniform(b_grid);
            opts.use_lwnl = b_lwnl;
            const auto [est, report] = bmg_with_fallback(data, lib, opts);
            if (!b_report.empty()) {
                Sink rep(b_report);
                write_bmg_report_csv(report, rep.stream());
            }
            Sink out(b_out);
            write_estimator_csv(est, out.stream());
            if (report.fallback_used) std::cerr << "bmg: fallback to LW2004 (" << report.fallback_reason << ")\n";
        } else if (*sweep) {
            const auto cfg = load_config(s_config, global);
            Sink out(s_out);
            std::ostringstream head;
            write_trial_header(head);
            out.record(head.str());
            run_trial_sweep(cfg, [&](const TrialRecord& r) { out.record(record_text(r)); });
        } else if (*verify) {
            PopulationSpec spec;
            spec.kind = parse_population_kind(v_population);
            spec.m = v_m;
            spec.base_seed = global.seed.value_or(0);
            spec.ratio = v_ratio;
            spec.split = v_split;
            spec.decay = v_decay;
            const auto res = run_mp_verification(v_c, spec, v_trials);
            Sink out(v_out);
            write_mp_csv(res, std::string(to_string(spec.kind)), out.stream());
        } else if (*decoy) {
            auto cfg = load_config(d_config, global);
            bool has_decoys = false;
            const auto decoys = build_decoy_library(cfg.population.m);
            for (const auto& g : cfg.library.candidates())
                if (g.name() == decoys.candidates().front().name()) has_decoys = true;
            if (!has_decoys) cfg.library.append(decoys);
            cfg.run_lwnl = false;

            struct Aggregate {
                double sum = 0.0;
                std::size_t scored = 0, admitted = 0, selected = 0;
            };
            std::map<std::string, Aggregate> agg;
            Sink out(d_out);
            out.record("cell,n_train,trial,candidate,admitted,mean_cv_nll,best_alpha,selected,margin,delta\n");
            run_trial_sweep(cfg, [&](const TrialRecord& r) {
                std::ostringstream os;
                const std::string prefix =
                    std::to_string(r.cell) + ',' + std::to_string(r.n_train) + ',' + std::to_string(r.trial) + ',';
                write_bmg_report_csv(r.ad_report, os, false, "", prefix);
                out.record(os.str());
                for (const auto& c : r.ad_report.candidates) {
                    auto& a = agg[c.name];
                    if (c.admitted) {
                        ++a.admitted;
                        if (std::isfinite(c.mean_cv_nll)) {
                            a.sum += c.mean_cv_nll;
                            ++a.scored;
                        }
                    }
                    if (!r.ad_report.fallback_used && c.name == r.ad_report.selected) ++a.selected;
                }
            });
            if (!d_summary.empty()) {
                std::set<std::string> decoy_names;
                for (const auto& g : decoys.candidates()) decoy_names.insert(g.name());
                Sink sum(d_summary);
                sum.stream() << "candidate,role,admitted_trials,mean_cv_nll,selected_trials\n";
                for (const auto& g : cfg.library.candidates()) {
                    const auto& a = agg[g.name()];
                    sum.stream() << g.name() << ',' << (decoy_names.count(g.name()) ? "decoy" : "library") << ','
                                 << a.admitted << ','
                                 << format_double(a.scored ? a.sum / static_cast<double>(a.scored) : INFINITY) << ','
                                 << a.selected << '\n';
                }
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
