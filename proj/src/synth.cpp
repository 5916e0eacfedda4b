#include "symshrink/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "symshrink/error.hpp"
#include "symshrink/format.hpp"
#include "symshrink/shrinkage.hpp"

namespace symshrink {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RowMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    RowMatrix z(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) z(i, j) = normal(rng);
    return z;
}

SymmetricMatrix from_eigen(const RowMatrix& a) {
    const auto m = static_cast<std::size_t>(a.rows());
    return SymmetricMatrix(m, std::vector<double>(a.data(), a.data() + m * m));
}

RowMatrix to_eigen(const SymmetricMatrix& a) {
    const auto m = static_cast<Eigen::Index>(a.dim());
    return Eigen::Map<const RowMatrix>(a.entries().data(), m, m);
}

SymmetricMatrix with_ridge(const SymmetricMatrix& a) {
    const double ridge = kPopulationRidge * a.trace() / static_cast<double>(a.dim());
    return linear_combination(1.0, a, 1.0, SymmetricMatrix::identity(a.dim(), ridge));
}

// Q diag(values) Q^T with a seeded orthogonal Q.
SymmetricMatrix conjugated_diagonal(const std::vector<double>& values, std::uint64_t seed) {
    const std::size_t m = values.size();
    const auto q_entries = random_orthogonal(m, seed);
    const Eigen::Map<const RowMatrix> q(q_entries.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    const Eigen::Map<const Eigen::VectorXd> d(values.data(), static_cast<Eigen::Index>(m));
    const RowMatrix out = q * d.asDiagonal() * q.transpose();
    return from_eigen(out);
}

void check_spd(const SymmetricMatrix& sigma, const char* who) {
    const auto sd = spectral(sigma);
    const double lmax = sd.eigenvalues.front();
    if (!(lmax > 0.0) || sd.eigenvalues.back() < 1e-8 * lmax) {
        throw NumericalError(std::string(who) + ": constructed population is not positive definite",
                             matrix_hash(sigma));
    }
}

const GroupAction& require_group(const PopulationSpec& spec) {
    if (!spec.group) throw ConfigError("population " + std::string(to_string(spec.kind)) + " needs a group");
    if (spec.group->dim() != spec.m) throw DimensionError("population group dimension differs from m");
    return *spec.group;
}

Dataset sample_rows(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed, bool center) {
    if (n == 0) throw ConfigError("sample_gaussian: N must be positive");
    const auto sd = spectral(sigma);
    if (!(sd.eigenvalues.back() > 0.0)) throw ConfigError("sample_gaussian: covariance is not positive definite");
    const std::size_t m = sigma.dim();
    std::vector<double> roots(m);
    for (std::size_t k = 0; k < m; ++k) roots[k] = std::sqrt(sd.eigenvalues[k]);
    const RowMatrix root = to_eigen(sd.reconstruct(roots));
    const RowMatrix x = gaussian_matrix(n, m, seed) * root;
    std::vector<double> rows(x.data(), x.data() + n * m);
    return center ? Dataset::centered_from(n, m, std::move(rows)) : Dataset::known_zero_mean(n, m, std::move(rows));
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string csv_safe(std::string s) {
    for (auto& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    return s;
}

}  // namespace

std::string_view to_string(PopulationKind kind) noexcept {
    switch (kind) {
        case PopulationKind::RandomSPD: return "RandomSPD";
        case PopulationKind::GroupInvariant: return "GroupInvariant";
        case PopulationKind::DeltaControlled: return "DeltaControlled";
        case PopulationKind::Identity: return "Identity";
        case PopulationKind::TwoBlock: return "TwoBlock";
        case PopulationKind::GeometricSpread: return "GeometricSpread";
    }
    return "Identity";
}

PopulationKind parse_population_kind(std::string_view text) {
    static const std::map<std::string, PopulationKind, std::less<>> names = {
        {"RandomSPD", PopulationKind::RandomSPD},           {"random-spd", PopulationKind::RandomSPD},
        {"GroupInvariant", PopulationKind::GroupInvariant}, {"group-invariant", PopulationKind::GroupInvariant},
        {"DeltaControlled", PopulationKind::DeltaControlled}, {"delta-controlled", PopulationKind::DeltaControlled},
        {"Identity", PopulationKind::Identity},             {"identity", PopulationKind::Identity},
        {"TwoBlock", PopulationKind::TwoBlock},             {"two-block", PopulationKind::TwoBlock},
        {"GeometricSpread", PopulationKind::GeometricSpread}, {"geometric-spread", PopulationKind::GeometricSpread},
    };
    const auto it = names.find(text);
    if (it == names.end()) throw ConfigError("unknown population '" + std::string(text) + "'");
    return it->second;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t trial, std::uint64_t stream) {
    std::uint64_t h = splitmix(base);
    h = splitmix(h ^ cell);
    h = splitmix(h ^ trial);
    return splitmix(h ^ stream);
}

std::vector<double> random_orthogonal(std::size_t m, std::uint64_t seed) {
    const RowMatrix z = gaussian_matrix(m, m, seed);
    Eigen::HouseholderQR<RowMatrix> qr(z);
    RowMatrix q = qr.householderQ();
    const RowMatrix r = qr.matrixQR();
    // Sign fix so that Q is Haar distributed.
    for (Eigen::Index k = 0; k < q.cols(); ++k)
        if (r(k, k) < 0.0) q.col(k) *= -1.0;
    return std::vector<double>(q.data(), q.data() + m * m);
}

SymmetricMatrix random_source(std::size_t m, std::uint64_t seed, double source_correlation) {
    if (m == 0) throw ConfigError("population: m must be positive");
    if (!(std::abs(source_correlation) < 1.0)) throw ConfigError("source_correlation must lie in (-1, 1)");
    RowMatrix a = gaussian_matrix(m, m, seed);
    if (source_correlation != 0.0) {
        RowMatrix c(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                c(i, j) = std::pow(source_correlation, std::abs(static_cast<double>(i) - static_cast<double>(j)));
        const Eigen::LLT<RowMatrix> llt(c);
        a = RowMatrix(llt.matrixL()) * a;
    }
    const RowMatrix s = a * a.transpose() / static_cast<double>(m);
    return from_eigen(s);
}

Population make_population_detailed(const PopulationSpec& spec) {
    if (spec.m == 0) throw ConfigError("population: m must be positive");
    Population out{SymmetricMatrix(spec.m), {}, 0.0};
    const std::size_t m = spec.m;
    switch (spec.kind) {
        case PopulationKind::Identity:
            out.sigma = SymmetricMatrix::identity(m);
            return out;
        case PopulationKind::RandomSPD:
            out.sigma = with_ridge(random_source(m, spec.base_seed, spec.source_correlation));
            break;
        case PopulationKind::GroupInvariant: {
            const auto& g = require_group(spec);
            out.sigma = with_ridge(reynolds_project(g, random_source(m, spec.base_seed, spec.source_correlation)));
            break;
        }
        case PopulationKind::DeltaControlled: {
            const auto& g = require_group(spec);
            const auto s = random_source(m, spec.base_seed, spec.source_correlation);
            const auto p = reynolds_project(g, s);
            const auto b = linear_combination(1.0, s, -1.0, p);
            auto at = [&](double t) { return with_ridge(linear_combination(1.0, p, t, b)); };
            const double top = delta_residual(g, at(1.0));
            if (!(spec.target_delta >= 0.0) || spec.target_delta > top) {
                throw ConfigError("DeltaControlled: target delta " + format_double(spec.target_delta) +
                                  " outside the attainable range [0, " + format_double(top) + "]");
            }
            double lo = 0.0, hi = 1.0, t = 1.0, d = top;
            for (int it = 0; it < 200; ++it) {
                t = 0.5 * (lo + hi);
                d = delta_residual(g, at(t));
                out.trace.push_back({t, d});
                if (std::abs(d - spec.target_delta) <= 1e-4) break;
                (d < spec.target_delta ? lo : hi) = t;
            }
            out.sigma = at(t);
            out.achieved_delta = d;
            break;
        }
        case PopulationKind::TwoBlock: {
            if (!(spec.ratio > 0.0) || !(spec.split >= 0.0 && spec.split <= 1.0)) {
                throw ConfigError("TwoBlock: ratio must be positive and split in [0, 1]");
            }
            const auto upper = static_cast<std::size_t>(std::lround(spec.split * static_cast<double>(m)));
            std::vector<double> values(m, 1.0);
            for (std::size_t k = 0; k < upper; ++k) values[k] = spec.ratio;
            out.sigma = with_ridge(conjugated_diagonal(values, spec.base_seed));
            break;
        }
        case PopulationKind::GeometricSpread: {
            if (!(spec.decay > 0.0 && spec.decay <= 1.0)) throw ConfigError("GeometricSpread: decay must be in (0, 1]");
            std::vector<double> values(m);
            for (std::size_t k = 0; k < m; ++k) values[k] = std::pow(spec.decay, static_cast<double>(k));
            out.sigma = with_ridge(conjugated_diagonal(values, spec.base_seed));
            break;
        }
    }
    check_spd(out.sigma, "make_population");
    return out;
}

SymmetricMatrix make_population(const PopulationSpec& spec) { return make_population_detailed(spec).sigma; }

Dataset sample_gaussian(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed) {
    return sample_rows(sigma, n, seed, true);
}

Dataset sample_gaussian_zero_mean(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed) {
    return sample_rows(sigma, n, seed, false);
}

// ---- Marchenko-Pastur check ----

const PrialRow& MpVerification::row(const std::string& estimator) const {
    for (const auto& r : rows)
        if (r.estimator == estimator) return r;
    throw ConfigError("no PRIAL row for '" + estimator + "'");
}

MpVerification run_mp_verification(double c, const PopulationSpec& spec, std::size_t trials) {
    if (!(c > 0.0 && c < 1.0)) throw ConfigError("verify-lwnl: c must lie in (0, 1)");
    if (trials < 10) throw ConfigError("verify-lwnl: at least 10 trials");
    const auto sigma = make_population(spec);
    MpVerification out;
    out.c = c;
    out.m = spec.m;
    out.n = static_cast<std::size_t>(std::lround(static_cast<double>(spec.m) / c));
    out.trials = trials;

    std::vector<double> loss_s(trials), loss_lw(trials), loss_nl(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto data = sample_gaussian_zero_mean(sigma, out.n, mix_seed(spec.base_seed, 0, t, 7));
        const auto r = sample_covariance(data);
        loss_s[t] = frobenius_distance_squared(r, sigma);
        loss_lw[t] = frobenius_distance_squared(lw2004_auto(data).matrix, sigma);
        loss_nl[t] = frobenius_distance_squared(lwnl_from_covariance(r, out.n).matrix, sigma);
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    const double ms = mean(loss_s);
    auto prial = [&](const std::string& name, const std::vector<double>& loss) {
        const double ratio = mean(loss) / ms;
        // Delta-method standard error of the ratio of means.
        double var = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            const double d = loss[t] - ratio * loss_s[t];
            var += d * d;
        }
        var /= static_cast<double>(trials - 1);
        const double se = std::sqrt(var / static_cast<double>(trials)) / ms;
        return PrialRow{name, 100.0 * (1.0 - ratio), 100.0 * se};
    };
    out.rows.push_back(prial("LW2004", loss_lw));
    out.rows.push_back(prial("LWNL", loss_nl));
    return out;
}

void write_mp_csv(const MpVerification& v, const std::string& population, std::ostream& out, bool header) {
    if (header) out << "population,c,m,n,trials,estimator,prial,se\n";
    for (const auto& r : v.rows) {
        out << population << ',' << format_double(v.c) << ',' << v.m << ',' << v.n << ',' << v.trials << ','
            << r.estimator << ',' << format_double(r.prial) << ',' << format_double(r.se) << '\n';
    }
}

// ---- libraries ----

CandidateLibrary build_pathway_library(const PathwayLayout& layout) {
    const std::size_t k = layout.block_size, p = layout.n_blocks, m = layout.dim();
    if (k < 2 || p < 2) throw ConfigError("pathway library: need blocks of at least 2 and at least 2 blocks");
    const auto natural = contiguous_blocks(k, p);
    auto shuffled_within = [&](std::uint64_t seed) {
        auto blocks = natural;
        for (std::size_t b = 0; b < p; ++b) {
            const auto perm = seeded_shuffle(k, mix_seed(seed, b, 0, 0));
            std::vector<std::uint32_t> reordered(k);
            for (std::size_t i = 0; i < k; ++i) reordered[i] = natural[b][perm[i]];
            blocks[b] = std::move(reordered);
        }
        return blocks;
    };
    const auto zk = cyclic(k);
    CandidateLibrary lib;
    lib.add(GroupAction::trivial(m, "trivial"));
    lib.add(GroupAction::full_symmetric(m, "S_M"));
    lib.add(block_symmetric(m, natural, "pathway-block"));
    lib.add(tied_on_blocks(zk, shuffled_within(layout.alpha_seed), "Z-K-alpha"));
    lib.add(tied_on_blocks(zk, natural, "Z-K-pc1"));
    lib.add(tied_on_blocks(zk, shuffled_within(layout.corrhier_seed), "Z-K-corrhier"));
    lib.add(cartesian_power_on_blocks(zk, natural, "Z-K-pc1-cartesian"));
    lib.add(wreath_on_blocks(zk, natural, WreathTop::Symmetric, "Z-K-pc1-wreath"));
    return lib;
}

CandidateLibrary build_decoy_library(std::size_t m, const PathwayLayout& layout, const DecoySeeds& seeds) {
    if (m != layout.dim()) throw DimensionError("decoy library: m differs from the block layout");
    if (seeds.wrong_scale_sizes.size() != seeds.wrong_scale_seeds.size()) {
        throw ConfigError("decoy library: one seed per wrong-scale block size");
    }
    auto random_blocks = [&](std::size_t size, std::uint64_t seed) {
        if (size == 0 || m % size != 0) {
            throw ConfigError("decoy library: block size " + std::to_string(size) + " does not divide " +
                              std::to_string(m));
        }
        const auto order = seeded_shuffle(m, seed);
        std::vector<std::vector<std::uint32_t>> blocks(m / size);
        for (std::size_t b = 0; b < blocks.size(); ++b)
            blocks[b].assign(order.begin() + static_cast<std::ptrdiff_t>(b * size),
                             order.begin() + static_cast<std::ptrdiff_t>((b + 1) * size));
        return blocks;
    };
    const std::size_t k = layout.block_size, p = layout.n_blocks;
    CandidateLibrary lib;
    // Family A: block-symmetric on partitions with no relation to the data.
    for (auto s : seeds.random_block) lib.add(decoy_random_partition_blocks(m, k, s));
    for (std::size_t i = 0; i < seeds.wrong_scale_sizes.size(); ++i) {
        const std::size_t size = seeds.wrong_scale_sizes[i];
        lib.add(decoy_random_partition_blocks(m, size, seeds.wrong_scale_seeds[i],
                                              "block-S" + std::to_string(size) + "-" + std::to_string(m / size)));
    }
    // Family B: cyclic and Cartesian structure on the wrong domain.
    lib.add(cyclic(m, "Z" + std::to_string(m) + "-flat"));
    lib.add(cartesian_power_on_blocks(cyclic(k), random_blocks(k, seeds.cartesian_random),
                                      "Z" + std::to_string(k) + "-" + std::to_string(p) + "-cartesian-random"));
    if (m % 2 != 0) throw ConfigError("decoy library: m must be even for the pairwise decoys");
    lib.add(cartesian_power_on_blocks(cyclic(2), contiguous_blocks(2, m / 2),
                                      "Z2-" + std::to_string(m / 2) + "-cartesian"));
    // Family C: wreaths with the block hierarchy inverted.
    lib.add(wreath_on_blocks(cyclic(5), random_blocks(5, seeds.wreath_small), WreathTop::Symmetric,
                             "Z5-wr-S" + std::to_string(m / 5)));
    lib.add(wreath_on_blocks(cyclic(2), random_blocks(2, seeds.wreath_pairs), WreathTop::Symmetric,
                             "Z2-wr-S" + std::to_string(m / 2)));
    // Family D: closure of random permutations.
    lib.add(decoy_random_subgroup_closure(m, seeds.subgroup_generators, seeds.subgroup_cap, seeds.subgroup));
    return lib;
}

// ---- sweep ----

const char* const kSweepEstimators[kEstimatorCount] = {"Sample", "LW2004", "LWNL", "ShahBMG", "AD-NLL-BMG",
                                                       "AD-LW-NL-NLL-BMG"};

void SweepConfig::validate() const {
    if (population.m == 0) throw ConfigError("sweep: m must be positive");
    if (n_train.empty()) throw ConfigError("sweep: n_train list is empty");
    for (auto n : n_train)
        if (n == 0) throw ConfigError("sweep: n_train entries must be positive");
    if (n_test < 2) throw ConfigError("sweep: n_test must be at least 2");
    if (trials == 0) throw ConfigError("sweep: trials must be positive");
    if (threads == 0) throw ConfigError("sweep: threads must be positive");
    if (library.empty()) throw ConfigError("sweep: candidate library is empty");
    if (library.dim() != population.m) throw DimensionError("sweep: library dimension differs from m");
    if (bmg.folds < 2) throw ConfigError("sweep: folds must be at least 2");
    if (!(bmg.kappa >= 1.0)) throw ConfigError("sweep: kappa must be at least 1");
    bmg.grid.validate();
}

TrialRecord run_trial(const SweepConfig& config, const SymmetricMatrix& sigma, std::size_t cell, std::size_t trial) {
    TrialRecord rec;
    rec.cell = cell;
    rec.n_train = config.n_train.at(cell);
    rec.trial = trial;
    rec.train_seed = mix_seed(config.seed, cell, trial, 0);
    rec.test_seed = mix_seed(config.seed, cell, trial, 1);
    std::fill(std::begin(rec.nll), std::end(rec.nll), kNaN);
    std::fill(std::begin(rec.frob), std::end(rec.frob), kNaN);
    rec.ad_alpha = rec.ad_margin = rec.ad_delta = rec.adnl_alpha = kNaN;
    try {
        const auto train = sample_gaussian(sigma, rec.n_train, rec.train_seed);
        const auto test = sample_gaussian(sigma, config.n_test, rec.test_seed);
        const auto r_test = sample_covariance(test);
        const auto r_hat = sample_covariance(train);

        auto score = [&](std::size_t k, const SymmetricMatrix& est) {
            rec.nll[k] = gaussian_nll_per_sample(est, r_test).value;
            rec.frob[k] = std::sqrt(frobenius_distance_squared(est, sigma));
        };
        score(0, r_hat);
        score(1, lw2004_auto(train).matrix);

        BmgOptions opts = config.bmg;
        opts.use_lwnl = false;
        auto [ad, report] = bmg_with_fallback(train, config.library, opts);
        rec.ad_selected = report.fallback_used ? "" : report.selected;
        rec.ad_alpha = report.alpha;
        rec.ad_margin = report.bmg_margin;
        rec.ad_delta = report.delta_residual;
        rec.ad_fallback = report.fallback_used;
        score(4, ad.matrix);
        // Shah-BMG is the projection at the AD-selected group; on fallback it reports the fallback.
        score(3, report.fallback_used ? ad.matrix
                                      : shah_projection(r_hat, config.library.find(report.selected)).matrix);
        rec.ad_report = std::move(report);

        if (config.run_lwnl && rec.n_train >= 2) {
            score(2, lwnl(train).matrix);
            opts.use_lwnl = true;
            auto [adnl, nl_report] = bmg_with_fallback(train, config.library, opts);
            rec.adnl_selected = nl_report.fallback_used ? "" : nl_report.selected;
            rec.adnl_alpha = nl_report.alpha;
            rec.adnl_fallback = nl_report.fallback_used;
            score(5, adnl.matrix);
        }
    } catch (const std::exception& e) {
        rec.error = csv_safe(e.what());
    }
    return rec;
}

void run_trial_sweep(const SweepConfig& config, const std::function<void(const TrialRecord&)>& sink) {
    config.validate();
    const auto sigma = make_population(config.population);
    const std::size_t total = config.n_train.size() * config.trials;

    std::vector<std::optional<TrialRecord>> done(total);
    std::mutex mu;
    std::size_t next_emit = 0;
    std::atomic<std::size_t> next_job{0};
    std::exception_ptr sink_error;

    auto worker = [&] {
        for (;;) {
            const std::size_t job = next_job.fetch_add(1);
            if (job >= total) return;
            auto rec = run_trial(config, sigma, job / config.trials, job % config.trials);
            std::lock_guard lock(mu);
            done[job] = std::move(rec);
            // Emit the ready prefix in (cell, trial) order.
            while (next_emit < total && done[next_emit]) {
                if (!sink_error) {
                    try {
                        sink(*done[next_emit]);
                    } catch (...) {
                        sink_error = std::current_exception();
                    }
                }
                done[next_emit].reset();
                ++next_emit;
            }
        }
    };

    const std::size_t n_threads = std::min(config.threads, total);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (sink_error) std::rethrow_exception(sink_error);
}

std::vector<TrialRecord> run_trial_sweep(const SweepConfig& config) {
    std::vector<TrialRecord> out;
    run_trial_sweep(config, [&](const TrialRecord& r) { out.push_back(r); });
    return out;
}

void write_trial_header(std::ostream& out) {
    out << "cell,n_train,trial,train_seed,test_seed,status";
    for (auto* name : kSweepEstimators) out << ",nll_" << name;
    for (auto* name : kSweepEstimators) out << ",frob_" << name;
    out << ",ad_selected,ad_alpha,ad_margin,ad_delta,ad_fallback,adnl_selected,adnl_alpha,adnl_fallback,"
           "choice_agree\n";
}

void write_trial_row(const TrialRecord& r, std::ostream& out) {
    out << r.cell << ',' << r.n_train << ',' << r.trial << ',' << r.train_seed << ',' << r.test_seed << ','
        << (r.error.empty() ? "ok" : r.error);
    for (double v : r.nll) out << ',' << format_double(v);
    for (double v : r.frob) out << ',' << format_double(v);
    out << ',' << r.ad_selected << ',' << format_double(r.ad_alpha) << ',' << format_double(r.ad_margin) << ','
        << format_double(r.ad_delta) << ',' << (r.ad_fallback ? 1 : 0) << ',' << r.adnl_selected << ','
        << format_double(r.adnl_alpha) << ',' << (r.adnl_fallback ? 1 : 0) << ',' << (r.choice_agree() ? 1 : 0)
        << '\n';
}

// ---- config ----

SweepConfig parse_sweep_config(std::string_view text, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
        }
        kv[trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
    }

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        auto v = it->second;
        kv.erase(it);
        return v;
    };
    auto to_size = [&](const std::string& key, const std::string& v) -> std::size_t {
        try {
            std::size_t used = 0;
            const auto x = std::stoull(v, &used);
            if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(origin + ": '" + key + "' expects a non-negative integer, got '" + v + "'");
        }
    };
    auto to_real = [&](const std::string& key, const std::string& v) -> double {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(origin + ": '" + key + "' expects a number, got '" + v + "'");
        }
    };
    auto to_bool = [&](const std::string& key, const std::string& v) {
        if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "off" || v == "no") return false;
        throw ConfigError(origin + ": '" + key + "' expects true or false, got '" + v + "'");
    };

    SweepConfig cfg;
    PathwayLayout layout;
    if (auto v = take("population")) cfg.population.kind = parse_population_kind(*v);
    if (auto v = take("block_size")) layout.block_size = to_size("block_size", *v);
    if (auto v = take("n_blocks")) layout.n_blocks = to_size("n_blocks", *v);
    if (auto v = take("m")) {
        cfg.population.m = to_size("m", *v);
    } else {
        cfg.population.m = layout.dim();
    }
    const std::size_t m = cfg.population.m;
    if (m == 0) throw ConfigError(origin + ": m must be positive");
    if (auto v = take("population_seed")) cfg.population.base_seed = to_size("population_seed", *v);
    if (auto v = take("group")) cfg.population.group = builtin_group(*v, m);
    if (auto v = take("target_delta")) cfg.population.target_delta = to_real("target_delta", *v);
    if (auto v = take("ratio")) cfg.population.ratio = to_real("ratio", *v);
    if (auto v = take("split")) cfg.population.split = to_real("split", *v);
    if (auto v = take("decay")) cfg.population.decay = to_real("decay", *v);
    if (auto v = take("source_correlation")) cfg.population.source_correlation = to_real("source_correlation", *v);
    if (auto v = take("n_train")) {
        cfg.n_train.clear();
        for (const auto& item : split_list(*v)) cfg.n_train.push_back(to_size("n_train", item));
    }
    if (auto v = take("n_test")) cfg.n_test = to_size("n_test", *v);
    if (auto v = take("trials")) cfg.trials = to_size("trials", *v);
    if (auto v = take("seed")) cfg.seed = to_size("seed", *v);
    if (auto v = take("threads")) cfg.threads = to_size("threads", *v);
    if (auto v = take("kappa")) cfg.bmg.kappa = to_real("kappa", *v);
    if (auto v = take("grid")) cfg.bmg.grid = AlphaGrid::uniform(to_size("grid", *v));
    if (auto v = take("folds")) cfg.bmg.folds = to_size("folds", *v);
    if (auto v = take("lwnl")) cfg.run_lwnl = to_bool("lwnl", *v);

    const std::string library = take("library").value_or("pathway");
    if (library == "pathway") {
        if (layout.dim() != m) throw DimensionError(origin + ": pathway library needs m = block_size * n_blocks");
        cfg.library = build_pathway_library(layout);
    } else {
        for (const auto& spec : split_list(library)) cfg.library.add(builtin_group(spec, m));
    }
    if (auto v = take("decoys"); v && to_bool("decoys", *v)) cfg.library.append(build_decoy_library(m, layout));

    if (!kv.empty()) throw ConfigError(origin + ": unknown key '" + kv.begin()->first + "'");
    cfg.validate();
    return cfg;
}

SweepConfig read_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sweep config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_sweep_config(buf.str(), path);
}

}  // namespace symshrink
