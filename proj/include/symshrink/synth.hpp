#pragma once

// Synthetic populations with known structure, Gaussian sampling, the
// Marchenko-Pastur check for the spectrum estimators, candidate libraries
// and the Monte Carlo trial engine.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "symshrink/bmg.hpp"
#include "symshrink/groups.hpp"
#include "symshrink/matrix.hpp"

namespace symshrink {

enum class PopulationKind { RandomSPD, GroupInvariant, DeltaControlled, Identity, TwoBlock, GeometricSpread };

std::string_view to_string(PopulationKind kind) noexcept;
PopulationKind parse_population_kind(std::string_view text);

struct PopulationSpec {
    PopulationKind kind = PopulationKind::Identity;
    std::size_t m = 0;
    std::uint64_t base_seed = 0;
    std::optional<GroupAction> group;  // GroupInvariant, DeltaControlled
    double target_delta = 0.0;         // DeltaControlled
    double ratio = 10.0;               // TwoBlock: upper eigenvalue over lower
    double split = 0.5;                // TwoBlock: fraction of eigenvalues at the upper level
    double decay = 0.95;               // GeometricSpread: lambda_k = decay^k
    // Random sources only: AR(1) correlation rho^|i-j| imposed on the Wishart draw,
    // S = L (A A^T / m) L^T with L the Cholesky factor of C. Zero gives the plain A A^T / m.
    double source_correlation = 0.0;
};

struct BisectionStep {
    double t;
    double delta;
};

struct Population {
    SymmetricMatrix sigma;
    std::vector<BisectionStep> trace;  // DeltaControlled only
    double achieved_delta = 0.0;       // DeltaControlled only
};

// Ridge added to every random construction.
inline constexpr double kPopulationRidge = 1e-6;

Population make_population_detailed(const PopulationSpec& spec);
SymmetricMatrix make_population(const PopulationSpec& spec);

// The unprojected random source shared by RandomSPD, GroupInvariant and DeltaControlled.
SymmetricMatrix random_source(std::size_t m, std::uint64_t seed, double source_correlation = 0.0);

// Uniformly distributed orthogonal matrix (row-major), from QR of a Gaussian draw.
std::vector<double> random_orthogonal(std::size_t m, std::uint64_t seed);

// Stream-splitting seed derivation; distinct (cell, trial, stream) give independent streams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t trial, std::uint64_t stream);

// N rows of z Sigma^{1/2}, z standard normal, then centered on the sample mean.
Dataset sample_gaussian(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed);
// Same draws without centering; the rows carry the known-zero-mean model.
Dataset sample_gaussian_zero_mean(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed);

struct PrialRow {
    std::string estimator;
    double prial = 0.0;  // percent
    double se = 0.0;     // Monte Carlo standard error, percent
};

struct MpVerification {
    double c = 0.0;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t trials = 0;
    std::vector<PrialRow> rows;  // LW2004, LWNL

    const PrialRow& row(const std::string& estimator) const;
};

// PRIAL of LW2004 and LW-NL over the sample covariance, N = round(M / c).
MpVerification run_mp_verification(double c, const PopulationSpec& spec, std::size_t trials);
void write_mp_csv(const MpVerification& v, const std::string& population, std::ostream& out, bool header = true);

// ---- candidate libraries ---------------------------------------------------

struct PathwayLayout {
    std::size_t block_size = 20;  // K
    std::size_t n_blocks = 5;     // P
    std::uint64_t alpha_seed = 101;
    std::uint64_t corrhier_seed = 102;
    std::size_t dim() const noexcept { return block_size * n_blocks; }
};

// trivial, S_M, pathway-block, Z-K-alpha, Z-K-pc1, Z-K-corrhier, Z-K-pc1-cartesian,
// Z-K-pc1-wreath. The pc1 ordering is the natural index order inside each block; the
// alpha and corrhier orderings are seeded shuffles inside each block.
CandidateLibrary build_pathway_library(const PathwayLayout& layout = {});

struct DecoySeeds {
    std::vector<std::uint64_t> random_block = {1, 2, 3};
    std::vector<std::size_t> wrong_scale_sizes = {10, 4, 50};
    std::vector<std::uint64_t> wrong_scale_seeds = {11, 12, 13};
    std::uint64_t cartesian_random = 21;
    std::uint64_t wreath_small = 31;  // Z5 wr S_{m/5}
    std::uint64_t wreath_pairs = 32;  // Z2 wr S_{m/2}
    std::uint64_t subgroup = 42;
    std::size_t subgroup_generators = 5;
    std::uint64_t subgroup_cap = 1000000;
};

// Twelve decoys in four families: wrong-partition block groups, wrong-domain cyclic
// and Cartesian groups, inverted-scale wreaths, and a random-subgroup closure.
CandidateLibrary build_decoy_library(std::size_t m, const PathwayLayout& layout = {}, const DecoySeeds& seeds = {});

// ---- trial sweep -----------------------------------------------------------

inline constexpr std::size_t kEstimatorCount = 6;
// Sample, LW2004, LWNL, ShahBMG, AD-NLL-BMG, AD-LW-NL-NLL-BMG
extern const char* const kSweepEstimators[kEstimatorCount];

struct SweepConfig {
    PopulationSpec population;
    std::vector<std::size_t> n_train = {50};
    std::size_t n_test = 200;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    CandidateLibrary library;
    BmgOptions bmg;
    bool run_lwnl = true;  // LWNL and AD-LW-NL-NLL-BMG columns

    void validate() const;
};

struct TrialRecord {
    std::size_t cell = 0;
    std::size_t n_train = 0;
    std::size_t trial = 0;
    std::uint64_t train_seed = 0;
    std::uint64_t test_seed = 0;
    std::string error;  // empty on success
    double nll[kEstimatorCount] = {};
    double frob[kEstimatorCount] = {};
    std::string ad_selected;
    double ad_alpha = 0.0;
    double ad_margin = 0.0;
    double ad_delta = 0.0;
    bool ad_fallback = false;
    std::string adnl_selected;
    double adnl_alpha = 0.0;
    bool adnl_fallback = false;
    BMGReport ad_report;  // full per-candidate scores, not written to the trial CSV

    bool choice_agree() const { return ad_selected == adnl_selected; }
};

// One trial; all estimators share the same train/test split.
TrialRecord run_trial(const SweepConfig& config, const SymmetricMatrix& sigma, std::size_t cell,
                      std::size_t trial);

// Runs every (cell, trial) and hands records to `sink` in (cell, trial) order,
// independent of the thread count.
void run_trial_sweep(const SweepConfig& config, const std::function<void(const TrialRecord&)>& sink);
std::vector<TrialRecord> run_trial_sweep(const SweepConfig& config);

void write_trial_header(std::ostream& out);
void write_trial_row(const TrialRecord& r, std::ostream& out);

// key=value text; '#' starts a comment. Keys:
//   population, m, population_seed, group, target_delta, ratio, split, decay,
//   source_correlation, n_train (comma list), n_test, trials, seed, threads, kappa,
//   grid, folds, lwnl, library (pathway | comma list of builtin group specs),
//   decoys (true/false), block_size, n_blocks
SweepConfig parse_sweep_config(std::string_view text, const std::string& origin = "<string>");
SweepConfig read_sweep_config(const std::string& path);

}  // namespace symshrink
