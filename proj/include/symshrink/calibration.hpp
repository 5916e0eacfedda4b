#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "symshrink/groups.hpp"
#include "symshrink/matrix.hpp"

namespace symshrink {

struct AlphaGrid {
    std::vector<double> points;

    // {0, 1/(n-1), ..., 1}; the default n = 13 has spacing 1/12.
    static AlphaGrid uniform(std::size_t n = 13);
    // Sorted, strictly increasing, inside [0, 1] with both endpoints.
    void validate() const;
};

struct FoldScheme {
    std::size_t k = 5;
    std::vector<std::vector<std::size_t>> folds;  // held-out rows per fold

    // Contiguous blocks whose sizes differ by at most one.
    static FoldScheme contiguous(std::size_t n_rows, std::size_t k = 5);
    // Same block sizes over a seeded permutation of the rows.
    static FoldScheme shuffled(std::size_t n_rows, std::size_t k, std::uint64_t seed);
    std::vector<std::size_t> complement(std::size_t fold, std::size_t n_rows) const;
};

enum class CalibrationMethod { MsePlugin, CvNll };

struct CvTraceRow {
    std::size_t fold;
    double alpha;
    double nll;
};

struct CalibrationResult {
    double alpha = 0.0;
    CalibrationMethod method = CalibrationMethod::MsePlugin;
    std::vector<std::pair<double, double>> per_alpha_scores;  // (alpha, mean held-out NLL)
    std::optional<double> v_perp_hat;
    std::optional<double> v_plus_d_hat;
    bool denominator_degenerate = false;
    std::vector<CvTraceRow> trace;

    // Smallest mean score on the grid (CvNll only).
    double best_score() const;
};

// alpha = clip(V_perp / (V_perp + D), 0, 1) with
//   V_perp     = (1/N^2) sum_k || P_perp(x_k x_k^T) - P_perp(R) ||_F^2
//   V_perp + D = || R - Pi_G(R) ||_F^2.
// When the denominator is below 1e-14 ||R||_F^2 the group fixes R and alpha = 1.
CalibrationResult mse_plugin_alpha(const Dataset& data, const GroupAction& g);

// K-fold held-out Gaussian NLL over the grid; ties resolve to the smallest alpha.
// Two scores tie when they differ by at most kCvTieTolerance relative to the incumbent.
// With use_lwnl_sample_term the unstructured term of the blend is the LW-NL
// estimate of each training complement.
inline constexpr double kCvTieTolerance = 1e-12;
CalibrationResult cv_nll_alpha(const Dataset& data, const GroupAction& g, const AlphaGrid& grid,
                               const FoldScheme& folds, bool use_lwnl_sample_term = false);

void write_cv_trace_csv(const CalibrationResult& result, std::ostream& out);

// Dimension of the symmetric commutant: unordered orbit count for permutation
// actions, 2 for compound symmetry (1 when M = 1), 1 for the orthogonal group.
std::size_t commutant_dimension(const GroupAction& g);

struct AsymptoticPrediction {
    double alpha = 1.0;
    double c_sigma_g = 0.0;   // M(M+1) - 2 d_G - 2(M+1) tr(Sigma^-1 B)
    double q_b = 0.0;         // tr(Sigma^-1 B Sigma^-1 B)
    double trace_inv_b = 0.0; // tr(Sigma^-1 B)
    bool matched_limit = false;
};

// Held-out-NLL optimum c / (N Q_B + c), clipped to [0, 1], with B = Sigma - Pi_G(Sigma).
// It agrees with c / (N Q_B) to leading order in 1/N and equals 1/2 at N = c / Q_B.
// The matched limit (||B||_F^2 <= 1e-14 ||Sigma||_F^2) returns alpha = 1.
AsymptoticPrediction predict_alpha_nll_asymptotic(const SymmetricMatrix& sigma, const GroupAction& g,
                                                  double n);
// Same with a sample covariance in place of Sigma, regularized by
// kPluginRidge * tr(R)/M * I before inversion. The inverse of a sample covariance is
// biased upward at small N, so the plug-in overstates Q_B there.
AsymptoticPrediction predict_alpha_nll_plugin(const SymmetricMatrix& r_hat, const GroupAction& g,
                                              double n);
inline constexpr double kPluginRidge = 1e-8;

// c / Q_B, the N at which the asymptotic prediction equals 1/2. Throws ConfigError in
// the matched limit where it is undefined.
double predict_n_star(const SymmetricMatrix& sigma, const GroupAction& g);

}  // namespace symshrink
