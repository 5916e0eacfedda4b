#include "symshrink/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "symshrink/error.hpp"
#include "symshrink/kernels.hpp"
#include "symshrink/shrinkage.hpp"

namespace symshrink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double trace_of_product(const std::vector<double>& a, const std::vector<double>& b, std::size_t m) {
    // tr(AB) = sum_ij A_ij B_ji
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) s += a[i * m + j] * b[j * m + i];
    return s;
}

AsymptoticPrediction predict_from_inverse(const SymmetricMatrix& sigma, const SymmetricMatrix& sigma_inv,
                                          const GroupAction& g, double n) {
    const std::size_t m = sigma.dim();
    const auto b = linear_combination(1.0, sigma, -1.0, reynolds_project(g, sigma));
    AsymptoticPrediction out;
    const double b_norm2 = frobenius_norm(b) * frobenius_norm(b);
    const double s_norm2 = frobenius_norm(sigma) * frobenius_norm(sigma);
    const double md = static_cast<double>(m);
    const double dg = static_cast<double>(commutant_dimension(g));
    if (b_norm2 <= 1e-14 * s_norm2) {
        out.matched_limit = true;
        out.alpha = 1.0;
        out.c_sigma_g = md * (md + 1.0) - 2.0 * dg;
        return out;
    }
    const auto sib = multiply(sigma_inv, b);
    double tr = 0.0;
    for (std::size_t i = 0; i < m; ++i) tr += sib[i * m + i];
    out.trace_inv_b = tr;
    out.q_b = trace_of_product(sib, sib, m);
    out.c_sigma_g = md * (md + 1.0) - 2.0 * dg - 2.0 * (md + 1.0) * tr;
    const double denom = n * out.q_b + out.c_sigma_g;
    out.alpha = denom > 0.0 ? std::clamp(out.c_sigma_g / denom, 0.0, 1.0) : 1.0;
    return out;
}

}  // namespace

AlphaGrid AlphaGrid::uniform(std::size_t n) {
    if (n < 2) throw ConfigError("alpha grid needs at least two points");
    AlphaGrid g;
    g.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.points[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    g.points.back() = 1.0;
    return g;
}

void AlphaGrid::validate() const {
    if (points.size() < 2 || points.front() != 0.0 || points.back() != 1.0) {
        throw ConfigError("alpha grid must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i] > points[i - 1])) throw ConfigError("alpha grid must be strictly increasing");
    }
}

FoldScheme FoldScheme::contiguous(std::size_t n_rows, std::size_t k) {
    if (k < 2) throw ConfigError("fold count must be at least 2");
    if (n_rows < k) {
        throw ConfigError("cannot split " + std::to_string(n_rows) + " rows into " + std::to_string(k) + " folds");
    }
    FoldScheme s;
    s.k = k;
    s.folds.resize(k);
    const std::size_t base = n_rows / k, extra = n_rows % k;
    std::size_t row = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) s.folds[f].push_back(row++);
    }
    return s;
}

FoldScheme FoldScheme::shuffled(std::size_t n_rows, std::size_t k, std::uint64_t seed) {
    FoldScheme s = contiguous(n_rows, k);
    std::vector<std::size_t> perm(n_rows);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (auto& fold : s.folds) {
        for (auto& r : fold) r = perm[r];
        std::sort(fold.begin(), fold.end());
    }
    return s;
}

std::vector<std::size_t> FoldScheme::complement(std::size_t fold, std::size_t n_rows) const {
    std::vector<char> held(n_rows, 0);
    for (auto r : folds.at(fold)) held[r] = 1;
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < n_rows; ++r)
        if (!held[r]) out.push_back(r);
    return out;
}

double CalibrationResult::best_score() const {
    double best = kInf;
    for (const auto& [a, s] : per_alpha_scores) best = std::min(best, s);
    return best;
}

std::size_t commutant_dimension(const GroupAction& g) {
    switch (g.kind()) {
        case GroupKind::HaarOrthogonal: return 1;
        case GroupKind::FullSymmetric: return g.dim() == 1 ? 1 : 2;
        default: return g.partition().d_g;
    }
}

CalibrationResult mse_plugin_alpha(const Dataset& data, const GroupAction& g) {
    if (data.n_obs() < 2) throw ConfigError("mse_plugin_alpha: needs at least two observations");
    if (g.dim() != data.dim()) throw DimensionError("mse_plugin_alpha: group and data dimensions differ");
    const std::size_t m = data.dim();
    const std::size_t n = data.n_obs();
    const auto r_hat = sample_covariance(data);
    const auto residual = linear_combination(1.0, r_hat, -1.0, reynolds_project(g, r_hat));

    CalibrationResult out;
    out.method = CalibrationMethod::MsePlugin;

    const double r_norm2 = frobenius_norm(r_hat) * frobenius_norm(r_hat);
    const double denom = frobenius_norm(residual) * frobenius_norm(residual);
    out.v_plus_d_hat = denom;

    // P_perp(x x^T) - P_perp(R) = P_perp(x x^T - R).
    const auto& kt = kernels::active();
    double v_perp = 0.0;
    std::vector<double> centred(m * m);
    for (std::size_t k = 0; k < n; ++k) {
        const auto x = data.row(k);
        for (std::size_t i = 0; i < m; ++i) {
            kt.axpby(x[i], x.data(), -1.0, r_hat.row(i).data(), centred.data() + i * m, m);
        }
        const SymmetricMatrix d(m, centred);
        v_perp += frobenius_distance_squared(d, reynolds_project(g, d));
    }
    v_perp /= static_cast<double>(n) * static_cast<double>(n);
    out.v_perp_hat = v_perp;

    if (denom <= 1e-14 * r_norm2) {
        out.alpha = 1.0;
        out.denominator_degenerate = true;
        return out;
    }
    out.alpha = std::clamp(v_perp / denom, 0.0, 1.0);
    return out;
}

CalibrationResult cv_nll_alpha(const Dataset& data, const GroupAction& g, const AlphaGrid& grid,
                               const FoldScheme& folds, bool use_lwnl_sample_term) {
    grid.validate();
    if (!data.centered()) throw ConfigError("cv_nll_alpha: data must be centered");
    if (g.dim() != data.dim()) throw DimensionError("cv_nll_alpha: group and data dimensions differ");
    const std::size_t n = data.n_obs();
    if (folds.folds.size() < 2) throw ConfigError("cv_nll_alpha: need at least two folds");
    for (std::size_t f = 0; f < folds.folds.size(); ++f) {
        const std::size_t held = folds.folds[f].size();
        if (held == 0 || n - held < 2) {
            throw ConfigError("cv_nll_alpha: fold " + std::to_string(f) +
                              " leaves an empty test block or fewer than two training rows");
        }
    }

    const std::size_t na = grid.points.size();
    std::vector<double> sums(na, 0.0);
    CalibrationResult out;
    out.method = CalibrationMethod::CvNll;

    for (std::size_t f = 0; f < folds.folds.size(); ++f) {
        // Folds are rows of the globally centered matrix; they are not re-centered.
        const auto train = data.rows_of_centered(folds.complement(f, n));
        const auto test = data.rows_of_centered(folds.folds[f]);
        const auto r_train = sample_covariance(train);
        const auto r_test = sample_covariance(test);
        const auto projected = reynolds_project(g, r_train);
        const auto base = use_lwnl_sample_term ? lwnl_from_covariance(r_train, train.n_obs()).matrix : r_train;
        for (std::size_t a = 0; a < na; ++a) {
            const double alpha = grid.points[a];
            const auto blend = ad_blend_projected(base, projected, g.name(), alpha).matrix;
            const double nll = gaussian_nll_per_sample(blend, r_test).value;
            sums[a] += nll;
            out.trace.push_back({f, alpha, nll});
        }
    }

    // Scores within kCvTieTolerance (relative) of the incumbent count as ties, so blends
    // that differ only by rounding keep the smaller alpha.
    const double k = static_cast<double>(folds.folds.size());
    std::size_t best = 0;
    for (std::size_t a = 0; a < na; ++a) {
        const double mean = sums[a] / k;
        out.per_alpha_scores.emplace_back(grid.points[a], mean);
        const double incumbent = out.per_alpha_scores[best].second;
        const double slack = std::isfinite(incumbent) ? kCvTieTolerance * std::max(1.0, std::abs(incumbent)) : 0.0;
        if (mean < incumbent - slack) best = a;
    }
    out.alpha = grid.points[best];
    return out;
}

void write_cv_trace_csv(const CalibrationResult& result, std::ostream& out) {
    out << "fold,alpha,nll\n";
    char buf[96];
    for (const auto& row : result.trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", row.fold, row.alpha, row.nll);
        out << buf;
    }
}

AsymptoticPrediction predict_alpha_nll_asymptotic(const SymmetricMatrix& sigma, const GroupAction& g,
                                                  double n) {
    if (g.dim() != sigma.dim()) throw DimensionError("predict_alpha_nll_asymptotic: dimension mismatch");
    return predict_from_inverse(sigma, inverse_spd(sigma), g, n);
}

AsymptoticPrediction predict_alpha_nll_plugin(const SymmetricMatrix& r_hat, const GroupAction& g,
                                              double n) {
    if (g.dim() != r_hat.dim()) throw DimensionError("predict_alpha_nll_plugin: dimension mismatch");
    const double ridge = kPluginRidge * r_hat.trace() / static_cast<double>(r_hat.dim());
    const auto reg = linear_combination(1.0, r_hat, 1.0, SymmetricMatrix::identity(r_hat.dim(), ridge));
    return predict_from_inverse(r_hat, inverse_spd(reg), g, n);
}

double predict_n_star(const SymmetricMatrix& sigma, const GroupAction& g) {
    const auto p = predict_alpha_nll_asymptotic(sigma, g, 1);
    if (p.matched_limit) throw ConfigError("predict_n_star: undefined in the matched limit (B_G = 0)");
    return p.c_sigma_g / p.q_b;
}

}  // namespace symshrink
