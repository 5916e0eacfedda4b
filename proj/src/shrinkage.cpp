#include "symshrink/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "symshrink/calibration.hpp"
#include "symshrink/error.hpp"

namespace symshrink {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt5 = std::sqrt(5.0);

// Relative threshold below which a sample eigenvalue is treated as zero.
constexpr double kExcludeRel = 1e-10;

void mark_alpha(EstimatorResult& r, double alpha) {
    if (alpha == 0.0) r.set(EstimatorFlag::AlphaPinned0);
    if (alpha == 1.0) r.set(EstimatorFlag::AlphaPinned1);
}

struct FlagName {
    EstimatorFlag flag;
    std::string_view name;
};

constexpr FlagName kFlagNames[] = {
    {EstimatorFlag::SingularInput, "SingularInput"},
    {EstimatorFlag::RankAwareKdeApplied, "RankAwareKdeApplied"},
    {EstimatorFlag::AlphaPinned0, "AlphaPinned0"},
    {EstimatorFlag::AlphaPinned1, "AlphaPinned1"},
    {EstimatorFlag::DegenerateSpectrum, "DegenerateSpectrum"},
    {EstimatorFlag::BmgFallback, "BmgFallback"},
};

// Epanechnikov density and Hilbert transform of the retained spectrum at lambda_i.
// Both are normalized by M so that the excluded mass k0/M sits at zero.
struct KdeAt {
    double f = 0.0;
    double hf = 0.0;
};

KdeAt kde_at(double lambda_i, const std::vector<double>& retained, double h, double m) {
    KdeAt out;
    for (double lj : retained) {
        const double bw = h * lj;
        const double x = (lambda_i - lj) / bw;
        const double q = 1.0 - x * x / 5.0;
        out.f += 3.0 / (4.0 * kSqrt5) * std::max(q, 0.0) / bw;
        double hv = -3.0 * x / (10.0 * kPi);
        if (std::abs(std::abs(x) - kSqrt5) > 0.0) {
            hv += 3.0 / (4.0 * kSqrt5 * kPi) * q * std::log(std::abs((kSqrt5 - x) / (kSqrt5 + x)));
        }
        out.hf += hv / bw;
    }
    out.f /= m;
    out.hf /= m;
    return out;
}

}  // namespace

std::string_view to_string(EstimatorName name) noexcept {
    switch (name) {
        case EstimatorName::Sample: return "Sample";
        case EstimatorName::LW2004: return "LW2004";
        case EstimatorName::LWNL: return "LWNL";
        case EstimatorName::ShahProjection: return "ShahProjection";
        case EstimatorName::AD: return "AD";
        case EstimatorName::ADLWNL: return "ADLWNL";
    }
    return "Sample";
}

EstimatorName parse_estimator_name(std::string_view text) {
    for (auto n : {EstimatorName::Sample, EstimatorName::LW2004, EstimatorName::LWNL,
                   EstimatorName::ShahProjection, EstimatorName::AD, EstimatorName::ADLWNL}) {
        if (text == to_string(n)) return n;
    }
    throw ConfigError("unknown estimator '" + std::string(text) + "'");
}

std::string EstimatorResult::flags_text() const {
    std::string out;
    for (const auto& fn : kFlagNames) {
        if (!has(fn.flag)) continue;
        if (!out.empty()) out += '|';
        out += fn.name;
    }
    return out;
}

std::uint32_t parse_flags(std::string_view text) {
    std::uint32_t flags = 0;
    while (!text.empty()) {
        const auto bar = text.find('|');
        const auto tok = text.substr(0, bar);
        bool known = false;
        for (const auto& fn : kFlagNames) {
            if (tok == fn.name) {
                flags |= static_cast<std::uint32_t>(fn.flag);
                known = true;
            }
        }
        if (!known) throw ConfigError("unknown estimator flag '" + std::string(tok) + "'");
        if (bar == std::string_view::npos) break;
        text.remove_prefix(bar + 1);
    }
    return flags;
}

void require_unit_alpha(double alpha, const char* who) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError(std::string(who) + ": alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
}

EstimatorResult sample_estimator(const Dataset& data) {
    EstimatorResult r;
    r.estimator = EstimatorName::Sample;
    r.matrix = sample_covariance(data);
    return r;
}

EstimatorResult lw2004(const SymmetricMatrix& r_hat, double alpha) {
    require_unit_alpha(alpha, "lw2004");
    const std::size_t m = r_hat.dim();
    EstimatorResult r;
    r.estimator = EstimatorName::LW2004;
    r.matrix = linear_combination(1.0 - alpha, r_hat, alpha,
                                  SymmetricMatrix::identity(m, r_hat.trace() / static_cast<double>(m)));
    r.alpha = alpha;
    mark_alpha(r, alpha);
    return r;
}

EstimatorResult lw2004_auto(const Dataset& data) {
    // One row carries no spread to estimate; the intensity is clipped to its upper end.
    if (data.n_obs() < 2) return lw2004(sample_covariance(data), 1.0);
    const auto cal = mse_plugin_alpha(data, GroupAction::haar_orthogonal(data.dim()));
    return lw2004(sample_covariance(data), cal.alpha);
}

EstimatorResult lwnl(const Dataset& data) {
    if (data.n_obs() < 2) throw ConfigError("lwnl: needs at least two observations");
    return lwnl_from_covariance(sample_covariance(data), data.n_obs());
}

EstimatorResult lwnl_from_covariance(const SymmetricMatrix& r_hat, std::size_t n_obs) {
    if (n_obs < 2) throw ConfigError("lwnl: needs at least two observations");
    EstimatorResult out;
    out.estimator = EstimatorName::LWNL;

    const std::size_t m = r_hat.dim();
    const auto sd = spectral(r_hat);
    const double lmax = sd.eigenvalues.front();
    if (!(lmax > 0.0)) {
        out.matrix = r_hat;
        out.set(EstimatorFlag::SingularInput);
        out.set(EstimatorFlag::DegenerateSpectrum);
        return out;
    }

    std::vector<double> retained;
    for (double l : sd.eigenvalues)
        if (l >= kExcludeRel * lmax) retained.push_back(l);
    const std::size_t r = retained.size();
    const std::size_t k0 = m - r;
    if (k0 > 0) {
        out.set(EstimatorFlag::RankAwareKdeApplied);
        out.set(EstimatorFlag::SingularInput);
    }

    // An exactly flat retained spectrum must come back unchanged; the kernel formula
    // does not reproduce that, so the sample covariance is returned instead.
    if (lmax - retained.back() <= 1e-12 * lmax) {
        out.matrix = r_hat;
        out.set(EstimatorFlag::DegenerateSpectrum);
        return out;
    }

    const double md = static_cast<double>(m);
    const double n = static_cast<double>(n_obs);
    const double c = md / n;
    const double h = std::pow(n, -1.0 / 3.0);

    // Hilbert transforms here carry the 1/pi factor, hence the pi in the denominators.
    std::vector<double> shrunk(m, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        const double l = retained[i];
        auto kde = kde_at(l, retained, h, md);
        if (k0 > 0) kde.hf += (static_cast<double>(k0) / md) * (-1.0 / (kPi * l));
        const double a = 1.0 - c - kPi * c * l * kde.hf;
        const double b = kPi * c * l * kde.f;
        shrunk[i] = l / (a * a + b * b);
    }

    if (k0 > 0) {
        // Common value for the null space: Hilbert transform of the retained density at 0.
        double inv_mean = 0.0;
        for (double l : retained) inv_mean += 1.0 / l;
        inv_mean /= static_cast<double>(r);
        const double sh = kSqrt5 * h;
        const double hf0 = (1.0 / kPi) *
                           (3.0 / (10.0 * h * h) +
                            3.0 / (4.0 * kSqrt5 * h) * (1.0 - 1.0 / (5.0 * h * h)) *
                                std::log(std::abs((1.0 + sh) / (1.0 - sh)))) *
                           inv_mean;
        double d0 = 1.0 / (kPi * (static_cast<double>(k0) / static_cast<double>(r)) * hf0);
        if (!(std::isfinite(d0) && d0 > 0.0)) d0 = *std::min_element(shrunk.begin(), shrunk.begin() + static_cast<std::ptrdiff_t>(r));
        for (std::size_t i = r; i < m; ++i) shrunk[i] = d0;
    }

    for (double v : shrunk) {
        if (!std::isfinite(v) || v < 0.0) {
            throw NumericalError("lwnl: non-finite shrunken eigenvalue", matrix_hash(r_hat));
        }
    }
    out.matrix = sd.reconstruct(shrunk);
    return out;
}

EstimatorResult shah_projection(const SymmetricMatrix& r_hat, const GroupAction& g) {
    EstimatorResult r;
    r.estimator = EstimatorName::ShahProjection;
    r.matrix = reynolds_project(g, r_hat);
    r.group_name = g.name();
    return r;
}

EstimatorResult ad_blend(const SymmetricMatrix& r_hat, const GroupAction& g, double alpha) {
    require_unit_alpha(alpha, "ad_blend");
    return ad_blend_projected(r_hat, reynolds_project(g, r_hat), g.name(), alpha);
}

EstimatorResult ad_blend_projected(const SymmetricMatrix& r_hat, const SymmetricMatrix& projected,
                                   const std::string& group_name, double alpha) {
    require_unit_alpha(alpha, "ad_blend");
    EstimatorResult r;
    r.estimator = EstimatorName::AD;
    // Endpoints are copied so that alpha = 0 and alpha = 1 reproduce their inputs bit for bit.
    if (alpha == 0.0) {
        r.matrix = r_hat;
    } else if (alpha == 1.0) {
        r.matrix = projected;
    } else {
        r.matrix = linear_combination(1.0 - alpha, r_hat, alpha, projected);
    }
    r.alpha = alpha;
    r.group_name = group_name;
    mark_alpha(r, alpha);
    return r;
}

EstimatorResult ad_lwnl_blend(const Dataset& data, const GroupAction& g, double alpha) {
    require_unit_alpha(alpha, "ad_lwnl_blend");
    const auto r_hat = sample_covariance(data);
    const auto nl = lwnl_from_covariance(r_hat, data.n_obs());
    auto out = ad_lwnl_blend_projected(nl.matrix, reynolds_project(g, r_hat), g.name(), alpha);
    out.flags |= nl.flags;
    return out;
}

EstimatorResult ad_lwnl_blend_projected(const SymmetricMatrix& lwnl_matrix, const SymmetricMatrix& projected,
                                        const std::string& group_name, double alpha) {
    auto r = ad_blend_projected(lwnl_matrix, projected, group_name, alpha);
    r.estimator = EstimatorName::ADLWNL;
    return r;
}

}  // namespace symshrink
