#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "symshrink/groups.hpp"
#include "symshrink/matrix.hpp"

namespace symshrink {

enum class EstimatorName { Sample, LW2004, LWNL, ShahProjection, AD, ADLWNL };

std::string_view to_string(EstimatorName name) noexcept;
EstimatorName parse_estimator_name(std::string_view text);

enum class EstimatorFlag : std::uint32_t {
    SingularInput = 1u << 0,
    RankAwareKdeApplied = 1u << 1,
    AlphaPinned0 = 1u << 2,
    AlphaPinned1 = 1u << 3,
    DegenerateSpectrum = 1u << 4,
    BmgFallback = 1u << 5,  // nothing admitted; LW2004 returned in place of a group estimate
};

struct EstimatorResult {
    EstimatorName estimator = EstimatorName::Sample;
    SymmetricMatrix matrix{1};
    std::optional<double> alpha;             // LW2004, AD, ADLWNL
    std::optional<std::string> group_name;   // ShahProjection, AD, ADLWNL
    std::uint32_t flags = 0;

    bool has(EstimatorFlag f) const noexcept { return (flags & static_cast<std::uint32_t>(f)) != 0; }
    void set(EstimatorFlag f) noexcept { flags |= static_cast<std::uint32_t>(f); }
    // Flag names joined by '|', empty when no flag is set.
    std::string flags_text() const;
};

std::uint32_t parse_flags(std::string_view text);

EstimatorResult sample_estimator(const Dataset& data);

// (1 - alpha) R + alpha (tr R / M) I.
EstimatorResult lw2004(const SymmetricMatrix& r_hat, double alpha);
// LW2004 with alpha from the Frobenius plug-in at the orthogonal-group target.
EstimatorResult lw2004_auto(const Dataset& data);

// Analytical nonlinear shrinkage of the sample eigenvalues (Epanechnikov kernel,
// variable bandwidth lambda_j * N^(-1/3)). Eigenvalues below 1e-10 * lambda_max are
// left out of the density estimate, enter as a point mass at zero and share a
// single shrunken value.
EstimatorResult lwnl(const Dataset& data);
EstimatorResult lwnl_from_covariance(const SymmetricMatrix& r_hat, std::size_t n_obs);

EstimatorResult shah_projection(const SymmetricMatrix& r_hat, const GroupAction& g);

EstimatorResult ad_blend(const SymmetricMatrix& r_hat, const GroupAction& g, double alpha);
// Blend against a projection computed once by the caller.
EstimatorResult ad_blend_projected(const SymmetricMatrix& r_hat, const SymmetricMatrix& projected,
                                   const std::string& group_name, double alpha);

// (1 - alpha) LWNL(data) + alpha Pi_G(R), the projection taken of the raw sample covariance.
EstimatorResult ad_lwnl_blend(const Dataset& data, const GroupAction& g, double alpha);
EstimatorResult ad_lwnl_blend_projected(const SymmetricMatrix& lwnl_matrix, const SymmetricMatrix& projected,
                                        const std::string& group_name, double alpha);

// Throws ConfigError unless alpha lies in [0, 1].
void require_unit_alpha(double alpha, const char* who);

}  // namespace symshrink
