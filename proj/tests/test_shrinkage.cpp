#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "group_oracle.hpp"
#include "support.hpp"
#include "symshrink/error.hpp"
#include "symshrink/shrinkage.hpp"

using namespace symshrink;
using testing_support::max_abs_diff;
using testing_support::random_psd;

namespace {

Dataset gaussian_rows(std::size_t n, std::size_t m, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> z;
    std::vector<double> v(n * m);
    for (auto& x : v) x = scale * z(rng);
    return Dataset::centered_from(n, m, std::move(v));
}

// Epanechnikov kernel on [-sqrt5, sqrt5].
double epan(double u) {
    const double q = 1.0 - u * u / 5.0;
    return q > 0.0 ? 3.0 / (4.0 * std::sqrt(5.0)) * q : 0.0;
}

// PV integral of K(u) / (u - x) over the kernel support. The kernel's polynomial
// P(x) is subtracted (also when x lies outside the support) so the remaining
// integrand is smooth; that part goes through composite Simpson.
double pv_kernel_integral(double x) {
    const double a = -std::sqrt(5.0), b = std::sqrt(5.0);
    auto poly = [](double u) { return 3.0 / (4.0 * std::sqrt(5.0)) * (1.0 - u * u / 5.0); };
    const double px = poly(x);
    const int n = 4000;
    const double h = (b - a) / n;
    auto reg = [&](double u) {
        const double d = u - x;
        if (std::abs(d) < 1e-9) return -2.0 * x * 3.0 / (20.0 * std::sqrt(5.0));
        return (poly(u) - px) / d;
    };
    double s = reg(a) + reg(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * reg(a + i * h);
    s *= h / 3.0;
    if (std::abs(std::abs(x) - b) > 0.0) s += px * std::log(std::abs((b - x) / (a - x)));
    return s;
}

// Shrunken eigenvalues from numerically integrated density and Hilbert transform.
std::vector<double> lwnl_oracle(const std::vector<double>& lambda, std::size_t n_obs) {
    const double m = static_cast<double>(lambda.size());
    const double c = m / static_cast<double>(n_obs);
    const double h = std::pow(static_cast<double>(n_obs), -1.0 / 3.0);
    const double pi = std::numbers::pi;
    std::vector<double> out;
    for (double li : lambda) {
        double f = 0.0, hf = 0.0;
        for (double lj : lambda) {
            const double bw = h * lj;
            const double x = (li - lj) / bw;
            f += epan(x) / bw;
            hf += pv_kernel_integral(x) / (pi * bw);
        }
        f /= m;
        hf /= m;
        const double a = 1.0 - c - pi * c * li * hf;
        const double b = pi * c * li * f;
        out.push_back(li / (a * a + b * b));
    }
    return out;
}

}  // namespace

TEST_CASE("lw2004 closed forms") {
    const SymmetricMatrix r(3, {1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 3.0});
    CHECK(lw2004(r, 0.0).matrix == r);
    const auto full = lw2004(r, 1.0);
    CHECK(max_abs_diff(full.matrix, SymmetricMatrix::identity(3, 2.0)) < 1e-15);
    CHECK(full.has(EstimatorFlag::AlphaPinned1));
    const auto half = lw2004(SymmetricMatrix::diagonal(std::vector<double>{4.0, 0.0}), 0.5);
    CHECK(half.matrix(0, 0) == doctest::Approx(3.0));
    CHECK(half.matrix(1, 1) == doctest::Approx(1.0));
    CHECK(half.matrix(0, 1) == 0.0);
    CHECK_THROWS_AS(lw2004(r, 1.5), ConfigError);
    CHECK_THROWS_AS(lw2004(r, -0.1), ConfigError);
    CHECK_THROWS_AS(lw2004(r, std::nan("")), ConfigError);
}

TEST_CASE("lw2004_auto on a single row keeps alpha inside the unit interval") {
    const auto d = Dataset::centered_from(1, 3, {1.0, 2.0, 3.0});
    const auto r = lw2004_auto(d);
    REQUIRE(r.alpha);
    CHECK(*r.alpha >= 0.0);
    CHECK(*r.alpha <= 1.0);
}

TEST_CASE("lw2004_auto improves on the sample covariance for an isotropic population") {
    std::mt19937_64 rng(3);
    double err_s = 0.0, err_lw = 0.0;
    const auto eye = SymmetricMatrix::identity(10);
    for (int t = 0; t < 50; ++t) {
        const auto d = gaussian_rows(400, 10, rng);
        err_s += frobenius_distance_squared(sample_covariance(d), eye);
        err_lw += frobenius_distance_squared(lw2004_auto(d).matrix, eye);
    }
    CHECK(err_lw < err_s);
}

TEST_CASE("AD at the orthogonal group beats the sample covariance on isotropic Wishart M=20 N=10") {
    std::mt19937_64 rng(11);
    const auto haar = GroupAction::haar_orthogonal(20);
    const auto eye = SymmetricMatrix::identity(20);
    double err_s = 0.0, err_ad = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto d = gaussian_rows(10, 20, rng);
        const auto r = sample_covariance(d);
        const double alpha = lw2004_auto(d).alpha.value();
        err_s += frobenius_distance_squared(r, eye);
        err_ad += frobenius_distance_squared(ad_blend(r, haar, alpha).matrix, eye);
    }
    CHECK(err_ad <= err_s);
}

TEST_CASE("lwnl matches a quadrature oracle on a full-rank spectrum") {
    std::mt19937_64 rng(5);
    const auto d = gaussian_rows(40, 8, rng);
    const auto r = sample_covariance(d);
    const auto sd = spectral(r);
    auto expected = lwnl_oracle(sd.eigenvalues, d.n_obs());
    const auto out = lwnl(d);
    // Same eigenvectors, so compare through the sample eigenbasis.
    for (std::size_t k = 0; k < expected.size(); ++k) {
        double q = 0.0;
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) q += sd.vector_entry(i, k) * out.matrix(i, j) * sd.vector_entry(j, k);
        CHECK(q == doctest::Approx(expected[k]).epsilon(1e-9));
    }
    CHECK_FALSE(out.has(EstimatorFlag::RankAwareKdeApplied));
    CHECK_FALSE(out.alpha.has_value());
    CHECK_FALSE(out.group_name.has_value());
}

TEST_CASE("lwnl keeps a multiple of the identity fixed") {
    // Rows +-sqrt(k) e_i give R = k I exactly after centering is a no-op.
    const double k = 2.5;
    const std::size_t m = 4;
    std::vector<double> rows;
    for (std::size_t i = 0; i < m; ++i)
        for (int s : {1, -1})
            for (std::size_t j = 0; j < m; ++j) rows.push_back(i == j ? s * std::sqrt(k * m) : 0.0);
    const auto d = Dataset::centered_from(2 * m, m, rows);
    const auto out = lwnl(d);
    CHECK(max_abs_diff(out.matrix, SymmetricMatrix::identity(m, k)) <= 1e-8);
    CHECK(out.has(EstimatorFlag::DegenerateSpectrum));
}

TEST_CASE("lwnl needs two observations") {
    const auto d = Dataset::centered_from(1, 2, {1.0, 2.0});
    CHECK_THROWS_AS(lwnl(d), ConfigError);
}

TEST_CASE("lwnl preserves eigenvectors and roughly the trace in the bulk regime") {
    std::mt19937_64 rng(21);
    for (double c : {0.25, 0.5}) {
        const std::size_t m = 32;
        const auto n = static_cast<std::size_t>(m / c);
        const auto d = gaussian_rows(n, m, rng);
        const auto r = sample_covariance(d);
        const auto out = lwnl(d).matrix;
        CHECK(std::abs(out.trace() - r.trace()) / r.trace() <= 0.1);
        const auto ab = multiply(out, r);
        const auto ba = multiply(r, out);
        double comm = 0.0;
        for (std::size_t i = 0; i < ab.size(); ++i) comm += (ab[i] - ba[i]) * (ab[i] - ba[i]);
        const double rn = frobenius_norm(r);
        CHECK(std::sqrt(comm) <= 1e-6 * rn * rn);
    }
}

TEST_CASE("lwnl in the few-shot regime flags the excluded spectrum and stays positive definite") {
    std::mt19937_64 rng(8);
    const auto d = gaussian_rows(10, 30, rng);
    const auto out = lwnl(d);
    CHECK(out.has(EstimatorFlag::RankAwareKdeApplied));
    CHECK(out.has(EstimatorFlag::SingularInput));
    const auto ev = spectral(out.matrix).eigenvalues;
    CHECK(ev.back() > 0.0);
    for (double v : ev) CHECK(std::isfinite(v));
    CHECK(std::isfinite(gaussian_nll_per_sample(out.matrix, sample_covariance(gaussian_rows(50, 30, rng))).value));
}

TEST_CASE("shah projection closed forms") {
    const SymmetricMatrix r(2, {1.0, 0.0, 0.0, 3.0});
    CHECK(shah_projection(r, GroupAction::trivial(2)).matrix == r);
    const auto z2 = shah_projection(r, swap_pair(2, 0, 1));
    CHECK(z2.matrix(0, 0) == doctest::Approx(2.0));
    CHECK(z2.matrix(1, 1) == doctest::Approx(2.0));
    CHECK_FALSE(z2.alpha.has_value());
    CHECK(z2.group_name.has_value());

    std::mt19937_64 rng(2);
    const auto a = random_psd(5, rng);
    const auto cs = shah_projection(a, GroupAction::full_symmetric(5)).matrix;
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) (i == j ? diag : off) += a(i, j);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(cs(i, j) == doctest::Approx(i == j ? diag / 5.0 : off / 20.0).epsilon(1e-12));
}

TEST_CASE("shah equals AD at alpha one for every small group") {
    std::mt19937_64 rng(17);
    for (const auto& g : testing_support::small_test_groups()) {
        const auto a = random_psd(g.dim(), rng);
        CHECK(shah_projection(a, g).matrix == ad_blend(a, g, 1.0).matrix);
    }
}

TEST_CASE("ad_blend endpoints, midpoint and linearity") {
    const SymmetricMatrix r(2, {1.0, 0.0, 0.0, 3.0});
    const auto g = swap_pair(2, 0, 1);
    CHECK(ad_blend(r, g, 0.0).matrix == r);
    CHECK(ad_blend(r, g, 1.0).matrix == reynolds_project(g, r));
    const auto mid = ad_blend(r, g, 0.5).matrix;
    CHECK(mid(0, 0) == doctest::Approx(1.5));
    CHECK(mid(1, 1) == doctest::Approx(2.5));
    CHECK(mid(0, 1) == 0.0);
    CHECK_THROWS_AS(ad_blend(r, g, 2.0), ConfigError);

    std::mt19937_64 rng(4);
    const auto grid = cyclic(6);
    for (int t = 0; t < 20; ++t) {
        const auto a = random_psd(6, rng);
        const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto lhs = ad_blend(a, grid, alpha).matrix;
        const auto rhs = linear_combination(1.0 - alpha, ad_blend(a, grid, 0.0).matrix, alpha,
                                            ad_blend(a, grid, 1.0).matrix);
        CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
    }
}

TEST_CASE("ad_lwnl_blend endpoints and midpoint") {
    std::mt19937_64 rng(6);
    const auto d = gaussian_rows(30, 6, rng);
    const auto g = cyclic(6);
    const auto r = sample_covariance(d);
    CHECK(ad_lwnl_blend(d, g, 1.0).matrix == shah_projection(r, g).matrix);
    CHECK(ad_lwnl_blend(d, g, 0.0).matrix == lwnl(d).matrix);
    const auto mid = ad_lwnl_blend(d, g, 0.5).matrix;
    const auto expect = linear_combination(0.5, lwnl(d).matrix, 0.5, reynolds_project(g, r));
    CHECK(max_abs_diff(mid, expect) <= 1e-14);
    CHECK(ad_lwnl_blend(d, g, 0.5).estimator == EstimatorName::ADLWNL);
}

TEST_CASE("every estimator keeps positive semidefinite inputs positive semidefinite") {
    std::mt19937_64 rng(12);
    const auto g = wreath(cyclic(3), 2);
    for (int t = 0; t < 100; ++t) {
        const auto d = gaussian_rows(4 + t % 9, 6, rng);
        const auto r = sample_covariance(d);
        const std::vector<SymmetricMatrix> outs = {
            sample_estimator(d).matrix, lw2004_auto(d).matrix,       lwnl(d).matrix,
            shah_projection(r, g).matrix, ad_blend(r, g, 0.4).matrix, ad_lwnl_blend(d, g, 0.4).matrix};
        for (const auto& o : outs) {
            const auto ev = spectral(o).eigenvalues;
            CHECK(ev.back() >= -1e-10 * std::max(ev.front(), 0.0));
        }
    }
}

TEST_CASE("alpha and group presence follow the estimator kind") {
    std::mt19937_64 rng(9);
    const auto d = gaussian_rows(12, 4, rng);
    const auto r = sample_covariance(d);
    const auto g = cyclic(4);
    const std::vector<EstimatorResult> outs = {sample_estimator(d), lw2004(r, 0.3), lwnl(d),
                                               shah_projection(r, g), ad_blend(r, g, 0.3),
                                               ad_lwnl_blend(d, g, 0.3)};
    for (const auto& o : outs) {
        const bool alpha_kind = o.estimator == EstimatorName::LW2004 || o.estimator == EstimatorName::AD ||
                                o.estimator == EstimatorName::ADLWNL;
        const bool group_kind = o.estimator == EstimatorName::ShahProjection || o.estimator == EstimatorName::AD ||
                                o.estimator == EstimatorName::ADLWNL;
        CHECK(o.alpha.has_value() == alpha_kind);
        CHECK(o.group_name.has_value() == group_kind);
    }
}

TEST_CASE("flag text round trips") {
    EstimatorResult r;
    r.set(EstimatorFlag::SingularInput);
    r.set(EstimatorFlag::AlphaPinned0);
    r.set(EstimatorFlag::BmgFallback);
    CHECK(r.flags_text() == "SingularInput|AlphaPinned0|BmgFallback");
    CHECK(parse_flags(r.flags_text()) == r.flags);
    CHECK(parse_flags("") == 0u);
    CHECK_THROWS_AS(parse_flags("Nope"), ConfigError);
    for (auto n : {EstimatorName::Sample, EstimatorName::LW2004, EstimatorName::LWNL, EstimatorName::ShahProjection,
                   EstimatorName::AD, EstimatorName::ADLWNL})
        CHECK(parse_estimator_name(to_string(n)) == n);
}
