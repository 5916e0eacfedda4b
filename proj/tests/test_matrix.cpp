#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "support.hpp"
#include "symshrink/error.hpp"
#include "symshrink/kernels.hpp"
#include "symshrink/matrix.hpp"

using namespace symshrink;
using testing_support::random_psd;
using testing_support::random_symmetric;

TEST_CASE("symmetric matrix construction symmetrizes") {
    SymmetricMatrix a(2, {1.0, 2.0, 4.0, 3.0});
    CHECK(a(0, 1) == a(1, 0));
    CHECK(a(0, 1) == doctest::Approx(3.0));
    CHECK_THROWS_AS(SymmetricMatrix(2, {1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(SymmetricMatrix(0), ConfigError);
}

TEST_CASE("sample covariance of a single known-zero-mean observation is its outer product") {
    auto d = Dataset::known_zero_mean(1, 2, {1.0, 2.0});
    auto r = sample_covariance(d);
    CHECK(r(0, 0) == 1.0);
    CHECK(r(0, 1) == 2.0);
    CHECK(r(1, 1) == 4.0);

    auto copies = Dataset::known_zero_mean(3, 2, {1.0, 2.0, 1.0, 2.0, 1.0, 2.0});
    CHECK(testing_support::max_abs_diff(sample_covariance(copies), r) < 1e-15);
}

TEST_CASE("sample covariance rejects uncentered data") {
    Dataset raw(2, 2, {1.0, 2.0, 3.0, 5.0});
    CHECK_THROWS_AS(sample_covariance(raw), ConfigError);
    CHECK_THROWS_AS(Dataset(2, 1, {1.0, 2.0}, true), ConfigError);
}

TEST_CASE("sample covariance matches a brute-force loop") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    std::vector<double> rows(5 * 3);
    for (auto& x : rows) x = z(rng);
    auto d = Dataset::centered_from(5, 3, rows);
    auto r = sample_covariance(d);
    auto v = d.values();
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (std::size_t n = 0; n < 5; ++n) s += v[n * 3 + i] * v[n * 3 + j];
            CHECK(r(i, j) == doctest::Approx(s / 5.0).epsilon(1e-14));
        }
    CHECK(min_eigenvalue(r) >= -1e-10 * spectral(r).eigenvalues.front());
}

TEST_CASE("slices recentre unless the mean is known to be zero") {
    std::vector<double> rows{1, 2, 3, 4, 5, 6, 7, 8};
    auto c = Dataset::centered_from(4, 2, rows);
    auto s = c.centered_slice(0, 2);
    CHECK(s.n_obs() == 2);
    CHECK(s.row(0)[0] == doctest::Approx(-1.0));
    auto comp = c.centered_complement(1, 3);
    CHECK(comp.n_obs() == 2);
    auto k = Dataset::known_zero_mean(4, 2, rows);
    CHECK(k.centered_slice(2, 4).row(0)[0] == 5.0);
    CHECK(k.centered_complement(0, 1).n_obs() == 3);
}

TEST_CASE("spectral decomposition") {
    auto e = spectral(SymmetricMatrix::identity(3));
    for (double v : e.eigenvalues) CHECK(v == doctest::Approx(1.0));

    std::vector<double> dv{1.0, 3.0};
    auto d = spectral(SymmetricMatrix::diagonal(dv));
    CHECK(d.eigenvalues[0] == doctest::Approx(3.0));
    CHECK(d.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(std::abs(d.vector_entry(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(d.vector_entry(0, 1)) == doctest::Approx(1.0));

    std::mt19937_64 rng(11);
    auto a = random_symmetric(4, rng);
    auto s = spectral(a);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < 4; ++i) {
            double av = 0.0;
            for (std::size_t j = 0; j < 4; ++j) av += a(i, j) * s.vector_entry(j, k);
            CHECK(std::abs(av - s.eigenvalues[k] * s.vector_entry(i, k)) < 1e-8);
        }
}

TEST_CASE("spectral reconstruction and orthonormality on random matrices") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> dim(1, 64);
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = dim(rng);
        auto a = random_symmetric(m, rng);
        auto s = spectral(a);
        for (std::size_t k = 1; k < m; ++k) CHECK(s.eigenvalues[k - 1] >= s.eigenvalues[k]);
        auto back = s.reconstruct(s.eigenvalues);
        CHECK(std::sqrt(frobenius_distance_squared(a, back)) <= 1e-8 * frobenius_norm(a));
        double off = 0.0;
        for (std::size_t p = 0; p < m; ++p)
            for (std::size_t q = 0; q < m; ++q) {
                double g = 0.0;
                for (std::size_t i = 0; i < m; ++i) g += s.vector_entry(i, p) * s.vector_entry(i, q);
                const double d = g - (p == q ? 1.0 : 0.0);
                off += d * d;
            }
        CHECK(std::sqrt(off) <= 1e-8 * std::sqrt(static_cast<double>(m)));
    }
}

TEST_CASE("gaussian nll closed forms") {
    CHECK(gaussian_nll_per_sample(SymmetricMatrix::identity(5), SymmetricMatrix::identity(5)).value ==
          doctest::Approx(2.5));
    auto v = gaussian_nll_per_sample(SymmetricMatrix::identity(2, 2.0), SymmetricMatrix::identity(2));
    CHECK(v.value == doctest::Approx(std::log(2.0) + 0.5));
    CHECK_FALSE(v.singular);

    SymmetricMatrix rank1(2, {1.0, 1.0, 1.0, 1.0});
    auto s = gaussian_nll_per_sample(rank1, SymmetricMatrix::identity(2));
    CHECK(s.singular);
    CHECK(s.value == std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(gaussian_nll_per_sample(SymmetricMatrix::identity(2), SymmetricMatrix::identity(3)),
                    DimensionError);
}

TEST_CASE("nll is minimised at the true covariance") {
    std::mt19937_64 rng(19);
    for (int inst = 0; inst < 5; ++inst) {
        auto sigma = random_psd(6, rng);
        const double at_truth = gaussian_nll_per_sample(sigma, sigma).value;
        for (int p = 0; p < 20; ++p) {
            auto pert = linear_combination(1.0, sigma, 0.3, random_psd(6, rng));
            CHECK(at_truth <= gaussian_nll_per_sample(pert, sigma).value);
        }
    }
}

TEST_CASE("frobenius norms and inner products") {
    CHECK(frobenius_norm(SymmetricMatrix::identity(3)) == doctest::Approx(std::sqrt(3.0)));
    CHECK(frobenius_inner(SymmetricMatrix::identity(2), SymmetricMatrix(2, {0, 1, 1, 0})) == 0.0);
    std::mt19937_64 rng(5);
    auto a = random_symmetric(7, rng);
    auto b = random_symmetric(7, rng);
    double s = 0.0;
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) s += a(i, j) * b(i, j);
    CHECK(frobenius_inner(a, b) == doctest::Approx(s).epsilon(1e-13));
    CHECK_THROWS_AS(frobenius_inner(a, SymmetricMatrix(3)), DimensionError);
}

TEST_CASE("inverse and square root") {
    std::mt19937_64 rng(23);
    auto a = random_psd(5, rng);
    auto inv = inverse_spd(a);
    auto prod = multiply(a, inv);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(prod[i * 5 + j] == doctest::Approx(i == j ? 1.0 : 0.0));
    auto r = sqrt_psd(a);
    auto sq = multiply(r, r);
    for (std::size_t k = 0; k < 25; ++k) CHECK(sq[k] == doctest::Approx(a.entries()[k]).epsilon(1e-10));
}

TEST_CASE("scalar and avx2 kernels agree") {
    const auto* fast = kernels::avx2_table();
    if (fast == nullptr || !kernels::cpu_supports_avx2()) {
        MESSAGE("avx2 kernels unavailable on this host; only scalar checked");
        return;
    }
    const auto& ref = kernels::scalar_table();
    std::mt19937_64 rng(29);
    std::normal_distribution<double> z;
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 31u, 64u, 101u, 1000u}) {
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = z(rng);
        for (auto& v : y) v = z(rng);
        const double tol = 1e-13 * (1.0 + static_cast<double>(n));
        CHECK(std::abs(ref.dot(x.data(), y.data(), n) - fast->dot(x.data(), y.data(), n)) < tol);
        CHECK(std::abs(ref.squared_distance(x.data(), y.data(), n) -
                       fast->squared_distance(x.data(), y.data(), n)) < tol);
        std::vector<double> o1(n), o2(n);
        ref.axpby(0.3, x.data(), -1.7, y.data(), o1.data(), n);
        fast->axpby(0.3, x.data(), -1.7, y.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(o1[i] - o2[i]) < 1e-14);
        auto y1 = y, y2 = y;
        ref.axpy(2.5, x.data(), y1.data(), n);
        fast->axpy(2.5, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-14);
    }
}

TEST_CASE("results do not depend on the kernel backend beyond rounding") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z;
    std::vector<double> rows(40 * 9);
    for (auto& x : rows) x = z(rng);
    auto d = Dataset::centered_from(40, 9, rows);
    kernels::force_backend(kernels::Backend::Scalar);
    auto a = sample_covariance(d);
    kernels::force_backend(kernels::Backend::Avx2);
    auto b = sample_covariance(d);
    CHECK(testing_support::max_abs_diff(a, b) < 1e-13);
}
