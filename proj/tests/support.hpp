#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "symshrink/matrix.hpp"

namespace testing_support {

inline symshrink::SymmetricMatrix random_symmetric(std::size_t m, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    std::vector<double> v(m * m);
    for (auto& x : v) x = z(rng);
    return symshrink::SymmetricMatrix(m, std::move(v));
}

// B B^T / m with B standard normal m x (m + extra); PSD, full rank when extra >= 0.
inline symshrink::SymmetricMatrix random_psd(std::size_t m, std::mt19937_64& rng, std::size_t cols = 0) {
    if (cols == 0) cols = m + 2;
    std::normal_distribution<double> z;
    std::vector<double> b(m * cols);
    for (auto& x : b) x = z(rng);
    std::vector<double> a(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < cols; ++k) s += b[i * cols + k] * b[j * cols + k];
            a[i * m + j] = s / static_cast<double>(cols);
        }
    return symshrink::SymmetricMatrix(m, std::move(a));
}

inline double max_abs_diff(const symshrink::SymmetricMatrix& a, const symshrink::SymmetricMatrix& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.entries().size(); ++k)
        d = std::max(d, std::abs(a.entries()[k] - b.entries()[k]));
    return d;
}

// Plain triple loop, independent of the library's kernels.
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t m) {
    std::vector<double> c(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t j = 0; j < m; ++j) c[i * m + j] += a[i * m + k] * b[k * m + j];
    return c;
}

}  // namespace testing_support
