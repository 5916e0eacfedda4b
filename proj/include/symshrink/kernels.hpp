#pragma once

// Dense arithmetic kernels with a scalar reference path and an AVX2/FMA path
// selected once at runtime. Callers go through the free functions below; tests
// reach the individual tables to check the two paths against each other.

#include <cstddef>
#include <span>
#include <string_view>

namespace symshrink::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
    Backend backend;
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // out[i] = a * x[i] + b * y[i]; out may alias x or y
    void (*axpby)(double a, const double* x, double b, const double* y, double* out,
                  std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // sum_i (x[i] - y[i])^2
    double (*squared_distance)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table() noexcept;

bool cpu_supports_avx2() noexcept;

// Table used by the free functions. Chosen on first use: AVX2 when the CPU has
// it, unless SYMSHRINK_KERNELS=scalar is set in the environment.
const KernelTable& active() noexcept;

// Overrides the runtime choice. Not thread-safe; call before any worker starts.
void force_backend(Backend b);

std::string_view backend_name(Backend b) noexcept;

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}

inline void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
                  std::span<double> out) {
    active().axpby(a, x.data(), b, y.data(), out.data(), out.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), y.size());
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    return active().squared_distance(x.data(), y.data(), x.size());
}

}  // namespace symshrink::kernels
