#include "kernels_internal.hpp"

namespace symshrink::kernels::detail {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpby_scalar(double a, const double* x, double b, const double* y, double* out,
                  std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

const KernelTable kScalarTable{Backend::Scalar, &dot_scalar, &axpby_scalar, &axpy_scalar,
                               &squared_distance_scalar};

}  // namespace symshrink::kernels::detail
