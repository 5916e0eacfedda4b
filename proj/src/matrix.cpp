#include "symshrink/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "symshrink/error.hpp"
#include "symshrink/kernels.hpp"

namespace symshrink {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;

ConstMap as_eigen(const SymmetricMatrix& a) {
    return ConstMap(a.entries().data(), static_cast<Eigen::Index>(a.dim()),
                    static_cast<Eigen::Index>(a.dim()));
}

SymmetricMatrix from_eigen(const RowMatrix& m) {
    const auto n = static_cast<std::size_t>(m.rows());
    return SymmetricMatrix(n, std::vector<double>(m.data(), m.data() + m.size()));
}

void require_same_dim(const SymmetricMatrix& a, const SymmetricMatrix& b, const char* op) {
    if (a.dim() != b.dim()) {
        std::ostringstream os;
        os << op << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
        throw DimensionError(os.str());
    }
}

std::vector<double> center_columns(std::size_t n, std::size_t m, std::vector<double> rows) {
    if (n == 0) return rows;
    std::vector<double> mean(m, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < m; ++j) mean[j] += rows[r * m + j];
    for (double& v : mean) v /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < m; ++j) rows[r * m + j] -= mean[j];
    return rows;
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(std::size_t dim) : dim_(dim), entries_(dim * dim, 0.0) {
    if (dim == 0) throw ConfigError("SymmetricMatrix: dimension must be at least 1");
}

SymmetricMatrix::SymmetricMatrix(std::size_t dim, std::vector<double> entries)
    : dim_(dim), entries_(std::move(entries)) {
    if (dim == 0) throw ConfigError("SymmetricMatrix: dimension must be at least 1");
    if (entries_.size() != dim * dim) {
        throw DimensionError("SymmetricMatrix: expected " + std::to_string(dim * dim) +
                             " entries, got " + std::to_string(entries_.size()));
    }
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
            double& upper = entries_[i * dim + j];
            double& lower = entries_[j * dim + i];
            if (upper != lower) {
                const double avg = 0.5 * (upper + lower);
                upper = avg;
                lower = avg;
            }
        }
    }
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t dim, double scale) {
    std::vector<double> e(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = scale;
    return SymmetricMatrix(dim, std::move(e));
}

SymmetricMatrix SymmetricMatrix::diagonal(std::span<const double> values) {
    const std::size_t dim = values.size();
    std::vector<double> e(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = values[i];
    return SymmetricMatrix(dim, std::move(e));
}

double SymmetricMatrix::trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += entries_[i * dim_ + i];
    return t;
}

Dataset::Dataset(std::size_t n_obs, std::size_t dim, std::vector<double> rows, MeanModel model)
    : n_obs_(n_obs), dim_(dim), rows_(std::move(rows)), mean_model_(model) {
    if (n_obs == 0 || dim == 0) throw ConfigError("Dataset: N and M must be positive");
    if (rows_.size() != n_obs * dim) {
        throw DimensionError("Dataset: expected " + std::to_string(n_obs * dim) + " values, got " +
                             std::to_string(rows_.size()));
    }
}

Dataset::Dataset(std::size_t n_obs, std::size_t dim, std::vector<double> rows, bool centered)
    : Dataset(n_obs, dim, std::move(rows), centered ? MeanModel::Centered : MeanModel::Raw) {
    if (!centered) return;
    for (std::size_t j = 0; j < dim; ++j) {
        double mean = 0.0;
        double scale = 0.0;
        for (std::size_t r = 0; r < n_obs; ++r) {
            mean += rows_[r * dim + j];
            scale = std::max(scale, std::abs(rows_[r * dim + j]));
        }
        mean /= static_cast<double>(n_obs);
        double var = 0.0;
        for (std::size_t r = 0; r < n_obs; ++r) {
            const double d = rows_[r * dim + j] - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(n_obs));
        // Rounding in the subtraction leaves ~eps * max|x|, which can exceed 1e-10 * sd
        // for nearly constant columns.
        const double tol = 1e-10 * sd + 64.0 * std::numeric_limits<double>::epsilon() * scale;
        if (std::abs(mean) > tol) {
            throw ConfigError("Dataset: column " + std::to_string(j) +
                              " is flagged centered but has mean " + std::to_string(mean));
        }
    }
}

Dataset Dataset::centered_from(std::size_t n_obs, std::size_t dim, std::vector<double> rows) {
    if (rows.size() != n_obs * dim) {
        throw DimensionError("Dataset: expected " + std::to_string(n_obs * dim) + " values, got " +
                             std::to_string(rows.size()));
    }
    return Dataset(n_obs, dim, center_columns(n_obs, dim, std::move(rows)), MeanModel::Centered);
}

Dataset Dataset::known_zero_mean(std::size_t n_obs, std::size_t dim, std::vector<double> rows) {
    return Dataset(n_obs, dim, std::move(rows), MeanModel::KnownZeroMean);
}

Dataset Dataset::with_rows(std::size_t n_obs, std::vector<double> rows) const {
    if (mean_model_ == MeanModel::KnownZeroMean) return known_zero_mean(n_obs, dim_, std::move(rows));
    return centered_from(n_obs, dim_, std::move(rows));
}

Dataset Dataset::centered_copy() const {
    if (centered()) return *this;
    return centered_from(n_obs_, dim_, rows_);
}

Dataset Dataset::centered_slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > n_obs_) throw ConfigError("Dataset: empty or out-of-range slice");
    std::vector<double> sub(rows_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                            rows_.begin() + static_cast<std::ptrdiff_t>(end * dim_));
    return with_rows(end - begin, std::move(sub));
}

Dataset Dataset::centered_complement(std::size_t begin, std::size_t end) const {
    if (begin > end || end > n_obs_) throw ConfigError("Dataset: out-of-range complement");
    const std::size_t kept = n_obs_ - (end - begin);
    if (kept == 0) throw ConfigError("Dataset: complement is empty");
    std::vector<double> sub;
    sub.reserve(kept * dim_);
    sub.insert(sub.end(), rows_.begin(), rows_.begin() + static_cast<std::ptrdiff_t>(begin * dim_));
    sub.insert(sub.end(), rows_.begin() + static_cast<std::ptrdiff_t>(end * dim_), rows_.end());
    return with_rows(kept, std::move(sub));
}

Dataset Dataset::centered_subset(const std::vector<std::size_t>& rows) const {
    if (rows.empty()) throw ConfigError("Dataset: empty row subset");
    std::vector<double> sub;
    sub.reserve(rows.size() * dim_);
    for (auto r : rows) {
        if (r >= n_obs_) throw ConfigError("Dataset: row index out of range");
        const auto src = row(r);
        sub.insert(sub.end(), src.begin(), src.end());
    }
    return with_rows(rows.size(), std::move(sub));
}

Dataset Dataset::rows_of_centered(const std::vector<std::size_t>& rows) const {
    if (!centered()) throw ConfigError("Dataset: rows_of_centered needs a centered dataset");
    if (rows.empty()) throw ConfigError("Dataset: empty row subset");
    std::vector<double> sub;
    sub.reserve(rows.size() * dim_);
    for (auto r : rows) {
        if (r >= n_obs_) throw ConfigError("Dataset: row index out of range");
        const auto src = row(r);
        sub.insert(sub.end(), src.begin(), src.end());
    }
    return known_zero_mean(rows.size(), dim_, std::move(sub));
}

SymmetricMatrix SpectralDecomposition::reconstruct(std::span<const double> values) const {
    std::vector<double> out(dim * dim, 0.0);
    // Row i of U diag(v) U^T is sum_k v_k U[i,k] U[:,k]^T; accumulate row-wise.
    std::vector<double> ut(dim * dim);
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t k = 0; k < dim; ++k) ut[k * dim + r] = eigenvectors[r * dim + k];
    for (std::size_t i = 0; i < dim; ++i) {
        std::span<double> out_row(out.data() + i * dim, dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const double w = values[k] * eigenvectors[i * dim + k];
            if (w == 0.0) continue;
            kernels::axpy(w, std::span<const double>(ut.data() + k * dim, dim), out_row);
        }
    }
    return SymmetricMatrix(dim, std::move(out));
}

SymmetricMatrix sample_covariance(const Dataset& data) {
    if (!data.centered()) {
        throw ConfigError("sample_covariance: data must be mean-centered (centering required)");
    }
    const std::size_t m = data.dim();
    const std::size_t n = data.n_obs();
    std::vector<double> acc(m * m, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto x = data.row(r);
        for (std::size_t i = 0; i < m; ++i) {
            if (x[i] == 0.0) continue;
            kernels::axpy(x[i], x.subspan(i), std::span<double>(acc.data() + i * m + i, m - i));
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            const double v = acc[i * m + j] * inv_n;
            acc[i * m + j] = v;
            acc[j * m + i] = v;
        }
    }
    return SymmetricMatrix(m, std::move(acc));
}

SpectralDecomposition spectral(const SymmetricMatrix& a) {
    const auto m = static_cast<Eigen::Index>(a.dim());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(as_eigen(a).transpose());
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "spectral: eigensolver did not converge (matrix hash 0x" << std::hex
           << matrix_hash(a) << ")";
        throw NumericalError(os.str(), matrix_hash(a));
    }
    SpectralDecomposition out;
    out.dim = a.dim();
    out.eigenvalues.resize(a.dim());
    out.eigenvectors.resize(a.dim() * a.dim());
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();
    // Eigen returns ascending order; flip to descending.
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index src = m - 1 - k;
        out.eigenvalues[static_cast<std::size_t>(k)] = vals(src);
        for (Eigen::Index r = 0; r < m; ++r) {
            out.eigenvectors[static_cast<std::size_t>(r * m + k)] = vecs(r, src);
        }
    }
    return out;
}

double min_eigenvalue(const SymmetricMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(as_eigen(a).transpose(),
                                                          Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("min_eigenvalue: eigensolver did not converge", matrix_hash(a));
    }
    return solver.eigenvalues()(0);
}

NllValue gaussian_nll_per_sample(const SymmetricMatrix& sigma, const SymmetricMatrix& r_test) {
    require_same_dim(sigma, r_test, "gaussian_nll_per_sample");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (double v : sigma.entries()) {
        if (!std::isfinite(v)) return {kInf, true};
    }
    Eigen::LLT<RowMatrix> llt(as_eigen(sigma));
    if (llt.info() != Eigen::Success) return {kInf, true};
    const auto& l = llt.matrixLLT();
    double max_pivot = 0.0;
    double min_pivot = kInf;
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        const double p = l(i, i) * l(i, i);
        max_pivot = std::max(max_pivot, p);
        min_pivot = std::min(min_pivot, p);
        logdet += std::log(p);
    }
    if (!(min_pivot > 1e-12 * max_pivot)) return {kInf, true};
    const RowMatrix solved = llt.solve(as_eigen(r_test));
    const double value = 0.5 * logdet + 0.5 * solved.trace();
    if (!std::isfinite(value)) return {kInf, true};
    return {value, false};
}

double frobenius_norm(const SymmetricMatrix& a) {
    return std::sqrt(kernels::dot(a.entries(), a.entries()));
}

double frobenius_inner(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    require_same_dim(a, b, "frobenius_inner");
    return kernels::dot(a.entries(), b.entries());
}

double frobenius_distance_squared(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    require_same_dim(a, b, "frobenius_distance_squared");
    return kernels::squared_distance(a.entries(), b.entries());
}

SymmetricMatrix linear_combination(double wa, const SymmetricMatrix& a, double wb,
                                   const SymmetricMatrix& b) {
    require_same_dim(a, b, "linear_combination");
    std::vector<double> out(a.dim() * a.dim());
    kernels::axpby(wa, a.entries(), wb, b.entries(), out);
    return SymmetricMatrix(a.dim(), std::move(out));
}

SymmetricMatrix scaled(const SymmetricMatrix& a, double s) {
    std::vector<double> out(a.entries().begin(), a.entries().end());
    for (double& v : out) v *= s;
    return SymmetricMatrix(a.dim(), std::move(out));
}

SymmetricMatrix inverse_spd(const SymmetricMatrix& sigma) {
    Eigen::LLT<RowMatrix> llt(as_eigen(sigma));
    if (llt.info() != Eigen::Success) {
        throw NumericalError("inverse_spd: matrix is not positive definite", matrix_hash(sigma));
    }
    const auto m = static_cast<Eigen::Index>(sigma.dim());
    const RowMatrix inv = llt.solve(RowMatrix::Identity(m, m));
    return from_eigen(inv);
}

std::vector<double> multiply(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    require_same_dim(a, b, "multiply");
    const RowMatrix p = as_eigen(a) * as_eigen(b);
    return std::vector<double>(p.data(), p.data() + p.size());
}

SymmetricMatrix sqrt_psd(const SymmetricMatrix& a) {
    const SpectralDecomposition s = spectral(a);
    std::vector<double> roots(s.eigenvalues.size());
    std::transform(s.eigenvalues.begin(), s.eigenvalues.end(), roots.begin(),
                   [](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
    return s.reconstruct(roots);
}

std::uint64_t matrix_hash(const SymmetricMatrix& a) noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : a.entries()) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffU;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace symshrink
