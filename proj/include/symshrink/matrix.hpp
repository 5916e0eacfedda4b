#pragma once

// Dense symmetric matrices, centered datasets and the handful of linear-algebra
// operations the estimators need.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace symshrink {

// Dense M x M real symmetric matrix, row-major. Immutable once built; the
// constructor symmetrizes its input as (A + A^T) / 2 so entries(i,j) == entries(j,i)
// holds exactly.
class SymmetricMatrix {
public:
    // M x M zero matrix.
    explicit SymmetricMatrix(std::size_t dim);
    SymmetricMatrix(std::size_t dim, std::vector<double> entries);

    static SymmetricMatrix identity(std::size_t dim, double scale = 1.0);
    static SymmetricMatrix diagonal(std::span<const double> values);

    std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * dim_ + j]; }
    std::span<const double> entries() const noexcept { return entries_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(entries_).subspan(i * dim_, dim_);
    }
    double trace() const noexcept;

    bool operator==(const SymmetricMatrix&) const = default;

private:
    std::size_t dim_;
    std::vector<double> entries_;
};

// How the column means of a Dataset are treated.
enum class MeanModel {
    Raw,            // no claim about the means
    Centered,       // empirical column means subtracted (checked to 1e-10 * column sd)
    KnownZeroMean,  // population mean known to be zero; rows used as-is
};

// N x M observation matrix (rows are observations). `centered()` is true when
// second moments may be taken directly: either the empirical means were removed
// or the population mean is known to be zero.
class Dataset {
public:
    // Throws ConfigError if `centered` is claimed but the column means are not zero.
    Dataset(std::size_t n_obs, std::size_t dim, std::vector<double> rows, bool centered = false);

    // Subtracts column means and sets the centered flag.
    static Dataset centered_from(std::size_t n_obs, std::size_t dim, std::vector<double> rows);
    // Rows drawn from a distribution whose mean is known to be zero; no centering.
    static Dataset known_zero_mean(std::size_t n_obs, std::size_t dim, std::vector<double> rows);

    std::size_t n_obs() const noexcept { return n_obs_; }
    std::size_t dim() const noexcept { return dim_; }
    bool centered() const noexcept { return mean_model_ != MeanModel::Raw; }
    MeanModel mean_model() const noexcept { return mean_model_; }
    std::span<const double> values() const noexcept { return rows_; }
    std::span<const double> row(std::size_t n) const noexcept {
        return std::span<const double>(rows_).subspan(n * dim_, dim_);
    }

    Dataset centered_copy() const;
    // Rows [begin, end), re-centered on their own mean unless the mean is known to be zero.
    Dataset centered_slice(std::size_t begin, std::size_t end) const;
    // Every row outside [begin, end), treated like centered_slice.
    Dataset centered_complement(std::size_t begin, std::size_t end) const;
    // The listed rows in the given order, treated like centered_slice.
    Dataset centered_subset(const std::vector<std::size_t>& rows) const;
    // The listed rows exactly as stored, flagged as known-zero-mean. Used for folds of
    // a dataset that was centered as a whole. Requires centered().
    Dataset rows_of_centered(const std::vector<std::size_t>& rows) const;

    bool operator==(const Dataset&) const = default;

private:
    Dataset(std::size_t n_obs, std::size_t dim, std::vector<double> rows, MeanModel model);
    Dataset with_rows(std::size_t n_obs, std::vector<double> rows) const;

    std::size_t n_obs_;
    std::size_t dim_;
    std::vector<double> rows_;
    MeanModel mean_model_;
};

struct SpectralDecomposition {
    std::size_t dim = 0;
    std::vector<double> eigenvalues;   // descending
    std::vector<double> eigenvectors;  // row-major M x M; column k pairs with eigenvalues[k]

    double vector_entry(std::size_t row, std::size_t k) const noexcept {
        return eigenvectors[row * dim + k];
    }
    // U diag(values) U^T with this decomposition's eigenvectors.
    SymmetricMatrix reconstruct(std::span<const double> values) const;
};

// (1/N) sum_n x_n x_n^T. Requires centered data.
SymmetricMatrix sample_covariance(const Dataset& data);

// Throws NumericalError (carrying matrix_hash) if the eigensolver does not converge.
SpectralDecomposition spectral(const SymmetricMatrix& a);

double min_eigenvalue(const SymmetricMatrix& a);

struct NllValue {
    double value = 0.0;     // +infinity when singular
    bool singular = false;
};

// 1/2 logdet(sigma) + 1/2 tr(sigma^{-1} r_test) via Cholesky. A non-positive or
// relatively tiny pivot (<= 1e-12 of the largest) yields +infinity with the
// singular flag set.
NllValue gaussian_nll_per_sample(const SymmetricMatrix& sigma, const SymmetricMatrix& r_test);

double frobenius_norm(const SymmetricMatrix& a);
double frobenius_inner(const SymmetricMatrix& a, const SymmetricMatrix& b);
double frobenius_distance_squared(const SymmetricMatrix& a, const SymmetricMatrix& b);

// wa * A + wb * B
SymmetricMatrix linear_combination(double wa, const SymmetricMatrix& a, double wb,
                                   const SymmetricMatrix& b);
SymmetricMatrix scaled(const SymmetricMatrix& a, double s);

// sigma^{-1}; throws NumericalError when sigma is not positive definite.
SymmetricMatrix inverse_spd(const SymmetricMatrix& sigma);
// Product A * B (not symmetric in general), row-major M x M.
std::vector<double> multiply(const SymmetricMatrix& a, const SymmetricMatrix& b);
// Symmetric square root via the spectral decomposition; eigenvalues clipped at 0.
SymmetricMatrix sqrt_psd(const SymmetricMatrix& a);

// FNV-1a over the raw entries; identifies a matrix in error reports.
std::uint64_t matrix_hash(const SymmetricMatrix& a) noexcept;

}  // namespace symshrink
