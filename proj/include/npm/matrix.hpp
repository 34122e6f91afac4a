#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace npm {

/// Thrown on invalid inputs: bad dimensions, violated preconditions,
/// malformed configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a computation produces non-finite values or fails to
/// converge beyond recovery.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
struct AllocCounter {
    bool active = false;
    std::size_t max_cells = 0;
};
AllocCounter& alloc_counter();
void note_alloc(std::size_t cells);
}  // namespace detail

/// Scoped probe recording the largest matrix allocated while alive.
/// Used by tests that pin down working-memory contracts.
class AllocationProbe {
public:
    AllocationProbe() {
        auto& c = detail::alloc_counter();
        c.active = true;
        c.max_cells = 0;
    }
    ~AllocationProbe() { detail::alloc_counter().active = false; }
    AllocationProbe(const AllocationProbe&) = delete;
    AllocationProbe& operator=(const AllocationProbe&) = delete;

    std::size_t max_cells() const { return detail::alloc_counter().max_cells; }
};

/// Dense real matrix, row-major storage. The universal carrier for data
/// matrices, iterates, noise matrices and orthonormal bases.
class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero-filled rows x cols matrix. Dimensions must be positive.
    DenseMatrix(int rows, int cols);

    /// Takes ownership of row-major entries; length must equal rows*cols
    /// and every entry must be finite.
    DenseMatrix(int rows, int cols, std::vector<double> entries);

    DenseMatrix(const DenseMatrix& other);
    DenseMatrix(DenseMatrix&&) noexcept = default;
    DenseMatrix& operator=(const DenseMatrix& other);
    DenseMatrix& operator=(DenseMatrix&&) noexcept = default;

    static DenseMatrix identity(int n);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }
    std::size_t size() const { return entries_.size(); }

    double& operator()(int i, int j) { return entries_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return entries_[static_cast<std::size_t>(i) * cols_ + j]; }

    double* data() { return entries_.data(); }
    const double* data() const { return entries_.data(); }

    DenseMatrix transposed() const;

    /// Copy of columns [first, first+count).
    DenseMatrix columns(int first, int count) const;

    bool all_finite() const;

    /// *this += factor * other (same shape required).
    void add_scaled(const DenseMatrix& other, double factor);
    void scale(double factor);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> entries_;

    void check_shape(int rows, int cols) const;
};

double max_abs(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Eigendecomposition of a symmetric PSD matrix: orthogonal `vectors`
/// (one eigenvector per column) and non-negative `values` sorted in
/// non-increasing order.
struct EigenDecomposition {
    DenseMatrix vectors;
    std::vector<double> values;

    int dim() const { return vectors.rows(); }

    /// sigma_i with 1-based index; indices past the dimension read as 0.
    double sigma(int index_one_based) const {
        if (index_one_based < 1) throw ConfigError("sigma index must be >= 1");
        if (index_one_based > dim()) return 0.0;
        return values[static_cast<std::size_t>(index_one_based) - 1];
    }

    /// First k eigenvectors as a d x k matrix.
    DenseMatrix leading_vectors(int k) const { return vectors.columns(0, k); }
};

}  // namespace npm
