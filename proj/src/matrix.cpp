#include "npm/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace npm {

namespace detail {

AllocCounter& alloc_counter() {
    thread_local AllocCounter counter;
    return counter;
}

void note_alloc(std::size_t cells) {
    auto& c = alloc_counter();
    if (c.active) c.max_cells = std::max(c.max_cells, cells);
}

}  // namespace detail

void DenseMatrix::check_shape(int rows, int cols) const {
    if (rows < 1 || cols < 1) {
        throw ConfigError("matrix dimensions must be positive, got " + std::to_string(rows) +
                          "x" + std::to_string(cols));
    }
}

DenseMatrix::DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
    check_shape(rows, cols);
    entries_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    detail::note_alloc(entries_.size());
}

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    check_shape(rows, cols);
    if (entries_.size() != static_cast<std::size_t>(rows) * cols) {
        throw ConfigError("entry count " + std::to_string(entries_.size()) +
                          " does not match shape " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    }
    if (!all_finite()) throw ConfigError("matrix entries must be finite");
    detail::note_alloc(entries_.size());
}

DenseMatrix::DenseMatrix(const DenseMatrix& other)
    : rows_(other.rows_), cols_(other.cols_), entries_(other.entries_) {
    detail::note_alloc(entries_.size());
}

DenseMatrix& DenseMatrix::operator=(const DenseMatrix& other) {
    if (this != &other) {
        rows_ = other.rows_;
        cols_ = other.cols_;
        entries_ = other.entries_;
        detail::note_alloc(entries_.size());
    }
    return *this;
}

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    if (r == 0) throw ConfigError("from_rows requires at least one row");
    const int c = static_cast<int>(rows.begin()->size());
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(r) * c);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) throw ConfigError("ragged row in from_rows");
        entries.insert(entries.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(entries));
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::columns(int first, int count) const {
    if (first < 0 || count < 1 || first + count > cols_) {
        throw ConfigError("column slice [" + std::to_string(first) + ", " +
                          std::to_string(first + count) + ") out of range for " +
                          std::to_string(cols_) + " columns");
    }
    DenseMatrix out(rows_, count);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < count; ++j) out(i, j) = (*this)(i, first + j);
    return out;
}

bool DenseMatrix::all_finite() const {
    for (double v : entries_)
        if (!std::isfinite(v)) return false;
    return true;
}

void DenseMatrix::add_scaled(const DenseMatrix& other, double factor) {
    if (other.rows_ != rows_ || other.cols_ != cols_) {
        throw ConfigError("add_scaled shape mismatch");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += factor * other.entries_[i];
}

void DenseMatrix::scale(double factor) {
    for (double& v : entries_) v *= factor;
}

double max_abs(const DenseMatrix& m) {
    double best = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) best = std::max(best, std::abs(m(i, j)));
    return best;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ConfigError("max_abs_diff shape mismatch");
    }
    double best = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) best = std::max(best, std::abs(a(i, j) - b(i, j)));
    return best;
}

}  // namespace npm
