#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace glue {

/// Dense row-major matrix of doubles. Column vectors are n x 1, row vectors
/// 1 x n, scalars 1 x 1. All model arithmetic is 64-bit.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix scalar(double v) {
        Matrix m(1, 1);
        m.data_[0] = v;
        return m;
    }
    static Matrix column(std::span<const double> v) {
        Matrix m(v.size(), 1);
        std::copy(v.begin(), v.end(), m.data_.begin());
        return m;
    }
    static Matrix row(std::span<const double> v) {
        Matrix m(1, v.size());
        std::copy(v.begin(), v.end(), m.data_.begin());
        return m;
    }
    static Matrix column(std::initializer_list<double> v) {
        return column(std::span<const double>(v.begin(), v.size()));
    }
    static Matrix row(std::initializer_list<double> v) {
        return row(std::span<const double>(v.begin(), v.size()));
    }
    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_scalar() const noexcept { return rows_ == 1 && cols_ == 1; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    /// Bitwise equality (exact double comparison, NaN != NaN).
    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// C = op(A) * op(B) with optional transposes. Throws ShapeError on inner
/// dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b, bool trans_a = false, bool trans_b = false);

Matrix transpose(const Matrix& a);

/// Elementwise sum; shapes must match exactly.
Matrix add(const Matrix& a, const Matrix& b);
/// Elementwise product; shapes must match exactly.
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

double sum(const Matrix& a);
double dot(const Matrix& a, const Matrix& b);
double squared_norm(const Matrix& a);
double squared_norm(std::span<const double> v);

bool all_finite(const Matrix& a);
bool all_finite(std::span<const double> v);

}  // namespace glue
