#include "glue/matrix.hpp"

#include <cmath>
#include <string>

#include "glue/error.hpp"

namespace glue {

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b, bool trans_a, bool trans_b) {
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t ka = trans_a ? a.rows() : a.cols();
    const std::size_t kb = trans_b ? b.cols() : b.rows();
    const std::size_t n = trans_b ? b.rows() : b.cols();
    if (ka != kb) shape_fail("matmul", a, b);

    Matrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < ka; ++k) {
            const double av = trans_a ? a(k, i) : a(i, k);
            for (std::size_t j = 0; j < n; ++j) {
                c(i, j) += av * (trans_b ? b(j, k) : b(k, j));
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_fail("add", a, b);
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_fail("hadamard", a, b);
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= s;
    return c;
}

double sum(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
    return s;
}

double dot(const Matrix& a, const Matrix& b) {
    if (a.size() != b.size()) shape_fail("dot", a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(const Matrix& a) { return dot(a, a); }

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Matrix& a) { return all_finite(a.data()); }

}  // namespace glue
