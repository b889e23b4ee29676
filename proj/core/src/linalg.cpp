#include "glue/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glue/error.hpp"

namespace glue {

SymEigen sym_eigen(const Matrix& a, double tol, int max_sweeps) {
    if (a.rows() != a.cols())
        throw ShapeError("sym_eigen: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
    const std::size_t n = a.rows();
    // Work on a symmetrized copy; only the upper triangle of `a` is trusted.
    Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) b(i, j) = b(j, i) = a(i, j);
    Matrix v = Matrix::identity(n);

    auto off_mass = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += b(i, j) * b(i, j);
        return s;
    };
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(b(i, i)));
    scale = std::max(scale, std::sqrt(off_mass()));
    const double stop = tol * tol * std::max(scale * scale, 1e-300);

    int sweep = 0;
    while (off_mass() > stop) {
        if (++sweep > max_sweeps) throw NumericError("sym_eigen: Jacobi sweeps did not converge");
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = b(p, q);
                if (apq == 0.0) continue;
                const double theta = (b(q, q) - b(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double bip = b(i, p), biq = b(i, q);
                    b(i, p) = c * bip - s * biq;
                    b(i, q) = s * bip + c * biq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double bpi = b(p, i), bqi = b(q, i);
                    b(p, i) = c * bpi - s * bqi;
                    b(q, i) = s * bpi + c * bqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = b(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    SymEigen out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = diag[src];
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mag = std::abs(v(i, src));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * v(i, src);
    }
    return out;
}

Matrix cholesky_solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols())
        throw ShapeError("cholesky_solve: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
    if (b.rows() != a.rows())
        throw ShapeError("cholesky_solve: incompatible shapes " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw NumericError("cholesky_solve: matrix is not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    // L y = b, then L^T x = y, column by column.
    Matrix x = b;
    for (std::size_t col = 0; col < x.cols(); ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
            x(i, col) = s / l(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x(i, col);
            for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, col);
            x(i, col) = s / l(i, i);
        }
    }
    return x;
}

Matrix column_means(const Matrix& x) {
    if (x.rows() == 0) throw ShapeError("column_means: empty matrix");
    Matrix m(1, x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, j);
        m(0, j) = s / static_cast<double>(x.rows());
    }
    return m;
}

Matrix covariance(const Matrix& x) {
    const Matrix m = column_means(x);
    const std::size_t t = x.rows(), n = x.cols();
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < t; ++r) s += (x(r, i) - m(0, i)) * (x(r, j) - m(0, j));
            c(i, j) = c(j, i) = s / static_cast<double>(t);
        }
    }
    return c;
}

}  // namespace glue
