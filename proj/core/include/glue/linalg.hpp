#pragma once

#include <cstddef>
#include <vector>

#include "glue/matrix.hpp"

namespace glue {

// Eigendecomposition of a symmetric matrix. `values` are sorted descending;
// column j of `vectors` is the unit eigenvector for values[j]. Every vector
// is sign-fixed so its largest-magnitude coordinate is positive, which makes
// the decomposition deterministic.
struct SymEigen {
    std::vector<double> values;
    Matrix vectors;
};

// Cyclic Jacobi rotations; only the upper triangle of `a` is read. Converges
// when the off-diagonal Frobenius mass falls below `tol` times the matrix
// scale. Throws ShapeError for non-square input, NumericError if the sweep
// limit is exhausted.
SymEigen sym_eigen(const Matrix& a, double tol = 1e-12, int max_sweeps = 64);

// Solves A X = B for symmetric positive definite A via Cholesky (B may hold
// multiple right-hand sides). Throws NumericError when A is not positive
// definite.
Matrix cholesky_solve(const Matrix& a, const Matrix& b);

// Column means of X (1 x N).
Matrix column_means(const Matrix& x);

// Population covariance of the rows of X: (X-m)^T (X-m) / T.
Matrix covariance(const Matrix& x);

}  // namespace glue
