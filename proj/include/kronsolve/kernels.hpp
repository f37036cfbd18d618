#pragma once

#include <utility>

#include "kronsolve/types.hpp"

namespace kronsolve {

/// Frobenius inner product sum_ij a_ij * b_ij. Shapes must match.
double frobenius_inner(const DenseMatrix& A, const DenseMatrix& B);
double frobenius_inner(const SparseMatrix& A, const SparseMatrix& B);
double frobenius_inner(const SparseMatrix& A, const DenseMatrix& B);
double frobenius_inner(const DenseMatrix& A, const SparseMatrix& B);

/// Column-major vectorization and its inverse.
Vector vec(const DenseMatrix& X);
DenseMatrix unvec(const Vector& x, Index rows, Index cols);

/// Zero-copy view of a matrix as its vectorization.
inline Eigen::Map<const Vector> vec_view(const DenseMatrix& X) {
    return Eigen::Map<const Vector>(X.data(), X.size());
}

/// Smallest beta with a_ij = 0 whenever |i - j| > beta. Square matrices only.
/// Dense input tests exact zeros; sparse input uses the stored structure.
Index bandwidth(const DenseMatrix& A);
Index bandwidth(const SparseMatrix& A);

/// Largest |i - j| over nonzeros of a possibly rectangular matrix; -1 if all
/// zero. Used by iterate instrumentation, where right-hand sides are m x n.
Index structural_band(const DenseMatrix& A);

struct RealSchurResult {
    DenseMatrix Q;  // orthogonal
    DenseMatrix T;  // quasi-upper-triangular, 1x1/2x2 diagonal blocks
};

/// Real Schur decomposition A = Q T Q^T.
RealSchurResult real_schur(const DenseMatrix& A);

}  // namespace kronsolve
