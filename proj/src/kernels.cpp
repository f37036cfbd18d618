#include "kronsolve/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "kronsolve/errors.hpp"

namespace kronsolve {

namespace {

void check_same_shape(Index ar, Index ac, Index br, Index bc) {
    if (ar != br || ac != bc) {
        throw DimensionError("frobenius_inner: shapes " + std::to_string(ar) +
                             "x" + std::to_string(ac) + " and " +
                             std::to_string(br) + "x" + std::to_string(bc) +
                             " differ");
    }
}

}  // namespace

double frobenius_inner(const DenseMatrix& A, const DenseMatrix& B) {
    check_same_shape(A.rows(), A.cols(), B.rows(), B.cols());
    return A.cwiseProduct(B).sum();
}

double frobenius_inner(const SparseMatrix& A, const SparseMatrix& B) {
    check_same_shape(A.rows(), A.cols(), B.rows(), B.cols());
    double acc = 0.0;
    for (Index j = 0; j < A.outerSize(); ++j) {
        SparseMatrix::InnerIterator ia(A, j), ib(B, j);
        while (ia && ib) {
            if (ia.row() == ib.row()) {
                acc += ia.value() * ib.value();
                ++ia;
                ++ib;
            } else if (ia.row() < ib.row()) {
                ++ia;
            } else {
                ++ib;
            }
        }
    }
    return acc;
}

double frobenius_inner(const SparseMatrix& A, const DenseMatrix& B) {
    check_same_shape(A.rows(), A.cols(), B.rows(), B.cols());
    double acc = 0.0;
    for (Index j = 0; j < A.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(A, j); it; ++it)
            acc += it.value() * B(it.row(), j);
    return acc;
}

double frobenius_inner(const DenseMatrix& A, const SparseMatrix& B) {
    return frobenius_inner(B, A);
}

Vector vec(const DenseMatrix& X) {
    return Eigen::Map<const Vector>(X.data(), X.size());
}

DenseMatrix unvec(const Vector& x, Index rows, Index cols) {
    if (x.size() != rows * cols) {
        throw DimensionError("unvec: vector of length " +
                             std::to_string(x.size()) + " cannot fill " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }
    return Eigen::Map<const DenseMatrix>(x.data(), rows, cols);
}

Index bandwidth(const DenseMatrix& A) {
    if (A.rows() != A.cols())
        throw DimensionError("bandwidth: matrix must be square");
    Index beta = 0;
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i)
            if (A(i, j) != 0.0) beta = std::max(beta, std::abs(i - j));
    return beta;
}

Index bandwidth(const SparseMatrix& A) {
    if (A.rows() != A.cols())
        throw DimensionError("bandwidth: matrix must be square");
    Index beta = 0;
    for (Index j = 0; j < A.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(A, j); it; ++it)
            beta = std::max(beta, std::abs(it.row() - j));
    return beta;
}

Index structural_band(const DenseMatrix& A) {
    Index beta = -1;
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i)
            if (A(i, j) != 0.0) beta = std::max(beta, std::abs(i - j));
    return beta;
}

RealSchurResult real_schur(const DenseMatrix& A) {
    if (A.rows() != A.cols())
        throw DimensionError("real_schur: matrix must be square");
    if (!A.allFinite())
        throw ArgumentError("real_schur: entries must be finite");
    Eigen::RealSchur<DenseMatrix> schur;
    schur.setMaxIterations(30 * std::max<Index>(A.rows(), 1));
    schur.compute(A, /*computeU=*/true);
    if (schur.info() != Eigen::Success) {
        throw FactorizationError(
            "real_schur: QR iteration exhausted its sweep budget");
    }
    return {schur.matrixU(), schur.matrixT()};
}

}  // namespace kronsolve
