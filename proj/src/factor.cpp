#include "kronsolve/factor.hpp"

#include <string>

#include "kronsolve/kernels.hpp"

namespace kronsolve {

Factor::Factor(DenseMatrix M) : m_(std::move(M)) {}

Factor::Factor(SparseMatrix M) {
    M.makeCompressed();
    transpose_ = M.transpose();
    transpose_.makeCompressed();
    m_ = std::move(M);
}

Index Factor::rows() const {
    return is_sparse() ? sparse().rows() : dense().rows();
}

Index Factor::cols() const {
    return is_sparse() ? sparse().cols() : dense().cols();
}

Index Factor::nnz() const {
    if (is_sparse()) return sparse().nonZeros();
    return (dense().array() != 0.0).count();
}

double Factor::density() const {
    Index total = rows() * cols();
    return total == 0 ? 0.0 : static_cast<double>(nnz()) / total;
}

const DenseMatrix& Factor::dense() const {
    return std::get<DenseMatrix>(m_);
}

const SparseMatrix& Factor::sparse() const {
    return std::get<SparseMatrix>(m_);
}

const SparseMatrix& Factor::sparse_transpose() const { return transpose_; }

DenseMatrix Factor::to_dense() const {
    return is_sparse() ? DenseMatrix(sparse()) : dense();
}

DenseMatrix Factor::mul(const DenseMatrix& X) const {
    return is_sparse() ? DenseMatrix(sparse() * X) : DenseMatrix(dense() * X);
}

DenseMatrix Factor::tmul(const DenseMatrix& X) const {
    return is_sparse() ? DenseMatrix(transpose_ * X)
                       : DenseMatrix(dense().transpose() * X);
}

DenseMatrix Factor::mul_transpose_right(const DenseMatrix& X) const {
    return is_sparse() ? DenseMatrix(X * transpose_)
                       : DenseMatrix(X * dense().transpose());
}

DenseMatrix Factor::mul_right(const DenseMatrix& X) const {
    return is_sparse() ? DenseMatrix(X * sparse()) : DenseMatrix(X * dense());
}

Vector Factor::vec_dense() const {
    if (is_sparse()) {
        Vector v = Vector::Zero(rows() * cols());
        for (Index j = 0; j < sparse().outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(sparse(), j); it; ++it)
                v[j * rows() + it.row()] = it.value();
        return v;
    }
    return vec(dense());
}

Index Factor::bandwidth() const {
    return is_sparse() ? kronsolve::bandwidth(sparse())
                       : kronsolve::bandwidth(dense());
}

Factor Factor::transposed() const {
    if (is_sparse()) return Factor(SparseMatrix(transpose_));
    return Factor(DenseMatrix(dense().transpose()));
}

Factor Factor::symmetrized() const {
    if (is_sparse())
        return Factor(SparseMatrix(0.5 * (sparse() + transpose_)));
    return Factor(DenseMatrix(0.5 * (dense() + dense().transpose())));
}

double frobenius_inner(const Factor& A, const Factor& B) {
    if (A.is_sparse() && B.is_sparse())
        return frobenius_inner(A.sparse(), B.sparse());
    if (A.is_sparse()) return frobenius_inner(A.sparse(), B.dense());
    if (B.is_sparse()) return frobenius_inner(B.sparse(), A.dense());
    return frobenius_inner(A.dense(), B.dense());
}

double trace_product(const Factor& A, const Factor& B) {
    // trace(A B) = <A^T, B>_F
    if (A.is_sparse() && B.is_sparse())
        return frobenius_inner(A.sparse_transpose(), B.sparse());
    if (A.is_sparse()) return frobenius_inner(A.sparse_transpose(), B.dense());
    if (B.is_sparse())
        return frobenius_inner(B.sparse(), DenseMatrix(A.dense().transpose()));
    return A.dense().transpose().cwiseProduct(B.dense()).sum();
}

Factor gram_product(const Factor& A, const Factor& B, double dense_threshold) {
    if (A.rows() != B.rows())
        throw DimensionError("gram_product: row counts differ");
    if (A.is_sparse() && B.is_sparse()) {
        SparseMatrix P = A.sparse_transpose() * B.sparse();
        P.makeCompressed();
        double density =
            P.size() == 0
                ? 0.0
                : static_cast<double>(P.nonZeros()) / static_cast<double>(P.size());
        if (density <= dense_threshold) return Factor(std::move(P));
        return Factor(DenseMatrix(P));
    }
    if (A.is_sparse()) return Factor(DenseMatrix(A.sparse_transpose() * B.dense()));
    if (B.is_sparse())
        return Factor(DenseMatrix(B.sparse_transpose() * A.dense()).transpose());
    return Factor(DenseMatrix(A.dense().transpose() * B.dense()));
}

}  // namespace kronsolve
