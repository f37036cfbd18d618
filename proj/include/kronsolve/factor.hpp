#pragma once

#include <variant>

#include "kronsolve/errors.hpp"
#include "kronsolve/types.hpp"

namespace kronsolve {

/// A square coefficient matrix that is either dense or sparse. Immutable
/// after construction; the sparse transpose is cached so products from
/// either side stay cheap.
class Factor {
public:
    Factor(DenseMatrix M);   // NOLINT: implicit by design
    Factor(SparseMatrix M);  // NOLINT

    bool is_sparse() const { return std::holds_alternative<SparseMatrix>(m_); }
    Index rows() const;
    Index cols() const;
    Index nnz() const;
    double density() const;

    const DenseMatrix& dense() const;
    const SparseMatrix& sparse() const;
    const SparseMatrix& sparse_transpose() const;
    DenseMatrix to_dense() const;

    /// F * X
    DenseMatrix mul(const DenseMatrix& X) const;
    /// F^T * X
    DenseMatrix tmul(const DenseMatrix& X) const;
    /// X * F^T
    DenseMatrix mul_transpose_right(const DenseMatrix& X) const;
    /// X * F
    DenseMatrix mul_right(const DenseMatrix& X) const;

    /// vec(F) as a dense vector.
    Vector vec_dense() const;

    Index bandwidth() const;

    Factor transposed() const;
    Factor symmetrized() const;  // (F + F^T) / 2

private:
    std::variant<DenseMatrix, SparseMatrix> m_;
    SparseMatrix transpose_;  // populated for sparse factors only
};

double frobenius_inner(const Factor& A, const Factor& B);

/// trace(A * B) without forming the product.
double trace_product(const Factor& A, const Factor& B);

/// A^T * B, promoted to dense when the result density exceeds the threshold.
Factor gram_product(const Factor& A, const Factor& B,
                    double dense_threshold = 0.25);

}  // namespace kronsolve
