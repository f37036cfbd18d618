#include "kronsolve/operator.hpp"

#include <cmath>
#include <string>

#include "kronsolve/kernels.hpp"

namespace kronsolve {

GramCache::GramCache(const std::vector<Factor>& A,
                     const std::vector<Factor>& B)
    : r_(static_cast<int>(A.size())) {
    AtA_.reserve(r_ * r_);
    BtB_.reserve(r_ * r_);
    // Fill k <= l and mirror by transposition so the symmetry relation
    // holds exactly.
    std::vector<const std::vector<Factor>*> sides{&A, &B};
    for (const auto* side : sides) {
        std::vector<Factor>& out = side == &A ? AtA_ : BtB_;
        std::vector<Factor> grid;
        grid.reserve(r_ * r_);
        for (int k = 0; k < r_; ++k)
            for (int l = 0; l < r_; ++l)
                grid.push_back(k <= l
                                   ? gram_product((*side)[k], (*side)[l])
                                   : gram_product((*side)[l], (*side)[k])
                                         .transposed());
        out = std::move(grid);
    }
}

KroneckerOperator::KroneckerOperator(std::vector<Factor> right_factors,
                                     std::vector<Factor> left_factors)
    : A_(std::move(right_factors)), B_(std::move(left_factors)) {
    if (A_.empty() || A_.size() != B_.size())
        throw ArgumentError(
            "KroneckerOperator: factor lists must be non-empty and of equal "
            "length");
    n_ = A_.front().rows();
    m_ = B_.front().rows();
    for (const auto& F : A_)
        if (F.rows() != n_ || F.cols() != n_)
            throw DimensionError(
                "KroneckerOperator: right factors must all be n x n");
    for (const auto& F : B_)
        if (F.rows() != m_ || F.cols() != m_)
            throw DimensionError(
                "KroneckerOperator: left factors must all be m x m");
}

DenseMatrix KroneckerOperator::apply(const DenseMatrix& X) const {
    if (X.rows() != m_ || X.cols() != n_)
        throw DimensionError("apply: X must be " + std::to_string(m_) + "x" +
                             std::to_string(n_));
    DenseMatrix Y = DenseMatrix::Zero(m_, n_);
    for (int k = 0; k < r(); ++k) {
        // Cost of the two associations differs only through the factor
        // representations; pick the cheaper product sequence.
        double left_first = B_[k].is_sparse()
                                ? static_cast<double>(B_[k].nnz()) * n_
                                : static_cast<double>(m_) * m_ * n_;
        double right_first = A_[k].is_sparse()
                                 ? static_cast<double>(A_[k].nnz()) * m_
                                 : static_cast<double>(n_) * n_ * m_;
        if (left_first <= right_first) {
            Y.noalias() += A_[k].mul_transpose_right(B_[k].mul(X));
        } else {
            Y.noalias() += B_[k].mul(A_[k].mul_transpose_right(X));
        }
    }
    return Y;
}

FactorStack KroneckerOperator::factor_stacks() const {
    FactorStack s;
    s.V_A.resize(n_ * n_, r());
    s.V_B.resize(m_ * m_, r());
    for (int k = 0; k < r(); ++k) {
        s.V_A.col(k) = A_[k].vec_dense();
        s.V_B.col(k) = B_[k].vec_dense();
    }
    return s;
}

const GramCache& KroneckerOperator::gram() const {
    std::call_once(lazy_gram_->once, [this] {
        lazy_gram_->cache = std::make_shared<GramCache>(A_, B_);
    });
    return *lazy_gram_->cache;
}

double KroneckerOperator::norm_frobenius() const {
    // ||M||_F^2 = <V_A^T V_A, V_B^T V_B>_F
    const int rr = r();
    DenseMatrix GA(rr, rr), GB(rr, rr);
    for (int k = 0; k < rr; ++k)
        for (int l = k; l < rr; ++l) {
            GA(k, l) = GA(l, k) = frobenius_inner(A_[k], A_[l]);
            GB(k, l) = GB(l, k) = frobenius_inner(B_[k], B_[l]);
        }
    double norm2 = GA.cwiseProduct(GB).sum();
    return std::sqrt(std::max(norm2, 0.0));
}

DenseMatrix KroneckerOperator::materialize(Index cap) const {
    return materialize_kron_sum(A_, B_, cap);
}

DenseMatrix materialize_kron_sum(const std::vector<Factor>& A,
                                 const std::vector<Factor>& B, Index cap) {
    if (A.empty()) throw ArgumentError("materialize: empty factor list");
    Index n = A.front().rows(), m = B.front().rows();
    if (n * m > cap)
        throw SizeGuardError("materialize: n*m = " + std::to_string(n * m) +
                             " exceeds cap " + std::to_string(cap));
    DenseMatrix M = DenseMatrix::Zero(n * m, n * m);
    for (size_t k = 0; k < A.size(); ++k) {
        DenseMatrix Ak = A[k].to_dense();
        DenseMatrix Bk = B[k].to_dense();
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                if (Ak(i, j) != 0.0)
                    M.block(i * m, j * m, m, m) += Ak(i, j) * Bk;
    }
    return M;
}

DenseMatrix materialize_kron_sum(const std::vector<DenseMatrix>& A,
                                 const std::vector<DenseMatrix>& B,
                                 Index cap) {
    std::vector<Factor> fa, fb;
    fa.reserve(A.size());
    fb.reserve(B.size());
    for (const auto& M : A) fa.emplace_back(M);
    for (const auto& M : B) fb.emplace_back(M);
    return materialize_kron_sum(fa, fb, cap);
}

}  // namespace kronsolve
