#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "kronsolve/factor.hpp"
#include "kronsolve/types.hpp"

namespace kronsolve {

/// Vectorized factor stacks V_A = [vec(A_1), ..., vec(A_r)] and the analogue
/// for the left factors.
struct FactorStack {
    DenseMatrix V_A;  // n^2 x r
    DenseMatrix V_B;  // m^2 x r
};

/// Precomputed pairwise products A_k^T A_l and B_k^T B_l.
class GramCache {
public:
    GramCache(const std::vector<Factor>& A, const std::vector<Factor>& B);

    const Factor& ata(int k, int l) const { return AtA_[idx(k, l)]; }
    const Factor& btb(int k, int l) const { return BtB_[idx(k, l)]; }
    int r() const { return r_; }

private:
    int idx(int k, int l) const { return k * r_ + l; }
    int r_;
    std::vector<Factor> AtA_;
    std::vector<Factor> BtB_;
};

/// The operator X -> sum_k B_k X A_k^T, held as factor lists and never
/// materialized except for small test instances.
class KroneckerOperator {
public:
    KroneckerOperator(std::vector<Factor> right_factors,
                      std::vector<Factor> left_factors);

    Index n() const { return n_; }
    Index m() const { return m_; }
    int r() const { return static_cast<int>(A_.size()); }

    const Factor& A(int k) const { return A_[k]; }
    const Factor& B(int k) const { return B_[k]; }
    const std::vector<Factor>& right_factors() const { return A_; }
    const std::vector<Factor>& left_factors() const { return B_; }

    /// sum_k B_k X A_k^T; each term evaluated in the cheaper association.
    DenseMatrix apply(const DenseMatrix& X) const;

    FactorStack factor_stacks() const;

    /// Lazily built and shared; thread-safe initialization.
    const GramCache& gram() const;

    /// ||M||_F computed from the stacks without materializing.
    double norm_frobenius() const;

    /// sum_k A_k (x) B_k as an (n m) x (n m) dense matrix. Guarded by cap.
    DenseMatrix materialize(Index cap = 4096) const;

private:
    // Shared between copies: an operator is immutable, so copies may reuse
    // the same lazily built cache.
    struct LazyGram {
        std::once_flag once;
        std::shared_ptr<const GramCache> cache;
    };

    std::vector<Factor> A_;  // right factors, n x n
    std::vector<Factor> B_;  // left factors, m x m
    Index n_ = 0;
    Index m_ = 0;
    std::shared_ptr<LazyGram> lazy_gram_ = std::make_shared<LazyGram>();
};

/// sum_k A_k (x) B_k for arbitrary factor lists (approximations, inverses).
DenseMatrix materialize_kron_sum(const std::vector<Factor>& A,
                                 const std::vector<Factor>& B,
                                 Index cap = 4096);
DenseMatrix materialize_kron_sum(const std::vector<DenseMatrix>& A,
                                 const std::vector<DenseMatrix>& B,
                                 Index cap = 4096);

}  // namespace kronsolve
