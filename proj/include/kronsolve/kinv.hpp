#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kronsolve/operator.hpp"

namespace kronsolve {

/// Sorted unique 0-based positions.
using IndexSet = std::vector<Index>;

/// Allowed nonzero rows per column of a square sparse factor.
class SparsityPattern {
public:
    SparsityPattern(Index dim, std::vector<IndexSet> columns);

    static SparsityPattern diagonal(Index dim);
    static SparsityPattern full(Index dim);
    static SparsityPattern of(const SparseMatrix& S);

    Index dim() const { return dim_; }
    const IndexSet& column(Index j) const { return cols_[j]; }
    Index nnz() const;
    double density() const;
    bool contains(Index i, Index j) const;

    /// Keeps only the in-pattern entries of M.
    SparseMatrix project(const DenseMatrix& M) const;

    /// Set when the construction routine found the pattern denser than the
    /// configured cap; the pattern is still usable.
    bool density_warning = false;

private:
    Index dim_;
    std::vector<IndexSet> cols_;
};

enum class PatternVariant { gram, plain };

enum class OperatorSide { left, right };

/// Structural pattern of (|S|^T |S|)^power (gram) or S^power (plain), where
/// S is the sum of the right or left factors. Power 0 yields the diagonal.
SparsityPattern build_pattern(const KroneckerOperator& op, OperatorSide side,
                              int power,
                              PatternVariant variant = PatternVariant::gram,
                              double density_cap = 0.20);

/// Kronecker rank-q approximate inverse sum_s C_s (x) D_s.
struct KronInverse {
    std::vector<Factor> Cs;  // n x n
    std::vector<Factor> Ds;  // m x m
    int q = 0;
    std::optional<SparsityPattern> pattern_C;
    std::optional<SparsityPattern> pattern_D;
    double final_residual = 0.0;  // ||I - M P||_F at exit
    int iterations = 0;
    bool stagnation_warning = false;
    bool column_regularization_notice = false;
    std::vector<double> residual_history;
};

struct KinvOptions {
    /// Absolute tolerance on ||I - M P||_F; < 0 selects the default
    /// 0.1 * sqrt(n m).
    double tol = -1.0;
    int max_iter = 10;
    /// Initial C_s; defaults to the identity-plus-perturbation family
    /// (projected onto the pattern in the sparse variant).
    std::vector<DenseMatrix> init_Cs;
    int threads = 0;  // 0: global default
};

/// Dense-factor ALS on the normal equations.
KronInverse kinv_als(const KroneckerOperator& op, int q,
                     const KinvOptions& opts = {});

/// Pattern-constrained variant: one assembly of the normal equations per
/// half-step and an independent reduced solve per column.
KronInverse kinv_sparse_als(const KroneckerOperator& op, int q,
                            const SparsityPattern& pattern_C,
                            const SparsityPattern& pattern_D,
                            const KinvOptions& opts = {});

/// P(R) = sum_s D_s R C_s^T.
DenseMatrix apply_kinv(const KronInverse& kinv, const DenseMatrix& R);

/// Replaces every factor by its symmetric part and refreshes the residual.
KronInverse symmetrize(const KroneckerOperator& op, const KronInverse& kinv);

/// ||I - M P||_F through the coefficient identity; nothing is materialized.
double kinv_residual(const KroneckerOperator& op, const KronInverse& kinv);

}  // namespace kronsolve
