#include "kronsolve/kinv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "kronsolve/kernels.hpp"
#include "kronsolve/util.hpp"

namespace kronsolve {

namespace {

Factor factor_product(const Factor& A, const Factor& B) {
    if (A.is_sparse() && B.is_sparse()) {
        SparseMatrix P = A.sparse() * B.sparse();
        P.makeCompressed();
        return Factor(std::move(P));
    }
    if (A.is_sparse()) return Factor(DenseMatrix(A.sparse() * B.dense()));
    if (B.is_sparse()) return Factor(DenseMatrix(A.dense() * B.sparse()));
    return Factor(DenseMatrix(A.dense() * B.dense()));
}

double factor_trace(const Factor& F) {
    if (!F.is_sparse()) return F.dense().trace();
    double t = 0.0;
    const SparseMatrix& S = F.sparse();
    for (Index j = 0; j < S.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(S, j); it; ++it)
            if (it.row() == j) t += it.value();
    return t;
}

void add_scaled(DenseMatrix& acc, double w, const Factor& F) {
    if (w == 0.0) return;
    if (F.is_sparse()) {
        const SparseMatrix& S = F.sparse();
        for (Index j = 0; j < S.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(S, j); it; ++it)
                acc(it.row(), j) += w * it.value();
    } else {
        acc += w * F.dense();
    }
}

// Coefficients of one half-step: beta[k*r+l](s,t) = <A_k F_s, A_l F_t>_F and
// delta(k,s) = trace(A_k F_s).
struct HalfStepCoeffs {
    std::vector<DenseMatrix> beta;
    DenseMatrix delta;
};

HalfStepCoeffs compute_coeffs(const std::vector<Factor>& A,
                              const std::vector<Factor>& F, int threads) {
    const int r = static_cast<int>(A.size());
    const int q = static_cast<int>(F.size());

    // Products A_k F_s; slots are disjoint, so parallel evaluation is
    // deterministic.
    std::vector<std::optional<Factor>> G(r * q);
    parallel_for(
        static_cast<Index>(r) * q,
        [&](Index i) {
            const int k = static_cast<int>(i / q);
            const int s = static_cast<int>(i % q);
            G[i] = factor_product(A[k], F[s]);
        },
        threads);

    HalfStepCoeffs c;
    c.beta.assign(r * r, DenseMatrix::Zero(q, q));
    c.delta.resize(r, q);
    for (int k = 0; k < r; ++k)
        for (int s = 0; s < q; ++s)
            c.delta(k, s) = factor_trace(*G[k * q + s]);
    for (int k = 0; k < r; ++k)
        for (int l = k; l < r; ++l) {
            DenseMatrix& bkl = c.beta[k * r + l];
            for (int s = 0; s < q; ++s)
                for (int t = 0; t < q; ++t) {
                    if (k == l && t < s) {
                        bkl(s, t) = bkl(t, s);
                        continue;
                    }
                    bkl(s, t) =
                        frobenius_inner(*G[k * q + s], *G[l * q + t]);
                }
            if (l != k) c.beta[l * r + k] = bkl.transpose();
        }
    return c;
}

double residual_from_coeffs(Index n, Index m, const HalfStepCoeffs& beta_side,
                            const HalfStepCoeffs& alpha_side) {
    const int r = static_cast<int>(beta_side.delta.rows());
    double cross = alpha_side.delta.cwiseProduct(beta_side.delta).sum();
    double tail = 0.0;
    for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l)
            tail += alpha_side.beta[k * r + l]
                        .cwiseProduct(beta_side.beta[k * r + l])
                        .sum();
    double r2 = static_cast<double>(n) * static_cast<double>(m) -
                2.0 * cross + tail;
    return std::sqrt(std::max(r2, 0.0));
}

// Orthonormal recombination of a factor family. The following half-step is
// equivariant under invertible mixing of its input side, so this leaves the
// mathematical iteration unchanged while keeping the coefficient formulas
// free of cancellation between near-parallel factors. Returns the mixing
// matrix (identity when `soft` and the family is numerically dependent; the
// pattern-constrained path handles that case with its ridge instead).
DenseMatrix orthonormalize_factors(std::vector<Factor>& F, const char* side,
                                   bool soft) {
    const int q = static_cast<int>(F.size());
    DenseMatrix G(q, q);
    for (int s = 0; s < q; ++s)
        for (int t = s; t < q; ++t)
            G(s, t) = G(t, s) = frobenius_inner(F[s], F[t]);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(G);
    const Vector& lambda = es.eigenvalues();
    const double lmax = lambda.maxCoeff();
    if (!(lmax > 0.0) || lambda.minCoeff() <= 1e-26 * lmax) {
        if (soft) return DenseMatrix::Identity(q, q);
        throw DependentFactorsError(std::string("kinv_als: the ") + side +
                                    " factor matrices are linearly dependent");
    }
    DenseMatrix W = es.eigenvectors() *
                    lambda.cwiseSqrt().cwiseInverse().asDiagonal();

    bool all_sparse = true;
    for (const auto& f : F) all_sparse &= f.is_sparse();
    std::vector<Factor> mixed;
    mixed.reserve(q);
    const Index dim = F.front().rows();
    for (int s = 0; s < q; ++s) {
        if (all_sparse) {
            std::vector<Eigen::Triplet<double>> trips;
            for (int u = 0; u < q; ++u) {
                const double w = W(u, s);
                if (w == 0.0) continue;
                const SparseMatrix& S = F[u].sparse();
                for (Index j = 0; j < S.outerSize(); ++j)
                    for (SparseMatrix::InnerIterator it(S, j); it; ++it)
                        trips.emplace_back(it.row(), j, w * it.value());
            }
            SparseMatrix M(dim, dim);
            M.setFromTriplets(trips.begin(), trips.end());
            M.makeCompressed();
            mixed.emplace_back(std::move(M));
        } else {
            DenseMatrix M = DenseMatrix::Zero(dim, dim);
            for (int u = 0; u < q; ++u) add_scaled(M, W(u, s), F[u]);
            mixed.emplace_back(std::move(M));
        }
    }
    F = std::move(mixed);
    return W;
}

// beta'(s,t) = <A_k C'_s, A_l C'_t> for C'_s = sum_u W(u,s) C_u.
void transform_coeffs(HalfStepCoeffs& c, const DenseMatrix& W) {
    for (auto& block : c.beta) block = W.transpose() * block * W;
    c.delta = c.delta * W;
}

DenseMatrix solve_normal_equations(const DenseMatrix& S, const DenseMatrix& RHS,
                                   const char* side) {
    Eigen::LDLT<DenseMatrix> ldlt(S);
    if (ldlt.info() == Eigen::Success) {
        Vector d = ldlt.vectorD();
        double dmax = d.cwiseAbs().maxCoeff();
        if (dmax > 0.0 && d.minCoeff() > 1e-13 * dmax) return ldlt.solve(RHS);
    }
    Eigen::FullPivLU<DenseMatrix> lu(S);
    if (!lu.isInvertible())
        throw DependentFactorsError(
            std::string("kinv_als: normal equations for the ") + side +
            " factors are singular; the opposite-side factor matrices are "
            "linearly dependent");
    return lu.solve(RHS);
}

std::vector<Factor> default_init(Index dim, int q) {
    std::vector<Factor> Cs;
    Cs.reserve(q);
    for (int s = 0; s < q; ++s) {
        DenseMatrix C = DenseMatrix::Identity(dim, dim);
        if (s > 0) C(s % dim, (s / dim) % dim) += 1e-3;
        Cs.emplace_back(std::move(C));
    }
    return Cs;
}

std::vector<Factor> transposed_all(const std::vector<Factor>& F) {
    std::vector<Factor> out;
    out.reserve(F.size());
    for (const auto& f : F) out.push_back(f.transposed());
    return out;
}

// The gram cache is shared through the operator for small r and rebuilt
// locally otherwise to bound resident memory.
std::shared_ptr<const GramCache> get_gram(const KroneckerOperator& op) {
    if (op.r() <= 32)
        return std::shared_ptr<const GramCache>(&op.gram(),
                                                [](const GramCache*) {});
    return std::make_shared<GramCache>(op.right_factors(), op.left_factors());
}

// ---- dense (unconstrained) half-step -------------------------------------

std::vector<Factor> dense_half_step(const std::vector<Factor>& side_factors,
                                    const std::vector<Factor>& side_transposed,
                                    const GramCache& gram, bool left_side,
                                    const HalfStepCoeffs& coeffs, int q,
                                    const char* name) {
    const int r = static_cast<int>(side_factors.size());
    const Index dim = side_factors.front().rows();

    DenseMatrix S = DenseMatrix::Zero(q * dim, q * dim);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) {
            DenseMatrix block = DenseMatrix::Zero(dim, dim);
            for (int k = 0; k < r; ++k)
                for (int l = 0; l < r; ++l)
                    add_scaled(block, coeffs.beta[k * r + l](s, t),
                               left_side ? gram.btb(k, l) : gram.ata(k, l));
            S.block(s * dim, t * dim, dim, dim) = block;
        }

    DenseMatrix RHS = DenseMatrix::Zero(q * dim, dim);
    for (int s = 0; s < q; ++s) {
        DenseMatrix block = DenseMatrix::Zero(dim, dim);
        for (int k = 0; k < r; ++k)
            add_scaled(block, coeffs.delta(k, s), side_transposed[k]);
        RHS.middleRows(s * dim, dim) = block;
    }

    DenseMatrix W = solve_normal_equations(S, RHS, name);
    std::vector<Factor> out;
    out.reserve(q);
    for (int s = 0; s < q; ++s)
        out.emplace_back(DenseMatrix(W.middleRows(s * dim, dim)));
    return out;
}

// ---- pattern-constrained half-step ----------------------------------------

// q x q grid of normal-equation blocks plus the q right-hand-side blocks.
struct BlockSystem {
    std::vector<Factor> S;    // q*q blocks, dim x dim
    std::vector<Factor> rhs;  // q blocks, dim x dim
    int q = 0;
    Index dim = 0;
};

Factor combine_blocks(const GramCache& gram, bool left_side, int r,
                      const std::function<double(int, int)>& coeff,
                      Index dim) {
    bool all_sparse = true;
    for (int k = 0; k < r && all_sparse; ++k)
        for (int l = 0; l < r && all_sparse; ++l)
            all_sparse = (left_side ? gram.btb(k, l) : gram.ata(k, l)).is_sparse();
    if (!all_sparse) {
        DenseMatrix block = DenseMatrix::Zero(dim, dim);
        for (int k = 0; k < r; ++k)
            for (int l = 0; l < r; ++l)
                add_scaled(block, coeff(k, l),
                           left_side ? gram.btb(k, l) : gram.ata(k, l));
        return Factor(std::move(block));
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) {
            const double w = coeff(k, l);
            if (w == 0.0) continue;
            const SparseMatrix& G =
                (left_side ? gram.btb(k, l) : gram.ata(k, l)).sparse();
            for (Index j = 0; j < G.outerSize(); ++j)
                for (SparseMatrix::InnerIterator it(G, j); it; ++it)
                    trips.emplace_back(it.row(), j, w * it.value());
        }
    SparseMatrix block(dim, dim);
    block.setFromTriplets(trips.begin(), trips.end());
    block.makeCompressed();
    return Factor(std::move(block));
}

BlockSystem assemble_block_system(const GramCache& gram, bool left_side,
                                  const std::vector<Factor>& side_transposed,
                                  const HalfStepCoeffs& coeffs, int q,
                                  Index dim) {
    const int r = static_cast<int>(side_transposed.size());
    BlockSystem sys;
    sys.q = q;
    sys.dim = dim;
    sys.S.reserve(q * q);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
            sys.S.push_back(combine_blocks(
                gram, left_side, r,
                [&](int k, int l) { return coeffs.beta[k * r + l](s, t); },
                dim));
    sys.rhs.reserve(q);
    bool all_sparse = true;
    for (const auto& f : side_transposed) all_sparse &= f.is_sparse();
    for (int s = 0; s < q; ++s) {
        if (all_sparse) {
            std::vector<Eigen::Triplet<double>> trips;
            for (int k = 0; k < r; ++k) {
                const double w = coeffs.delta(k, s);
                if (w == 0.0) continue;
                const SparseMatrix& T = side_transposed[k].sparse();
                for (Index j = 0; j < T.outerSize(); ++j)
                    for (SparseMatrix::InnerIterator it(T, j); it; ++it)
                        trips.emplace_back(it.row(), j, w * it.value());
            }
            SparseMatrix block(dim, dim);
            block.setFromTriplets(trips.begin(), trips.end());
            block.makeCompressed();
            sys.rhs.emplace_back(std::move(block));
        } else {
            DenseMatrix block = DenseMatrix::Zero(dim, dim);
            for (int k = 0; k < r; ++k)
                add_scaled(block, coeffs.delta(k, s), side_transposed[k]);
            sys.rhs.emplace_back(std::move(block));
        }
    }
    return sys;
}

void gather_block(const Factor& blk, const IndexSet& J,
                  const std::vector<Index>& pos, DenseMatrix& K, Index row_off,
                  Index col_off) {
    const Index nJ = static_cast<Index>(J.size());
    if (!blk.is_sparse()) {
        const DenseMatrix& D = blk.dense();
        for (Index b = 0; b < nJ; ++b)
            for (Index a = 0; a < nJ; ++a)
                K(row_off + a, col_off + b) = D(J[a], J[b]);
        return;
    }
    K.block(row_off, col_off, nJ, nJ).setZero();
    const SparseMatrix& S = blk.sparse();
    for (Index b = 0; b < nJ; ++b)
        for (SparseMatrix::InnerIterator it(S, J[b]); it; ++it) {
            const Index a = pos[it.row()];
            if (a >= 0) K(row_off + a, col_off + b) = it.value();
        }
}

void gather_rhs(const Factor& blk, const IndexSet& J,
                const std::vector<Index>& pos, Index col, Vector& g,
                Index offset) {
    const Index nJ = static_cast<Index>(J.size());
    if (!blk.is_sparse()) {
        for (Index a = 0; a < nJ; ++a) g(offset + a) = blk.dense()(J[a], col);
        return;
    }
    g.segment(offset, nJ).setZero();
    const SparseMatrix& S = blk.sparse();
    for (SparseMatrix::InnerIterator it(S, col); it; ++it) {
        const Index a = pos[it.row()];
        if (a >= 0) g(offset + a) = it.value();
    }
}

// Independent reduced solve per column; any worker count produces identical
// factors.
std::vector<Factor> pattern_half_step(const BlockSystem& sys,
                                      const SparsityPattern& pattern,
                                      int threads, bool& regularized) {
    const int q = sys.q;
    const Index dim = sys.dim;
    std::vector<std::vector<std::vector<Eigen::Triplet<double>>>> per_col(
        dim, std::vector<std::vector<Eigen::Triplet<double>>>(q));
    std::atomic<bool> notice{false};

    parallel_for(
        dim,
        [&](Index j) {
            const IndexSet& J = pattern.column(j);
            const Index nJ = static_cast<Index>(J.size());
            std::vector<Index> pos(dim, -1);
            for (Index a = 0; a < nJ; ++a) pos[J[a]] = a;

            DenseMatrix K(q * nJ, q * nJ);
            for (int s = 0; s < q; ++s)
                for (int t = 0; t < q; ++t)
                    gather_block(sys.S[s * q + t], J, pos, K, s * nJ, t * nJ);
            Vector g(q * nJ);
            for (int s = 0; s < q; ++s)
                gather_rhs(sys.rhs[s], J, pos, j, g, s * nJ);

            Eigen::LDLT<DenseMatrix> ldlt(K);
            Vector sol;
            bool ok = ldlt.info() == Eigen::Success;
            if (ok) {
                Vector d = ldlt.vectorD();
                double dmax = d.cwiseAbs().maxCoeff();
                ok = dmax > 0.0 && d.minCoeff() > 1e-13 * dmax;
            }
            if (ok) {
                sol = ldlt.solve(g);
            } else {
                const double ridge = 1e-12 * K.trace();
                DenseMatrix Kr = K +
                    ridge * DenseMatrix::Identity(K.rows(), K.cols());
                sol = Eigen::LDLT<DenseMatrix>(Kr).solve(g);
                notice.store(true, std::memory_order_relaxed);
            }
            for (int s = 0; s < q; ++s)
                for (Index a = 0; a < nJ; ++a)
                    per_col[j][s].emplace_back(J[a], j, sol(s * nJ + a));
        },
        threads);

    if (notice.load()) regularized = true;

    std::vector<Factor> out;
    out.reserve(q);
    for (int s = 0; s < q; ++s) {
        std::vector<Eigen::Triplet<double>> trips;
        for (Index j = 0; j < dim; ++j)
            trips.insert(trips.end(), per_col[j][s].begin(),
                         per_col[j][s].end());
        SparseMatrix D(dim, dim);
        D.setFromTriplets(trips.begin(), trips.end());
        D.makeCompressed();
        out.emplace_back(std::move(D));
    }
    return out;
}

struct BestIterate {
    std::vector<Factor> Cs, Ds;
    double residual = std::numeric_limits<double>::infinity();
    void consider(const std::vector<Factor>& C, const std::vector<Factor>& D,
                  double res) {
        if (res < residual) {
            Cs = C;
            Ds = D;
            residual = res;
        }
    }
};

}  // namespace

// ---- SparsityPattern -------------------------------------------------------

SparsityPattern::SparsityPattern(Index dim, std::vector<IndexSet> columns)
    : dim_(dim), cols_(std::move(columns)) {
    if (static_cast<Index>(cols_.size()) != dim)
        throw ArgumentError("SparsityPattern: need one index set per column");
    for (Index j = 0; j < dim; ++j) {
        const IndexSet& J = cols_[j];
        if (J.empty())
            throw ArgumentError("SparsityPattern: column " + std::to_string(j) +
                                " is empty");
        for (size_t a = 0; a < J.size(); ++a) {
            if (J[a] < 0 || J[a] >= dim)
                throw ArgumentError("SparsityPattern: index out of range");
            if (a > 0 && J[a] <= J[a - 1])
                throw ArgumentError(
                    "SparsityPattern: indices must be strictly increasing");
        }
    }
}

SparsityPattern SparsityPattern::diagonal(Index dim) {
    std::vector<IndexSet> cols(dim);
    for (Index j = 0; j < dim; ++j) cols[j] = {j};
    return SparsityPattern(dim, std::move(cols));
}

SparsityPattern SparsityPattern::full(Index dim) {
    std::vector<IndexSet> cols(dim);
    IndexSet all(dim);
    for (Index i = 0; i < dim; ++i) all[i] = i;
    for (Index j = 0; j < dim; ++j) cols[j] = all;
    return SparsityPattern(dim, std::move(cols));
}

SparsityPattern SparsityPattern::of(const SparseMatrix& S) {
    if (S.rows() != S.cols())
        throw DimensionError("SparsityPattern::of: matrix must be square");
    std::vector<IndexSet> cols(S.cols());
    for (Index j = 0; j < S.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(S, j); it; ++it)
            cols[j].push_back(it.row());
    return SparsityPattern(S.cols(), std::move(cols));
}

Index SparsityPattern::nnz() const {
    Index total = 0;
    for (const auto& J : cols_) total += static_cast<Index>(J.size());
    return total;
}

double SparsityPattern::density() const {
    return dim_ == 0 ? 0.0
                     : static_cast<double>(nnz()) /
                           (static_cast<double>(dim_) * dim_);
}

bool SparsityPattern::contains(Index i, Index j) const {
    const IndexSet& J = cols_[j];
    return std::binary_search(J.begin(), J.end(), i);
}

SparseMatrix SparsityPattern::project(const DenseMatrix& M) const {
    if (M.rows() != dim_ || M.cols() != dim_)
        throw DimensionError("SparsityPattern::project: shape mismatch");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nnz());
    for (Index j = 0; j < dim_; ++j)
        for (Index i : cols_[j]) trips.emplace_back(i, j, M(i, j));
    SparseMatrix S(dim_, dim_);
    S.setFromTriplets(trips.begin(), trips.end());
    S.makeCompressed();
    return S;
}

SparsityPattern build_pattern(const KroneckerOperator& op, OperatorSide side,
                              int power, PatternVariant variant,
                              double density_cap) {
    if (power < 0) throw ArgumentError("build_pattern: power must be >= 0");
    const auto& factors = side == OperatorSide::right ? op.right_factors()
                                                      : op.left_factors();
    for (const auto& f : factors)
        if (!f.is_sparse())
            throw ArgumentError("build_pattern: factors must be sparse");

    const Index dim = factors.front().rows();
    SparseMatrix S(dim, dim);
    for (const auto& f : factors) S += f.sparse();
    S.makeCompressed();
    auto normalize = [](SparseMatrix& M) {
        for (Index k = 0; k < M.nonZeros(); ++k) M.valuePtr()[k] = 1.0;
    };
    normalize(S);

    SparseMatrix base;
    if (variant == PatternVariant::gram) {
        base = SparseMatrix(S.transpose()) * S;
        base.makeCompressed();
        normalize(base);
    } else {
        base = S;
    }

    SparseMatrix P(dim, dim);
    P.setIdentity();
    for (int p = 0; p < power; ++p) {
        P = (P * base).eval();
        P.makeCompressed();
        normalize(P);
    }

    SparsityPattern pattern = SparsityPattern::of(P);
    if (pattern.density() > density_cap) pattern.density_warning = true;
    return pattern;
}

// ---- ALS drivers -----------------------------------------------------------

namespace {

KronInverse run_kinv(const KroneckerOperator& op, int q,
                     const KinvOptions& opts,
                     const SparsityPattern* pattern_C,
                     const SparsityPattern* pattern_D) {
    const Index n = op.n(), m = op.m();
    if (q < 1) throw ArgumentError("kinv: rank q must be >= 1");
    if (opts.max_iter < 1)
        throw ArgumentError("kinv: max_iter must be >= 1");

    auto gram = get_gram(op);
    std::vector<Factor> At = transposed_all(op.right_factors());
    std::vector<Factor> Bt = transposed_all(op.left_factors());

    std::vector<Factor> Cs;
    if (!opts.init_Cs.empty()) {
        if (static_cast<int>(opts.init_Cs.size()) != q)
            throw ArgumentError("kinv: init_Cs must contain q matrices");
        for (const auto& C : opts.init_Cs) {
            if (C.rows() != n || C.cols() != n)
                throw DimensionError("kinv: init_Cs must be n x n");
            if (pattern_C)
                Cs.emplace_back(pattern_C->project(C));
            else
                Cs.emplace_back(C);
        }
    } else {
        Cs = default_init(n, q);
        if (pattern_C) {
            std::vector<Factor> projected;
            for (const auto& C : Cs)
                projected.emplace_back(pattern_C->project(C.dense()));
            Cs = std::move(projected);
        }
    }

    const double tol =
        opts.tol >= 0.0
            ? opts.tol
            : 0.1 * std::sqrt(static_cast<double>(n) * static_cast<double>(m));

    KronInverse out;
    out.q = q;
    if (pattern_C) out.pattern_C = *pattern_C;
    if (pattern_D) out.pattern_D = *pattern_D;

    std::vector<Factor> Ds;
    BestIterate best;
    const bool soft = pattern_C != nullptr;
    orthonormalize_factors(Cs, "C", soft);
    HalfStepCoeffs beta = compute_coeffs(op.right_factors(), Cs, opts.threads);
    int stagnant = 0;
    int iter = 0;

    while (iter < opts.max_iter) {
        // D-step
        if (pattern_D) {
            BlockSystem sys =
                assemble_block_system(*gram, /*left_side=*/true, Bt, beta, q, m);
            Ds = pattern_half_step(sys, *pattern_D, opts.threads,
                                   out.column_regularization_notice);
        } else {
            Ds = dense_half_step(op.left_factors(), Bt, *gram,
                                 /*left_side=*/true, beta, q, "D");
        }
        orthonormalize_factors(Ds, "D", soft);

        // C-step
        HalfStepCoeffs alpha =
            compute_coeffs(op.left_factors(), Ds, opts.threads);
        if (pattern_C) {
            BlockSystem sys = assemble_block_system(*gram, /*left_side=*/false,
                                                    At, alpha, q, n);
            Cs = pattern_half_step(sys, *pattern_C, opts.threads,
                                   out.column_regularization_notice);
        } else {
            Cs = dense_half_step(op.right_factors(), At, *gram,
                                 /*left_side=*/false, alpha, q, "C");
        }

        // Residual for the current iterate; the refreshed coefficients feed
        // the next D-step.
        beta = compute_coeffs(op.right_factors(), Cs, opts.threads);
        const double res = residual_from_coeffs(n, m, beta, alpha);
        out.residual_history.push_back(res);
        ++iter;

        if (res >= best.residual * (1.0 - 1e-3)) {
            if (++stagnant >= 5) {
                best.consider(Cs, Ds, res);
                out.stagnation_warning = true;
                break;
            }
        } else {
            stagnant = 0;
        }
        best.consider(Cs, Ds, res);
        if (res <= tol) break;

        if (iter < opts.max_iter) {
            DenseMatrix mix = orthonormalize_factors(Cs, "C", soft);
            transform_coeffs(beta, mix);
        }
    }

    out.Cs = std::move(best.Cs);
    out.Ds = std::move(best.Ds);
    out.final_residual = best.residual;
    out.iterations = iter;
    return out;
}

}  // namespace

KronInverse kinv_als(const KroneckerOperator& op, int q,
                     const KinvOptions& opts) {
    return run_kinv(op, q, opts, nullptr, nullptr);
}

KronInverse kinv_sparse_als(const KroneckerOperator& op, int q,
                            const SparsityPattern& pattern_C,
                            const SparsityPattern& pattern_D,
                            const KinvOptions& opts) {
    if (pattern_C.dim() != op.n())
        throw DimensionError("kinv_sparse_als: pattern_C dimension mismatch");
    if (pattern_D.dim() != op.m())
        throw DimensionError("kinv_sparse_als: pattern_D dimension mismatch");
    return run_kinv(op, q, opts, &pattern_C, &pattern_D);
}

DenseMatrix apply_kinv(const KronInverse& kinv, const DenseMatrix& R) {
    if (kinv.q < 1) throw ArgumentError("apply_kinv: empty inverse");
    const Index m = kinv.Ds.front().rows();
    const Index n = kinv.Cs.front().rows();
    if (R.rows() != m || R.cols() != n)
        throw DimensionError("apply_kinv: R must be " + std::to_string(m) +
                             "x" + std::to_string(n));
    DenseMatrix X = DenseMatrix::Zero(m, n);
    for (int s = 0; s < kinv.q; ++s)
        X.noalias() += kinv.Cs[s].mul_transpose_right(kinv.Ds[s].mul(R));
    return X;
}

double kinv_residual(const KroneckerOperator& op, const KronInverse& kinv) {
    HalfStepCoeffs beta = compute_coeffs(op.right_factors(), kinv.Cs, 0);
    HalfStepCoeffs alpha = compute_coeffs(op.left_factors(), kinv.Ds, 0);
    return residual_from_coeffs(op.n(), op.m(), beta, alpha);
}

KronInverse symmetrize(const KroneckerOperator& op, const KronInverse& kinv) {
    KronInverse out = kinv;
    for (auto& C : out.Cs) C = C.symmetrized();
    for (auto& D : out.Ds) D = D.symmetrized();

    // Patterns widen to their symmetric closure.
    auto symmetrize_pattern = [](const SparsityPattern& p) {
        std::vector<IndexSet> cols(p.dim());
        for (Index j = 0; j < p.dim(); ++j)
            for (Index i : p.column(j)) {
                cols[j].push_back(i);
                cols[i].push_back(j);
            }
        for (auto& J : cols) {
            std::sort(J.begin(), J.end());
            J.erase(std::unique(J.begin(), J.end()), J.end());
        }
        return SparsityPattern(p.dim(), std::move(cols));
    };
    if (out.pattern_C) out.pattern_C = symmetrize_pattern(*out.pattern_C);
    if (out.pattern_D) out.pattern_D = symmetrize_pattern(*out.pattern_D);

    out.final_residual = kinv_residual(op, out);
    return out;
}

}  // namespace kronsolve
