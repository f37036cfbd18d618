#include "kronsolve/sylvester.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kronsolve/errors.hpp"

namespace kronsolve {

namespace {

// Diagonal block structure (start, size) of a quasi-triangular matrix.
std::vector<std::pair<Index, Index>> diag_blocks(const DenseMatrix& T) {
    std::vector<std::pair<Index, Index>> blocks;
    Index i = 0;
    while (i < T.rows()) {
        if (i + 1 < T.rows() && T(i + 1, i) != 0.0) {
            blocks.emplace_back(i, 2);
            i += 2;
        } else {
            blocks.emplace_back(i, 1);
            i += 1;
        }
    }
    return blocks;
}

// Solves T_A Y + Y T_B^T = F for upper quasi-triangular T_A, T_B by block
// back-substitution. Each diagonal pair gives a small dense system of size
// at most 4.
DenseMatrix solve_quasi_triangular(const DenseMatrix& TA, const DenseMatrix& TB,
                                   DenseMatrix F, double scale) {
    const auto ablocks = diag_blocks(TA);
    const auto bblocks = diag_blocks(TB);
    const Index mm = TA.rows();
    DenseMatrix Y(mm, TB.rows());

    for (auto jb = bblocks.rbegin(); jb != bblocks.rend(); ++jb) {
        const auto [j0, w] = *jb;
        DenseMatrix G = F.middleCols(j0, w);
        DenseMatrix W(mm, w);
        DenseMatrix Sjj = TB.block(j0, j0, w, w).transpose();

        for (auto ib = ablocks.rbegin(); ib != ablocks.rend(); ++ib) {
            const auto [i0, h] = *ib;
            DenseMatrix Taa = TA.block(i0, i0, h, h);
            const Index dim = h * w;
            DenseMatrix K = DenseMatrix::Zero(dim, dim);
            for (Index c = 0; c < w; ++c) K.block(c * h, c * h, h, h) = Taa;
            for (Index c = 0; c < w; ++c)
                for (Index d = 0; d < w; ++d) {
                    const double v = Sjj(d, c);
                    if (v != 0.0)
                        for (Index e = 0; e < h; ++e) K(c * h + e, d * h + e) += v;
                }

            Eigen::FullPivLU<DenseMatrix> lu(K);
            const double min_pivot =
                lu.matrixLU().diagonal().cwiseAbs().minCoeff();
            if (min_pivot <= 1e-13 * scale)
                throw NoUniqueSolutionError(
                    "sylvester: spectra clash, back-substitution pivot " +
                    std::to_string(min_pivot) + " below threshold");

            Vector g(dim);
            for (Index c = 0; c < w; ++c) g.segment(c * h, h) = G.block(i0, c, h, 1);
            Vector sol = lu.solve(g);
            for (Index c = 0; c < w; ++c) W.block(i0, c, h, 1) = sol.segment(c * h, h);

            if (i0 > 0)
                G.topRows(i0).noalias() -= TA.block(0, i0, i0, h) * W.middleRows(i0, h);
        }

        Y.middleCols(j0, w) = W;
        if (j0 > 0)
            F.leftCols(j0).noalias() -= W * TB.block(0, j0, j0, w).transpose();
    }
    return Y;
}

void require_square(const DenseMatrix& M, const char* name) {
    if (M.rows() != M.cols())
        throw DimensionError(std::string(name) + " must be square");
}

// rcond with a zero-pivot guard: Eigen's estimator misreports exactly
// singular factorizations.
double lu_rcond(const Eigen::PartialPivLU<DenseMatrix>& lu) {
    const double dmin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(dmin > 0.0)) return 0.0;
    return lu.rcond();
}

Eigen::PartialPivLU<DenseMatrix> checked_lu(const DenseMatrix& M,
                                            const char* name) {
    Eigen::PartialPivLU<DenseMatrix> lu(M);
    if (!(lu_rcond(lu) > 1e-15))
        throw SingularCoefficientError(
            std::string("sylvester: coefficient ") + name +
            " is numerically singular");
    return lu;
}

}  // namespace

DenseMatrix solve_one_term(const DenseMatrix& A, const DenseMatrix& B,
                           const DenseMatrix& E) {
    require_square(A, "A");
    require_square(B, "B");
    if (E.rows() != B.rows() || E.cols() != A.rows())
        throw DimensionError("solve_one_term: E must be m x n");
    auto lu_B = checked_lu(B, "B (left side)");
    auto lu_A = checked_lu(A, "A (right side)");
    DenseMatrix W = lu_B.solve(E);
    return lu_A.solve(W.transpose()).transpose();
}

StandardSylvesterSolver::StandardSylvesterSolver(const DenseMatrix& A,
                                                 const DenseMatrix& B) {
    require_square(A, "A");
    require_square(B, "B");
    schur_A_ = real_schur(A);
    schur_Bt_ = real_schur(B.transpose());
}

DenseMatrix StandardSylvesterSolver::solve(const DenseMatrix& C) const {
    if (C.rows() != schur_A_.T.rows() || C.cols() != schur_Bt_.T.rows())
        throw DimensionError("solve_standard: C must be m x n");
    const double scale = schur_A_.T.norm() + schur_Bt_.T.norm();
    DenseMatrix F = schur_A_.Q.transpose() * C * schur_Bt_.Q;
    DenseMatrix Y = solve_quasi_triangular(schur_A_.T, schur_Bt_.T,
                                           std::move(F), scale);
    return schur_A_.Q * Y * schur_Bt_.Q.transpose();
}

DenseMatrix solve_standard(const DenseMatrix& A, const DenseMatrix& B,
                           const DenseMatrix& C) {
    return StandardSylvesterSolver(A, B).solve(C);
}

TwoSidedSylvesterSolver::TwoSidedSylvesterSolver(const DenseMatrix& Z1,
                                                 const DenseMatrix& Z2,
                                                 const DenseMatrix& Y1,
                                                 const DenseMatrix& Y2) {
    require_square(Z1, "Z1");
    require_square(Z2, "Z2");
    require_square(Y1, "Y1");
    require_square(Y2, "Y2");

    // The reduction inverts one left and one right coefficient. Pick the
    // term ordering with the smaller product of condition estimates.
    Eigen::PartialPivLU<DenseMatrix> lu_Z2(Z2), lu_Y1(Y1), lu_Z1(Z1), lu_Y2(Y2);
    auto cond = [](const Eigen::PartialPivLU<DenseMatrix>& lu) {
        const double rc = lu_rcond(lu);
        return rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    };
    const double cond_as_given = cond(lu_Z2) * cond(lu_Y1);
    const double cond_swapped = cond(lu_Z1) * cond(lu_Y2);
    const bool swap = cond_swapped < cond_as_given;
    const double best = swap ? cond_swapped : cond_as_given;
    if (!(best <= 1e12))
        throw ReductionConditioningError(
            "solve_two_sided: reduction condition estimate " +
            std::to_string(best) +
            " exceeds 1e12 for both orderings; consider swapping the roles "
            "of terms 1 and 2 or rescaling the factors");

    lu_Z_ = swap ? std::move(lu_Z1) : std::move(lu_Z2);
    lu_Y_ = swap ? std::move(lu_Y2) : std::move(lu_Y1);
    const DenseMatrix& Znum = swap ? Z2 : Z1;  // numerator of the reduction
    const DenseMatrix& Ynum = swap ? Y1 : Y2;
    DenseMatrix A_tilde = lu_Z_.solve(Znum);
    DenseMatrix B_tilde = lu_Y_.solve(Ynum).transpose();
    inner_ = std::make_unique<StandardSylvesterSolver>(A_tilde, B_tilde);
}

DenseMatrix TwoSidedSylvesterSolver::solve(const DenseMatrix& R) const {
    DenseMatrix W = lu_Z_.solve(R);
    DenseMatrix C_tilde = lu_Y_.solve(W.transpose()).transpose();
    return inner_->solve(C_tilde);
}

DenseMatrix solve_two_sided(const DenseMatrix& Z1, const DenseMatrix& Z2,
                            const DenseMatrix& Y1, const DenseMatrix& Y2,
                            const DenseMatrix& R) {
    return TwoSidedSylvesterSolver(Z1, Z2, Y1, Y2).solve(R);
}

NkpPreconditioner::NkpPreconditioner(KronApprox approx)
    : approx_(std::move(approx)) {
    if (approx_.q < 1 || approx_.q > 2)
        throw UnsupportedRankError(
            "apply_nkp_precond: only q in {1, 2} is supported; higher rank "
            "application is as hard as the original multiterm equation");
}

void NkpPreconditioner::prepare() const {
    if (factorizations_ > 0) return;
    if (approx_.q == 1) {
        lu_Z1_ = std::make_unique<Eigen::PartialPivLU<DenseMatrix>>(
            approx_.Zs[0]);
        lu_Y1_ = std::make_unique<Eigen::PartialPivLU<DenseMatrix>>(
            approx_.Ys[0]);
        if (!(lu_rcond(*lu_Z1_) > 1e-15))
            throw SingularCoefficientError(
                "apply_nkp_precond: Z1 (left side) is numerically singular");
        if (!(lu_rcond(*lu_Y1_) > 1e-15))
            throw SingularCoefficientError(
                "apply_nkp_precond: Y1 (right side) is numerically singular");
    } else {
        two_sided_ = std::make_unique<TwoSidedSylvesterSolver>(
            approx_.Zs[0], approx_.Zs[1], approx_.Ys[0], approx_.Ys[1]);
    }
    ++factorizations_;
}

DenseMatrix NkpPreconditioner::apply(const DenseMatrix& R) const {
    prepare();
    if (approx_.q == 1) {
        DenseMatrix W = lu_Z1_->solve(R);
        return lu_Y1_->solve(W.transpose()).transpose();
    }
    return two_sided_->solve(R);
}

DenseMatrix apply_nkp_precond(const NkpPreconditioner& pre,
                              const DenseMatrix& R) {
    return pre.apply(R);
}

}  // namespace kronsolve
