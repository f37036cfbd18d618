#pragma once

#include <Eigen/LU>
#include <memory>

#include "kronsolve/kernels.hpp"
#include "kronsolve/nkp.hpp"
#include "kronsolve/types.hpp"

namespace kronsolve {

/// X = B^{-1} E A^{-T}, i.e. the solution of B X A^T = E, via two LU solves.
DenseMatrix solve_one_term(const DenseMatrix& A, const DenseMatrix& B,
                           const DenseMatrix& E);

/// Bartels-Stewart solver for A X + X B = C with cached Schur forms, reusable
/// across right-hand sides.
class StandardSylvesterSolver {
public:
    StandardSylvesterSolver(const DenseMatrix& A, const DenseMatrix& B);
    DenseMatrix solve(const DenseMatrix& C) const;

private:
    RealSchurResult schur_A_;   // A = Q_A T_A Q_A^T
    RealSchurResult schur_Bt_;  // B^T = Q_B T_B Q_B^T
};

DenseMatrix solve_standard(const DenseMatrix& A, const DenseMatrix& B,
                           const DenseMatrix& C);

/// Solves Z1 X Y1^T + Z2 X Y2^T = R by reduction to standard form. The
/// better-conditioned term ordering is chosen automatically; factorizations
/// are cached for repeated right-hand sides.
class TwoSidedSylvesterSolver {
public:
    TwoSidedSylvesterSolver(const DenseMatrix& Z1, const DenseMatrix& Z2,
                            const DenseMatrix& Y1, const DenseMatrix& Y2);
    DenseMatrix solve(const DenseMatrix& R) const;

private:
    Eigen::PartialPivLU<DenseMatrix> lu_Z_;  // inverted left coefficient
    Eigen::PartialPivLU<DenseMatrix> lu_Y_;  // inverted right coefficient
    std::unique_ptr<StandardSylvesterSolver> inner_;
};

DenseMatrix solve_two_sided(const DenseMatrix& Z1, const DenseMatrix& Z2,
                            const DenseMatrix& Y1, const DenseMatrix& Y2,
                            const DenseMatrix& R);

/// Applies an NKP approximation as a preconditioner: solves
/// sum_s Z_s X Y_s^T = R for q in {1, 2}. Factorizations are computed on the
/// first call and reused. Construction of the cache is single-writer.
class NkpPreconditioner {
public:
    explicit NkpPreconditioner(KronApprox approx);

    DenseMatrix apply(const DenseMatrix& R) const;

    /// Forces factorization now (setup timing).
    void prepare() const;

    /// Number of factorization passes performed; stays at 1 across repeated
    /// applications.
    int factorization_count() const { return factorizations_; }

    const KronApprox& approx() const { return approx_; }

private:
    KronApprox approx_;
    mutable int factorizations_ = 0;
    mutable std::unique_ptr<Eigen::PartialPivLU<DenseMatrix>> lu_Y1_, lu_Z1_;
    mutable std::unique_ptr<TwoSidedSylvesterSolver> two_sided_;
};

DenseMatrix apply_nkp_precond(const NkpPreconditioner& pre,
                              const DenseMatrix& R);

}  // namespace kronsolve
