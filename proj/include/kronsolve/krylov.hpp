#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kronsolve/kinv.hpp"
#include "kronsolve/operator.hpp"
#include "kronsolve/sylvester.hpp"

namespace kronsolve {

enum class PreconditionerKind { none, nkp, kinv, custom };

/// A linear map R -> P(R) used for right preconditioning. Factorization-based
/// kinds prepare lazily; prepare() forces the work up front so setup can be
/// timed separately.
class Preconditioner {
public:
    static Preconditioner none();
    static Preconditioner nkp(KronApprox approx);
    static Preconditioner kinv(KronInverse inv);
    /// Custom preconditioner solving A X + X B = R (application baselines).
    static Preconditioner standard_sylvester(DenseMatrix A, DenseMatrix B);
    static Preconditioner custom(std::function<DenseMatrix(const DenseMatrix&)> apply);

    PreconditionerKind kind() const { return kind_; }
    bool is_identity() const { return kind_ == PreconditionerKind::none; }

    DenseMatrix apply(const DenseMatrix& R) const;
    void prepare() const;

    /// Observability hooks for cache-reuse tests and reports.
    int factorization_count() const;
    const KronInverse* kinv_data() const { return kinv_ ? &*kinv_ : nullptr; }
    const NkpPreconditioner* nkp_data() const { return nkp_.get(); }

private:
    Preconditioner() = default;
    PreconditionerKind kind_ = PreconditionerKind::none;
    std::shared_ptr<NkpPreconditioner> nkp_;
    std::optional<KronInverse> kinv_;
    DenseMatrix custom_A_, custom_B_;
    mutable std::shared_ptr<StandardSylvesterSolver> custom_solver_;
    std::function<DenseMatrix(const DenseMatrix&)> custom_apply_;
    mutable int custom_factorizations_ = 0;
};

/// Per-iteration record of a solve. Residuals are true relative residuals of
/// the original equation; GMRES entries inside a cycle are the recurrence
/// estimates (equal to the true residual for right preconditioning) and are
/// replaced by exact recomputations at restarts and exit.
struct ConvergenceHistory {
    std::vector<double> residuals;   // residuals[0] = 1.0 (X_0 = 0)
    std::vector<double> wall_times;  // seconds since solve start
    std::vector<Index> bandwidths;   // per-iterate, when tracking is enabled
    bool converged = false;
    int iterations = 0;
};

struct SolveReport {
    DenseMatrix X;
    ConvergenceHistory history;
    double setup_seconds = 0.0;
    double solve_seconds = 0.0;
    bool breakdown = false;
    /// Bi-CGSTAB s-step residuals (one per full iteration).
    std::vector<double> half_residuals;
};

struct SolverOptions {
    double tol = 1e-8;   // on the true relative residual
    int restart = 50;    // GMRES cycle length
    int max_iter = 500;  // total inner iterations (GMRES) / full cycles
    bool track_bandwidth = false;
};

/// Matrix-oriented restarted GMRES with right preconditioning. All inner
/// products are Frobenius products of m x n matrices.
SolveReport gmres(const KroneckerOperator& op, const Preconditioner& pre,
                  const DenseMatrix& E, const SolverOptions& opts);

/// Matrix-oriented Bi-CGSTAB with right preconditioning, X_0 = 0.
SolveReport bicgstab(const KroneckerOperator& op, const Preconditioner& pre,
                     const DenseMatrix& E, const SolverOptions& opts);

/// Lemma-style audit of iterate bandwidth growth for banded data.
struct BandwidthAudit {
    Index beta_M = 0;  // max_k (beta_{A_k} + beta_{B_k})
    Index beta_P = 0;  // max_s (beta_{C_s} + beta_{D_s})
    Index beta_E = 0;
    std::vector<Index> bounds;     // per recorded full iteration j >= 1
    std::vector<Index> observed;   // bandwidth(X_j)
    std::vector<Index> tightness;  // bound - observed
    bool all_within_bound = true;
};

BandwidthAudit bandwidth_audit(const ConvergenceHistory& history,
                               const KroneckerOperator& op,
                               const KronInverse& precond,
                               const DenseMatrix& E);

/// CSV serialization: header "iter,residual_rel,time_s[,bandwidth]".
void write_history_csv(const std::string& path,
                       const ConvergenceHistory& history);

}  // namespace kronsolve
