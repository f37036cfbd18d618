#include "kronsolve/krylov.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "kronsolve/kernels.hpp"
#include "kronsolve/util.hpp"

namespace kronsolve {

// ---- Preconditioner --------------------------------------------------------

Preconditioner Preconditioner::none() {
    Preconditioner p;
    p.kind_ = PreconditionerKind::none;
    return p;
}

Preconditioner Preconditioner::nkp(KronApprox approx) {
    Preconditioner p;
    p.kind_ = PreconditionerKind::nkp;
    p.nkp_ = std::make_shared<NkpPreconditioner>(std::move(approx));
    return p;
}

Preconditioner Preconditioner::kinv(KronInverse inv) {
    Preconditioner p;
    p.kind_ = PreconditionerKind::kinv;
    p.kinv_ = std::move(inv);
    return p;
}

Preconditioner Preconditioner::standard_sylvester(DenseMatrix A,
                                                  DenseMatrix B) {
    Preconditioner p;
    p.kind_ = PreconditionerKind::custom;
    p.custom_A_ = std::move(A);
    p.custom_B_ = std::move(B);
    return p;
}

Preconditioner Preconditioner::custom(
    std::function<DenseMatrix(const DenseMatrix&)> apply) {
    Preconditioner p;
    p.kind_ = PreconditionerKind::custom;
    p.custom_apply_ = std::move(apply);
    return p;
}

void Preconditioner::prepare() const {
    switch (kind_) {
        case PreconditionerKind::nkp:
            nkp_->prepare();
            break;
        case PreconditionerKind::custom:
            if (!custom_apply_ && !custom_solver_) {
                custom_solver_ = std::make_shared<StandardSylvesterSolver>(
                    custom_A_, custom_B_);
                ++custom_factorizations_;
            }
            break;
        default:
            break;
    }
}

DenseMatrix Preconditioner::apply(const DenseMatrix& R) const {
    switch (kind_) {
        case PreconditionerKind::none:
            return R;
        case PreconditionerKind::nkp:
            return nkp_->apply(R);
        case PreconditionerKind::kinv:
            return apply_kinv(*kinv_, R);
        case PreconditionerKind::custom:
            if (custom_apply_) return custom_apply_(R);
            prepare();
            return custom_solver_->solve(R);
    }
    return R;
}

int Preconditioner::factorization_count() const {
    if (kind_ == PreconditionerKind::nkp) return nkp_->factorization_count();
    if (kind_ == PreconditionerKind::custom) return custom_factorizations_;
    return 0;
}

// ---- helpers ---------------------------------------------------------------

namespace {

Index iterate_band(const DenseMatrix& X) {
    return std::max<Index>(structural_band(X), 0);
}

}  // namespace

// ---- GMRES -----------------------------------------------------------------

SolveReport gmres(const KroneckerOperator& op, const Preconditioner& pre,
                  const DenseMatrix& E, const SolverOptions& opts) {
    if (E.rows() != op.m() || E.cols() != op.n())
        throw DimensionError("gmres: E must be m x n");
    if (opts.restart < 1) throw ArgumentError("gmres: restart must be >= 1");

    const Index m = op.m(), n = op.n(), N = m * n;
    Stopwatch sw;
    SolveReport rep;
    rep.X = DenseMatrix::Zero(m, n);
    ConvergenceHistory& h = rep.history;
    h.wall_times.push_back(0.0);

    const double normE = E.norm();
    if (normE == 0.0) {
        h.residuals.push_back(0.0);
        h.converged = true;
        if (opts.track_bandwidth) h.bandwidths.push_back(0);
        rep.solve_seconds = sw.seconds();
        return rep;
    }
    h.residuals.push_back(1.0);
    if (opts.track_bandwidth) h.bandwidths.push_back(0);

    const int restart = opts.restart;
    DenseMatrix V(N, restart + 1);
    DenseMatrix H = DenseMatrix::Zero(restart + 1, restart);
    Vector g = Vector::Zero(restart + 1);
    Vector cs = Vector::Zero(restart), sn = Vector::Zero(restart);

    int total = 0;
    bool converged = false;

    while (total < opts.max_iter && !converged) {
        DenseMatrix R = E - op.apply(rep.X);
        const double beta = R.norm();
        double rel = beta / normE;
        h.residuals.back() = rel;  // exact value at every restart
        if (rel <= opts.tol) {
            converged = true;
            break;
        }

        V.col(0) = vec_view(R) / beta;
        g.setZero();
        g(0) = beta;
        H.setZero();

        int j = 0;
        bool happy = false;
        for (; j < restart && total < opts.max_iter; ++j) {
            DenseMatrix Vj = unvec(V.col(j), m, n);
            DenseMatrix W = op.apply(pre.is_identity() ? Vj : pre.apply(Vj));
            Vector w = vec(W);
            const double w_norm0 = w.norm();
            for (int i = 0; i <= j; ++i) {
                const double hij = V.col(i).dot(w);
                H(i, j) = hij;
                w -= hij * V.col(i);
            }
            const double hj1 = w.norm();
            H(j + 1, j) = hj1;
            happy = hj1 <= 1e-13 * w_norm0;
            if (!happy) V.col(j + 1) = w / hj1;

            // Givens update of the Hessenberg column and residual estimate.
            for (int i = 0; i < j; ++i) {
                const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
                H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
                H(i, j) = t;
            }
            const double denom = std::hypot(H(j, j), H(j + 1, j));
            cs(j) = denom == 0.0 ? 1.0 : H(j, j) / denom;
            sn(j) = denom == 0.0 ? 0.0 : H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g(j + 1) = -sn(j) * g(j);
            g(j) = cs(j) * g(j);

            ++total;
            const double est = std::abs(g(j + 1)) / normE;
            h.residuals.push_back(est);
            h.wall_times.push_back(sw.seconds());
            if (opts.track_bandwidth) {
                Vector y = H.topLeftCorner(j + 1, j + 1)
                               .triangularView<Eigen::Upper>()
                               .solve(g.head(j + 1));
                DenseMatrix U = unvec(V.leftCols(j + 1) * y, m, n);
                DenseMatrix Xj =
                    rep.X + (pre.is_identity() ? U : pre.apply(U));
                h.bandwidths.push_back(iterate_band(Xj));
            }
            if (happy || est <= opts.tol) {
                ++j;
                break;
            }
        }

        // Degenerate columns (operator annihilated a basis matrix) leave a
        // zero pivot; truncate the least-squares problem there.
        for (int i = 0; i < j; ++i)
            if (H(i, i) == 0.0) {
                j = i;
                break;
            }
        if (j > 0) {
            Vector y = H.topLeftCorner(j, j)
                           .triangularView<Eigen::Upper>()
                           .solve(g.head(j));
            DenseMatrix U = unvec(V.leftCols(j) * y, m, n);
            rep.X += pre.is_identity() ? U : pre.apply(U);
        }
        rel = (E - op.apply(rep.X)).norm() / normE;
        h.residuals.back() = rel;  // replace the estimate with the true value
        if (rel <= opts.tol) converged = true;
    }

    h.converged = converged;
    h.iterations = total;
    rep.solve_seconds = sw.seconds();
    return rep;
}

// ---- Bi-CGSTAB -------------------------------------------------------------

SolveReport bicgstab(const KroneckerOperator& op, const Preconditioner& pre,
                     const DenseMatrix& E, const SolverOptions& opts) {
    if (E.rows() != op.m() || E.cols() != op.n())
        throw DimensionError("bicgstab: E must be m x n");

    const Index m = op.m(), n = op.n();
    Stopwatch sw;
    SolveReport rep;
    rep.X = DenseMatrix::Zero(m, n);
    ConvergenceHistory& h = rep.history;
    h.wall_times.push_back(0.0);

    const double normE = E.norm();
    if (normE == 0.0) {
        h.residuals.push_back(0.0);
        h.converged = true;
        if (opts.track_bandwidth) h.bandwidths.push_back(0);
        rep.solve_seconds = sw.seconds();
        return rep;
    }
    h.residuals.push_back(1.0);
    if (opts.track_bandwidth) h.bandwidths.push_back(0);

    const double breakdown_scale = normE * normE;
    DenseMatrix R = E;
    const DenseMatrix Rhat = E;
    DenseMatrix P, V;
    double rho_old = 1.0, alpha = 1.0, omega = 1.0;

    DenseMatrix X_best = rep.X;
    double res_best = 1.0;
    auto record = [&](double rel) {
        h.residuals.push_back(rel);
        h.wall_times.push_back(sw.seconds());
        if (opts.track_bandwidth) h.bandwidths.push_back(iterate_band(rep.X));
        if (rel < res_best) {
            res_best = rel;
            X_best = rep.X;
        }
    };

    int iter = 0;
    bool converged = false;
    while (iter < opts.max_iter) {
        const double rho = frobenius_inner(Rhat, R);
        if (std::abs(rho) < 1e-30 * breakdown_scale) {
            rep.breakdown = true;
            break;
        }
        if (iter == 0) {
            P = R;
        } else {
            const double beta = (rho / rho_old) * (alpha / omega);
            P = R + beta * (P - omega * V);
        }
        DenseMatrix Phat = pre.is_identity() ? P : pre.apply(P);
        V = op.apply(Phat);
        const double denom = frobenius_inner(Rhat, V);
        if (std::abs(denom) < 1e-30 * breakdown_scale) {
            rep.breakdown = true;
            break;
        }
        alpha = rho / denom;
        DenseMatrix S = R - alpha * V;
        const double half = S.norm() / normE;
        rep.half_residuals.push_back(half);

        if (half <= opts.tol) {
            // Tentative half-step exit; commit only if the true residual
            // confirms it, otherwise finish the full iteration.
            DenseMatrix X_half = rep.X + alpha * Phat;
            const double exact = (E - op.apply(X_half)).norm() / normE;
            if (exact <= opts.tol) {
                rep.X = std::move(X_half);
                ++iter;
                record(exact);
                converged = true;
                break;
            }
        }

        DenseMatrix Shat = pre.is_identity() ? S : pre.apply(S);
        DenseMatrix T = op.apply(Shat);
        const double tt = frobenius_inner(T, T);
        if (tt == 0.0) {
            rep.breakdown = true;
            break;
        }
        omega = frobenius_inner(T, S) / tt;
        rep.X += alpha * Phat + omega * Shat;
        R = S - omega * T;
        ++iter;
        record(R.norm() / normE);

        if (h.residuals.back() <= opts.tol) {
            const double exact = (E - op.apply(rep.X)).norm() / normE;
            h.residuals.back() = exact;
            if (exact <= opts.tol) {
                converged = true;
                break;
            }
        }
        if (std::abs(omega) < 1e-30) {
            rep.breakdown = true;
            break;
        }
        rho_old = rho;
    }

    if (rep.breakdown && res_best < h.residuals.back()) {
        rep.X = X_best;  // return the best iterate seen
    }
    if (!converged) {
        const double exact = (E - op.apply(rep.X)).norm() / normE;
        h.residuals.back() = exact;
        converged = exact <= opts.tol;
    }

    h.converged = converged;
    h.iterations = iter;
    rep.solve_seconds = sw.seconds();
    return rep;
}

// ---- bandwidth audit ---------------------------------------------------------

BandwidthAudit bandwidth_audit(const ConvergenceHistory& history,
                               const KroneckerOperator& op,
                               const KronInverse& precond,
                               const DenseMatrix& E) {
    if (history.bandwidths.empty())
        throw AuditInapplicableError(
            "bandwidth_audit: bandwidth instrumentation was not enabled");
    for (const auto& f : op.right_factors())
        if (!f.is_sparse())
            throw AuditInapplicableError(
                "bandwidth_audit: dense operator factors");
    for (const auto& f : op.left_factors())
        if (!f.is_sparse())
            throw AuditInapplicableError(
                "bandwidth_audit: dense operator factors");
    for (const auto& f : precond.Cs)
        if (!f.is_sparse())
            throw AuditInapplicableError(
                "bandwidth_audit: dense preconditioner factors");
    for (const auto& f : precond.Ds)
        if (!f.is_sparse())
            throw AuditInapplicableError(
                "bandwidth_audit: dense preconditioner factors");

    BandwidthAudit audit;
    for (int k = 0; k < op.r(); ++k)
        audit.beta_M = std::max(audit.beta_M,
                                op.A(k).bandwidth() + op.B(k).bandwidth());
    for (int s = 0; s < precond.q; ++s)
        audit.beta_P =
            std::max(audit.beta_P,
                     precond.Cs[s].bandwidth() + precond.Ds[s].bandwidth());
    audit.beta_E = std::max<Index>(structural_band(E), 0);

    for (size_t j = 1; j < history.bandwidths.size(); ++j) {
        const Index bound = (2 * static_cast<Index>(j) - 1) *
                                (audit.beta_M + audit.beta_P) +
                            audit.beta_P + audit.beta_E;
        const Index observed = history.bandwidths[j];
        audit.bounds.push_back(bound);
        audit.observed.push_back(observed);
        audit.tightness.push_back(bound - observed);
        if (observed > bound) audit.all_within_bound = false;
    }
    return audit;
}

void write_history_csv(const std::string& path,
                       const ConvergenceHistory& history) {
    std::ofstream out(path);
    if (!out) throw IoError("write_history_csv: cannot write '" + path + "'");
    const bool with_band = !history.bandwidths.empty();
    out << "iter,residual_rel,time_s" << (with_band ? ",bandwidth" : "")
        << "\n";
    char buf[64];
    for (size_t i = 0; i < history.residuals.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.12e", history.residuals[i]);
        out << i << "," << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.6f",
                      i < history.wall_times.size() ? history.wall_times[i]
                                                    : 0.0);
        out << buf;
        if (with_band) out << "," << history.bandwidths[i];
        out << "\n";
    }
}

}  // namespace kronsolve
