#include "kronsolve/nkp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "kronsolve/kernels.hpp"

namespace kronsolve {

namespace {

// Pairwise Frobenius grams <F_k, F_l> of a factor list.
DenseMatrix pairwise_gram(const std::vector<Factor>& F) {
    const int r = static_cast<int>(F.size());
    DenseMatrix G(r, r);
    for (int k = 0; k < r; ++k)
        for (int l = k; l < r; ++l)
            G(k, l) = G(l, k) = frobenius_inner(F[k], F[l]);
    return G;
}

DenseMatrix pairwise_gram(const std::vector<DenseMatrix>& F) {
    const int r = static_cast<int>(F.size());
    DenseMatrix G(r, r);
    for (int k = 0; k < r; ++k)
        for (int l = k; l < r; ++l)
            G(k, l) = G(l, k) = frobenius_inner(F[k], F[l]);
    return G;
}

// <F_k, G_s> for factor list x matrix list.
DenseMatrix cross_gram(const std::vector<Factor>& F,
                       const std::vector<DenseMatrix>& G) {
    DenseMatrix C(F.size(), G.size());
    for (size_t k = 0; k < F.size(); ++k)
        for (size_t s = 0; s < G.size(); ++s)
            C(k, s) = F[k].is_sparse()
                          ? frobenius_inner(F[k].sparse(), G[s])
                          : frobenius_inner(F[k].dense(), G[s]);
    return C;
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

// Replaces the family by an orthonormal mixing of itself (same span, same
// Kronecker-product sum after the following half-step). ALS is equivariant
// under invertible recombination of the fixed side, and an orthonormal
// input keeps the Gram-based residual formula free of cancellation.
void orthonormalize_family(std::vector<DenseMatrix>& F, const char* side) {
    const int q = static_cast<int>(F.size());
    DenseMatrix G = pairwise_gram(F);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(G);
    const Vector& lambda = es.eigenvalues();
    const double lmax = lambda.maxCoeff();
    if (!(lmax > 0.0) || lambda.minCoeff() <= 1e-26 * lmax)
        throw DependentFactorsError(
            std::string("nkp_als: the ") + side +
            " factor matrices are linearly dependent");
    DenseMatrix W = es.eigenvectors() *
                    lambda.cwiseSqrt().cwiseInverse().asDiagonal();
    std::vector<DenseMatrix> mixed(q);
    for (int s = 0; s < q; ++s) {
        mixed[s] = DenseMatrix::Zero(F[0].rows(), F[0].cols());
        for (int u = 0; u < q; ++u) mixed[s] += W(u, s) * F[u];
    }
    F = std::move(mixed);
}

// Solves G X = RHS for symmetric positive definite G built from factor
// grams; a singular G means the factor family on `side` is dependent.
DenseMatrix solve_gram(const DenseMatrix& G, const DenseMatrix& RHS,
                       const char* side) {
    Eigen::LDLT<DenseMatrix> ldlt(G);
    Vector d = ldlt.vectorD();
    double dmax = d.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || dmax <= 0.0 ||
        d.cwiseAbs().minCoeff() <= 1e-13 * dmax) {
        throw DependentFactorsError(std::string("nkp_als: the ") + side +
                                    " factor matrices are linearly dependent");
    }
    return ldlt.solve(RHS);
}

double clamp_residual_sq(double r2, double scale) {
    if (r2 >= 0.0) return r2;
    // The three-term formula is subtraction-prone; tiny negatives are noise.
    (void)scale;
    return 0.0;
}

// Rows of the stacked vec-matrix that are structurally zero for every
// factor. Linear combinations vanish there exactly; masking removes the
// O(eps) dirt left by the orthogonal factors of the QR.
std::vector<bool> union_support(const std::vector<Factor>& F) {
    Index dim = F.front().rows() * F.front().cols();
    std::vector<bool> support(dim, false);
    Index rows = F.front().rows();
    for (const auto& f : F) {
        if (f.is_sparse()) {
            const SparseMatrix& S = f.sparse();
            for (Index j = 0; j < S.outerSize(); ++j)
                for (SparseMatrix::InnerIterator it(S, j); it; ++it)
                    support[j * rows + it.row()] = true;
        } else {
            const DenseMatrix& D = f.dense();
            for (Index j = 0; j < D.cols(); ++j)
                for (Index i = 0; i < D.rows(); ++i)
                    if (D(i, j) != 0.0) support[j * rows + i] = true;
        }
    }
    return support;
}

void mask_outside_support(DenseMatrix& V, const std::vector<bool>& support) {
    for (Index i = 0; i < V.rows(); ++i)
        if (!support[i]) V.row(i).setZero();
}

}  // namespace

KronApprox nkp_svd(const KroneckerOperator& op, int q) {
    const int r = op.r();
    if (q < 1 || q > r)
        throw ArgumentError("nkp_svd: rank q must satisfy 1 <= q <= r");

    FactorStack stack = op.factor_stacks();

    Eigen::ColPivHouseholderQR<DenseMatrix> qrA(stack.V_A);
    Eigen::ColPivHouseholderQR<DenseMatrix> qrB(stack.V_B);
    const Index kA = std::min<Index>(stack.V_A.rows(), r);
    const Index kB = std::min<Index>(stack.V_B.rows(), r);
    // V_A P = Q R  =>  V_A = Q (R P^T)
    DenseMatrix RA = qrA.matrixR().topRows(kA).triangularView<Eigen::Upper>();
    RA = RA * qrA.colsPermutation().transpose();
    DenseMatrix RB = qrB.matrixR().topRows(kB).triangularView<Eigen::Upper>();
    RB = RB * qrB.colsPermutation().transpose();

    Eigen::JacobiSVD<DenseMatrix> svd(RA * RB.transpose(),
                                      Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector sigma = svd.singularValues();

    // Directions whose singular value vanishes relative to sigma_1 carry no
    // information; silently cap the rank there.
    int q_eff = 0;
    double cutoff = sigma.size() > 0 ? 1e-14 * sigma(0) : 0.0;
    for (int k = 0; k < std::min<int>(q, static_cast<int>(sigma.size())); ++k)
        if (sigma(k) > cutoff) ++q_eff;

    DenseMatrix QA =
        qrA.householderQ() * DenseMatrix::Identity(stack.V_A.rows(), kA);
    DenseMatrix QB =
        qrB.householderQ() * DenseMatrix::Identity(stack.V_B.rows(), kB);

    DenseMatrix VY = QA * svd.matrixU().leftCols(q_eff);
    DenseMatrix VZ = QB * svd.matrixV().leftCols(q_eff);
    for (int s = 0; s < q_eff; ++s) {
        double scale = std::sqrt(sigma(s));
        VY.col(s) *= scale;
        VZ.col(s) *= scale;
    }
    mask_outside_support(VY, union_support(op.right_factors()));
    mask_outside_support(VZ, union_support(op.left_factors()));

    KronApprox out;
    out.q = q_eff;
    out.sigma = sigma;
    for (int s = 0; s < q_eff; ++s) {
        out.Ys.push_back(unvec(VY.col(s), op.n(), op.n()));
        out.Zs.push_back(unvec(VZ.col(s), op.m(), op.m()));
    }
    double tail = 0.0;
    for (int k = q_eff; k < sigma.size(); ++k) tail += sigma(k) * sigma(k);
    out.residual = std::sqrt(tail);
    return out;
}

KronApprox nkp_als(const KroneckerOperator& op, int q,
                   const NkpAlsOptions& opts) {
    const int r = op.r();
    const Index n = op.n(), m = op.m();
    if (q < 1 || q > r)
        throw ArgumentError("nkp_als: rank q must satisfy 1 <= q <= r");

    std::vector<DenseMatrix> Zs = opts.init_Zs;
    if (Zs.empty()) {
        for (int s = 0; s < q; ++s) {
            DenseMatrix Z = DenseMatrix::Identity(m, m);
            if (s > 0) Z(s % m, (s / m) % m) += 1e-3;
            Zs.push_back(std::move(Z));
        }
    }
    if (static_cast<int>(Zs.size()) != q)
        throw ArgumentError("nkp_als: init_Zs must contain q matrices");
    for (const auto& Z : Zs)
        if (Z.rows() != m || Z.cols() != m)
            throw DimensionError("nkp_als: init_Zs must be m x m");

    DenseMatrix GA = pairwise_gram(op.right_factors());
    DenseMatrix GB = pairwise_gram(op.left_factors());
    const double norm2_M = std::max(GA.cwiseProduct(GB).sum(), 0.0);
    const double tol =
        opts.tol >= 0.0 ? opts.tol : 1e-8 * std::sqrt(norm2_M);

    std::vector<DenseMatrix> Ys(q, DenseMatrix::Zero(n, n));
    KronApprox out;
    out.q = q;

    auto residual_sq = [&](const std::vector<DenseMatrix>& Y,
                           const std::vector<DenseMatrix>& Z) {
        DenseMatrix CA = cross_gram(op.right_factors(), Y);  // V_A^T V_Y
        DenseMatrix CB = cross_gram(op.left_factors(), Z);   // V_B^T V_Z
        double cross = CA.cwiseProduct(CB).sum();
        double tailYZ = pairwise_gram(Y).cwiseProduct(pairwise_gram(Z)).sum();
        return clamp_residual_sq(norm2_M - 2.0 * cross + tailYZ, norm2_M);
    };

    double res = std::sqrt(norm2_M);  // Y_s = 0 before the first half-step
    int iter = 0;
    while (iter < opts.max_iter) {
        // Y-step: V_Y = V_A V_B^T V_Z (V_Z^T V_Z)^{-1}
        orthonormalize_family(Zs, "Z");
        DenseMatrix CBZ = cross_gram(op.left_factors(), Zs);  // r x q
        DenseMatrix GZ = pairwise_gram(Zs);                   // q x q
        DenseMatrix WY = solve_gram(GZ, CBZ.transpose(), "Z").transpose();
        for (int s = 0; s < q; ++s) {
            Ys[s].setZero();
            for (int k = 0; k < r; ++k)
                add_scaled(Ys[s], WY(k, s), op.right_factors()[k]);
        }
        out.half_step_residuals.push_back(std::sqrt(residual_sq(Ys, Zs)));

        // Z-step: V_Z = V_B V_A^T V_Y (V_Y^T V_Y)^{-1}
        orthonormalize_family(Ys, "Y");
        DenseMatrix CAY = cross_gram(op.right_factors(), Ys);  // r x q
        DenseMatrix GY = pairwise_gram(Ys);
        DenseMatrix WZ = solve_gram(GY, CAY.transpose(), "Y").transpose();
        for (int s = 0; s < q; ++s) {
            Zs[s].setZero();
            for (int k = 0; k < r; ++k)
                add_scaled(Zs[s], WZ(k, s), op.left_factors()[k]);
        }

        double r2 = residual_sq(Ys, Zs);
        res = std::sqrt(r2);
        out.half_step_residuals.push_back(res);
        ++iter;
        if (res <= tol) break;
    }

    out.Ys = std::move(Ys);
    out.Zs = std::move(Zs);
    out.iterations = iter;
    out.residual = res;
    return out;
}

double nkp_error(const KroneckerOperator& op, const KronApprox& approx) {
    DenseMatrix GA = pairwise_gram(op.right_factors());
    DenseMatrix GB = pairwise_gram(op.left_factors());
    double norm2_M = GA.cwiseProduct(GB).sum();
    if (approx.q == 0) return std::sqrt(std::max(norm2_M, 0.0));

    DenseMatrix CA = cross_gram(op.right_factors(), approx.Ys);
    DenseMatrix CB = cross_gram(op.left_factors(), approx.Zs);
    double cross = CA.cwiseProduct(CB).sum();
    double tail = pairwise_gram(approx.Ys)
                      .cwiseProduct(pairwise_gram(approx.Zs))
                      .sum();
    return std::sqrt(clamp_residual_sq(norm2_M - 2.0 * cross + tail, norm2_M));
}

SpectralDiagnostics spectral_diagnostics(const KroneckerOperator& op,
                                         const KronApprox& approx, Index cap) {
    DenseMatrix M = op.materialize(cap);
    DenseMatrix Mt = materialize_kron_sum(approx.Ys, approx.Zs, cap);
    const Index N = M.rows();

    auto require_spd = [](const DenseMatrix& S, const char* name) {
        double scale = S.cwiseAbs().maxCoeff();
        if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw DiagnosticInapplicableError(
                std::string("spectral_diagnostics: ") + name +
                " is not symmetric");
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(S,
                                                      Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() <= 0.0)
            throw DiagnosticInapplicableError(
                std::string("spectral_diagnostics: ") + name +
                " is not positive definite");
        return es.eigenvalues();
    };

    Vector eig_M = require_spd(M, "the operator");
    require_spd(Mt, "the approximation");

    SpectralDiagnostics d;
    d.kappa = eig_M.maxCoeff() / eig_M.minCoeff();

    Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> ges(Mt, M);
    d.lambdas = ges.eigenvalues();

    double sum = 0.0;
    for (Index i = 0; i < N; ++i) {
        double t = 1.0 - 1.0 / d.lambdas(i);
        sum += t * t;
    }
    d.middle = std::sqrt(sum / static_cast<double>(N));

    double rel = (M - Mt).norm() / M.norm();
    d.lower = rel / d.kappa;
    d.upper = rel * d.kappa;
    // Allowance for eigensolver roundoff; matters only in the degenerate
    // approx == operator case where all three terms are near zero.
    const double fuzz = 1e-12 * d.kappa;
    d.sandwich_holds =
        d.lower <= d.middle + fuzz && d.middle <= d.upper + fuzz;
    return d;
}

}  // namespace kronsolve
