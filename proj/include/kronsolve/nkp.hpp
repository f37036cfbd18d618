#pragma once

#include <vector>

#include "kronsolve/operator.hpp"

namespace kronsolve {

/// Kronecker rank-q approximation sum_s Y_s (x) Z_s of the operator.
struct KronApprox {
    std::vector<DenseMatrix> Ys;  // n x n
    std::vector<DenseMatrix> Zs;  // m x m
    int q = 0;
    /// Singular values of the rearranged operator, descending. Filled by the
    /// SVD route only (all r of them, not just the q retained).
    Vector sigma;
    /// ALS diagnostics.
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> half_step_residuals;
};

/// Best Kronecker rank-q approximation via thin QR + small SVD.
/// Rank-deficient stacks are truncated and q capped accordingly.
KronApprox nkp_svd(const KroneckerOperator& op, int q);

struct NkpAlsOptions {
    /// Absolute tolerance on the Frobenius residual; < 0 selects the default
    /// 1e-8 * ||M||_F.
    double tol = -1.0;
    int max_iter = 25;
    /// Initial Z_s; linearly independent, length q. Empty selects the default
    /// identity-plus-perturbation family.
    std::vector<DenseMatrix> init_Zs;
};

/// Alternating least squares for the same approximation problem.
KronApprox nkp_als(const KroneckerOperator& op, int q,
                   const NkpAlsOptions& opts = {});

/// ||sum_k A_k (x) B_k - sum_s Y_s (x) Z_s||_F through the Gram identity;
/// nothing is materialized. Accepts q = 0 (returns ||M||_F).
double nkp_error(const KroneckerOperator& op, const KronApprox& approx);

/// Preconditioning-quality diagnostics from the generalized eigenvalues of
/// the pair (approx, op), both materialized under the size cap.
struct SpectralDiagnostics {
    Vector lambdas;      // eigenvalues of approx x = lambda op x, ascending
    double kappa;        // spectral condition number of the operator
    double middle;       // sqrt(1/N sum (1 - 1/lambda_i)^2)
    double lower;        // (1/kappa) ||M - M~||_F / ||M||_F
    double upper;        // kappa ||M - M~||_F / ||M||_F
    bool sandwich_holds; // lower <= middle <= upper
};

SpectralDiagnostics spectral_diagnostics(const KroneckerOperator& op,
                                         const KronApprox& approx,
                                         Index cap = 4096);

}  // namespace kronsolve
