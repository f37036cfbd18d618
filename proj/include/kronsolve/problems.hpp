#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "kronsolve/krylov.hpp"
#include "kronsolve/operator.hpp"

#include "json.hpp"

namespace kronsolve {

/// A benchmark equation: operator, right-hand side and (when the application
/// provides one) a tailored baseline preconditioner.
struct ProblemInstance {
    KroneckerOperator op;
    DenseMatrix rhs;
    std::optional<Preconditioner> baseline;
    std::string name;
    nlohmann::json metadata;
};

/// Blocks of the RC-ladder Carleman bilinearization benchmark.
struct CircuitData {
    Index n0 = 0;
    SparseMatrix A;  // n x n, n = n0^2 + n0
    SparseMatrix N;
    Vector b;        // length n0
    DenseMatrix E;   // -[b;0][b^T 0]
};

CircuitData circuit_data(Index n0);

/// Externally supplied blocks (A1 n0 x n0, A2 n0 x n0^2, b length n0).
CircuitData circuit_data_from_blocks(const SparseMatrix& A1,
                                     const SparseMatrix& A2, const Vector& b);

/// A X + X A^T + N X N^T = E with the Lyapunov-part baseline.
ProblemInstance circuit(Index n0);
ProblemInstance circuit_from_blocks(const SparseMatrix& A1,
                                    const SparseMatrix& A2, const Vector& b);

/// Finite difference data for the convection-diffusion benchmark.
struct ConvDiffData {
    double epsilon = 0.0;
    Index n = 0;           // interior points per direction, h = 1/(n+1)
    SparseMatrix T;        // second difference with diffusion coefficient
    SparseMatrix B;        // centered first difference
    SparseMatrix Phi1, Phi2, Psi1, Psi2;  // diagonal samplings
    DenseMatrix F;         // boundary data eliminated into the right-hand side
    double psibar1 = 0.0;  // mean of psi_1 samples
    double phibar2 = 0.0;  // mean of phi_2 samples
};

/// Dirichlet profile on the y = 0 edge; the remaining edges are homogeneous.
using BottomBoundary = std::function<double(double)>;

ConvDiffData convection_diffusion_data(Index n, double epsilon);
ConvDiffData convection_diffusion_data(Index n, double epsilon,
                                       const BottomBoundary& bottom);

/// T X + X T^T + (Phi1 B) X Psi1 + Phi2 X (B^T Psi2) = F with the mean-based
/// baseline preconditioner.
ProblemInstance convection_diffusion(Index n, double epsilon);
ProblemInstance convection_diffusion(Index n, double epsilon,
                                     const BottomBoundary& bottom);

/// Reproducible banded multiterm generator. The right-hand side is banded
/// with the same bandwidth as the factors.
ProblemInstance synthetic_banded(Index n, Index m, int r, Index band,
                                 std::uint64_t seed, bool spd);

}  // namespace kronsolve
