#include "kronsolve/problems.hpp"

#include <cmath>
#include <vector>

#include "kronsolve/util.hpp"

namespace kronsolve {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(Index rows, Index cols,
                           std::vector<Triplet>& trips) {
    SparseMatrix S(rows, cols);
    S.setFromTriplets(trips.begin(), trips.end());
    S.makeCompressed();
    return S;
}

SparseMatrix sparse_identity(Index dim) {
    SparseMatrix I(dim, dim);
    I.setIdentity();
    return I;
}

// A (x) I + I (x) A for a small sparse A.
SparseMatrix kron_sum_with_identity(const SparseMatrix& A) {
    const Index p = A.rows();
    std::vector<Triplet> trips;
    trips.reserve(2 * A.nonZeros() * p);
    for (Index j = 0; j < A.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(A, j); it; ++it)
            for (Index k = 0; k < p; ++k) {
                trips.emplace_back(it.row() * p + k, j * p + k, it.value());
                trips.emplace_back(k * p + it.row(), k * p + j, it.value());
            }
    return from_triplets(p * p, p * p, trips);
}

SparseMatrix diag_sparse(const Vector& d) {
    std::vector<Triplet> trips;
    trips.reserve(d.size());
    for (Index i = 0; i < d.size(); ++i) trips.emplace_back(i, i, d(i));
    return from_triplets(d.size(), d.size(), trips);
}

}  // namespace

// ---- RC circuit -------------------------------------------------------------

CircuitData circuit_data_from_blocks(const SparseMatrix& A1,
                                     const SparseMatrix& A2, const Vector& b) {
    const Index n0 = A1.rows();
    if (A1.cols() != n0 || A2.rows() != n0 || A2.cols() != n0 * n0 ||
        b.size() != n0)
        throw DimensionError(
            "circuit: blocks must be A1 (n0 x n0), A2 (n0 x n0^2), b (n0)");

    const Index n = n0 * n0 + n0;
    CircuitData data;
    data.n0 = n0;
    data.b = b;

    std::vector<Triplet> atrips;
    for (Index j = 0; j < A1.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(A1, j); it; ++it)
            atrips.emplace_back(it.row(), j, it.value());
    for (Index j = 0; j < A2.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(A2, j); it; ++it)
            atrips.emplace_back(it.row(), n0 + j, it.value());
    SparseMatrix lower = kron_sum_with_identity(A1);
    for (Index j = 0; j < lower.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(lower, j); it; ++it)
            atrips.emplace_back(n0 + it.row(), n0 + j, it.value());
    data.A = from_triplets(n, n, atrips);

    // N has the single lower-left block b (x) I + I (x) b.
    std::vector<Triplet> ntrips;
    for (Index i = 0; i < n0; ++i) {
        if (b(i) == 0.0) continue;
        for (Index k = 0; k < n0; ++k) {
            ntrips.emplace_back(n0 + i * n0 + k, k, b(i));  // b (x) I
            ntrips.emplace_back(n0 + k * n0 + i, k, b(i));  // I (x) b
        }
    }
    data.N = from_triplets(n, n, ntrips);

    data.E = DenseMatrix::Zero(n, n);
    for (Index i = 0; i < n0; ++i)
        for (Index j = 0; j < n0; ++j) data.E(i, j) = -b(i) * b(j);
    return data;
}

CircuitData circuit_data(Index n0) {
    if (n0 < 2) throw ArgumentError("circuit: n0 must be >= 2");
    // RC ladder with unit components and the diode law g(v) = e^{40v} + v - 1
    // at every resistor: g'(0) = 41, g''(0) = 1600. A1 is the Jacobian and
    // A2 the halved Hessian of the node equations at the origin.
    const double gp = 41.0;
    const double hh = 800.0;  // g''(0) / 2

    std::vector<Triplet> a1;
    for (Index i = 0; i < n0; ++i) {
        double diag = (i == n0 - 1) ? -gp : -2.0 * gp;
        a1.emplace_back(i, i, diag);
        if (i + 1 < n0) {
            a1.emplace_back(i, i + 1, gp);
            a1.emplace_back(i + 1, i, gp);
        }
    }
    SparseMatrix A1 = from_triplets(n0, n0, a1);

    auto col = [n0](Index i, Index j) { return i * n0 + j; };
    std::vector<Triplet> a2;
    // node 1: -g(v1) - g(v1 - v2)
    a2.emplace_back(0, col(0, 0), -2.0 * hh);
    a2.emplace_back(0, col(0, 1), hh);
    a2.emplace_back(0, col(1, 0), hh);
    a2.emplace_back(0, col(1, 1), -hh);
    // interior nodes: g(v_{i-1} - v_i) - g(v_i - v_{i+1})
    for (Index i = 1; i + 1 < n0; ++i) {
        a2.emplace_back(i, col(i - 1, i - 1), hh);
        a2.emplace_back(i, col(i - 1, i), -hh);
        a2.emplace_back(i, col(i, i - 1), -hh);
        a2.emplace_back(i, col(i, i + 1), hh);
        a2.emplace_back(i, col(i + 1, i), hh);
        a2.emplace_back(i, col(i + 1, i + 1), -hh);
    }
    // last node: g(v_{n0-1} - v_{n0})
    a2.emplace_back(n0 - 1, col(n0 - 2, n0 - 2), hh);
    a2.emplace_back(n0 - 1, col(n0 - 2, n0 - 1), -hh);
    a2.emplace_back(n0 - 1, col(n0 - 1, n0 - 2), -hh);
    a2.emplace_back(n0 - 1, col(n0 - 1, n0 - 1), hh);
    SparseMatrix A2 = from_triplets(n0, n0 * n0, a2);

    Vector b = Vector::Zero(n0);
    b(0) = 1.0;  // current source at the first node
    return circuit_data_from_blocks(A1, A2, b);
}

namespace {

ProblemInstance circuit_instance(CircuitData data) {
    const Index n = data.A.rows();
    std::vector<Factor> right{Factor(sparse_identity(n)), Factor(data.A),
                              Factor(data.N)};
    std::vector<Factor> left{Factor(data.A), Factor(sparse_identity(n)),
                             Factor(data.N)};

    ProblemInstance inst{KroneckerOperator(std::move(right), std::move(left)),
                         data.E,
                         Preconditioner::standard_sylvester(
                             DenseMatrix(data.A),
                             DenseMatrix(data.A.transpose())),
                         "circuit",
                         {}};
    inst.metadata = {{"n0", data.n0}, {"n", n}, {"r", 3}};
    return inst;
}

}  // namespace

ProblemInstance circuit(Index n0) { return circuit_instance(circuit_data(n0)); }

ProblemInstance circuit_from_blocks(const SparseMatrix& A1,
                                    const SparseMatrix& A2, const Vector& b) {
    return circuit_instance(circuit_data_from_blocks(A1, A2, b));
}

// ---- convection-diffusion ----------------------------------------------------

ConvDiffData convection_diffusion_data(Index n, double epsilon,
                                       const BottomBoundary& bottom) {
    if (n < 3) throw ArgumentError("convection_diffusion: n must be >= 3");
    if (!(epsilon > 0.0))
        throw ArgumentError("convection_diffusion: epsilon must be positive");

    ConvDiffData d;
    d.epsilon = epsilon;
    d.n = n;
    const double h = 1.0 / static_cast<double>(n + 1);

    std::vector<Triplet> t_trips, b_trips;
    const double c2 = epsilon / (h * h);
    const double c1 = 1.0 / (2.0 * h);
    for (Index i = 0; i < n; ++i) {
        t_trips.emplace_back(i, i, 2.0 * c2);
        if (i + 1 < n) {
            t_trips.emplace_back(i, i + 1, -c2);
            t_trips.emplace_back(i + 1, i, -c2);
            b_trips.emplace_back(i, i + 1, c1);
            b_trips.emplace_back(i + 1, i, -c1);
        }
    }
    d.T = from_triplets(n, n, t_trips);
    d.B = from_triplets(n, n, b_trips);

    auto phi1 = [](double x) { return 1.0 - (2.0 * x + 1.0) * (2.0 * x + 1.0); };
    auto psi1 = [](double y) { return y; };
    auto phi2 = [](double x) { return -2.0 * (2.0 * x + 1.0); };
    auto psi2 = [](double y) { return 1.0 - y * y; };

    Vector xphi1(n), xphi2(n), ypsi1(n), ypsi2(n);
    for (Index i = 0; i < n; ++i) {
        const double x = (i + 1) * h;
        xphi1(i) = phi1(x);
        xphi2(i) = phi2(x);
        ypsi1(i) = psi1(x);
        ypsi2(i) = psi2(x);
    }
    d.Phi1 = diag_sparse(xphi1);
    d.Phi2 = diag_sparse(xphi2);
    d.Psi1 = diag_sparse(ypsi1);
    d.Psi2 = diag_sparse(ypsi2);
    d.psibar1 = ypsi1.mean();
    d.phibar2 = xphi2.mean();

    // f = 0; only the y = 0 edge carries data, eliminated into column 0.
    d.F = DenseMatrix::Zero(n, n);
    const double psi2_y1 = psi2(h);
    for (Index i = 0; i < n; ++i) {
        const double g = bottom((i + 1) * h);
        if (g == 0.0) continue;
        d.F(i, 0) += c2 * g;                       // second difference in y
        d.F(i, 0) += xphi2(i) * psi2_y1 * g * c1;  // centered first difference
    }
    return d;
}

ConvDiffData convection_diffusion_data(Index n, double epsilon) {
    BottomBoundary tanh_profile = [](double x) {
        return x <= 0.5 ? 1.0 + std::tanh(10.0 + 20.0 * (2.0 * x - 1.0)) : 2.0;
    };
    return convection_diffusion_data(n, epsilon, tanh_profile);
}

namespace {

ProblemInstance convdiff_instance(ConvDiffData d) {
    const Index n = d.n;
    SparseMatrix Phi1B = (d.Phi1 * d.B).pruned();
    Phi1B.makeCompressed();
    SparseMatrix Psi2B = (d.Psi2 * d.B).pruned();
    Psi2B.makeCompressed();

    std::vector<Factor> right{Factor(sparse_identity(n)), Factor(d.T),
                              Factor(d.Psi1), Factor(Psi2B)};
    std::vector<Factor> left{Factor(d.T), Factor(sparse_identity(n)),
                             Factor(Phi1B), Factor(d.Phi2)};

    DenseMatrix P_left = DenseMatrix(d.T) + d.psibar1 * DenseMatrix(Phi1B);
    DenseMatrix P_right =
        (DenseMatrix(d.T) + d.phibar2 * DenseMatrix(Psi2B)).transpose();

    ProblemInstance inst{KroneckerOperator(std::move(right), std::move(left)),
                         d.F,
                         Preconditioner::standard_sylvester(std::move(P_left),
                                                            std::move(P_right)),
                         "convdiff",
                         {}};
    inst.metadata = {{"n", n},
                     {"epsilon", d.epsilon},
                     {"r", 4},
                     {"psibar1", d.psibar1},
                     {"phibar2", d.phibar2}};
    return inst;
}

}  // namespace

ProblemInstance convection_diffusion(Index n, double epsilon) {
    return convdiff_instance(convection_diffusion_data(n, epsilon));
}

ProblemInstance convection_diffusion(Index n, double epsilon,
                                     const BottomBoundary& bottom) {
    return convdiff_instance(convection_diffusion_data(n, epsilon, bottom));
}

// ---- synthetic banded ---------------------------------------------------------

namespace {

SparseMatrix banded_random(Index dim, Index band, bool spd, Rng& rng) {
    std::vector<Triplet> trips;
    for (Index j = 0; j < dim; ++j) {
        const Index lo = std::max<Index>(0, j - band);
        const Index hi = std::min<Index>(dim - 1, j + band);
        for (Index i = lo; i <= hi; ++i)
            trips.emplace_back(i, j, rng.uniform(-1.0, 1.0));
    }
    SparseMatrix S = from_triplets(dim, dim, trips);
    if (!spd) return S;

    SparseMatrix sym = 0.5 * (SparseMatrix(S.transpose()) + S);
    sym.makeCompressed();
    // Diagonal dominance makes every factor SPD, hence the operator too.
    Vector offsum = Vector::Zero(dim);
    for (Index j = 0; j < sym.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(sym, j); it; ++it)
            if (it.row() != j) offsum(j) += std::abs(it.value());
    for (Index j = 0; j < dim; ++j) sym.coeffRef(j, j) = offsum(j) + 1.0;
    sym.makeCompressed();
    return sym;
}

}  // namespace

ProblemInstance synthetic_banded(Index n, Index m, int r, Index band,
                                 std::uint64_t seed, bool spd) {
    if (r < 1) throw ArgumentError("synthetic_banded: r must be >= 1");
    if (band < 0) throw ArgumentError("synthetic_banded: band must be >= 0");

    Rng rng(seed);
    std::vector<Factor> right, left;
    right.reserve(r);
    left.reserve(r);
    for (int k = 0; k < r; ++k) right.emplace_back(banded_random(n, band, spd, rng));
    for (int k = 0; k < r; ++k) left.emplace_back(banded_random(m, band, spd, rng));

    DenseMatrix E = DenseMatrix::Zero(m, n);
    for (Index j = 0; j < n; ++j) {
        const Index lo = std::max<Index>(0, j - band);
        const Index hi = std::min<Index>(m - 1, j + band);
        for (Index i = lo; i <= hi; ++i) E(i, j) = rng.uniform(-1.0, 1.0);
    }

    ProblemInstance inst{KroneckerOperator(std::move(right), std::move(left)),
                         std::move(E),
                         std::nullopt,
                         "synthetic",
                         {}};
    inst.metadata = {{"n", n},     {"m", m},       {"r", r},
                     {"band", band}, {"seed", seed}, {"spd", spd}};
    return inst;
}

}  // namespace kronsolve
