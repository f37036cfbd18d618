#include <Eigen/QR>
#include <Eigen/SVD>

#include "doctest.h"
#include "kronsolve/kernels.hpp"
#include "kronsolve/nkp.hpp"
#include "support/oracles.hpp"

using namespace kronsolve;

namespace {

KroneckerOperator random_op(Index n, Index m, int r, Rng& rng) {
    std::vector<Factor> A, B;
    for (int k = 0; k < r; ++k) A.emplace_back(oracles::random_dense(n, n, rng));
    for (int k = 0; k < r; ++k) B.emplace_back(oracles::random_dense(m, m, rng));
    return KroneckerOperator(std::move(A), std::move(B));
}

std::vector<DenseMatrix> dense_list(const std::vector<Factor>& F) {
    std::vector<DenseMatrix> out;
    for (const auto& f : F) out.push_back(f.to_dense());
    return out;
}

double oracle_tail(const KroneckerOperator& op, int q) {
    DenseMatrix M = oracles::kron_sum(dense_list(op.right_factors()),
                                      dense_list(op.left_factors()));
    DenseMatrix R = oracles::rearrange(M, op.n(), op.m());
    Eigen::JacobiSVD<DenseMatrix> svd(R);
    const Vector& sv = svd.singularValues();
    double tail = 0.0;
    for (Index k = q; k < sv.size(); ++k) tail += sv(k) * sv(k);
    return std::sqrt(tail);
}

double oracle_error(const KroneckerOperator& op, const KronApprox& approx) {
    DenseMatrix M = oracles::kron_sum(dense_list(op.right_factors()),
                                      dense_list(op.left_factors()));
    DenseMatrix P = oracles::kron_sum(approx.Ys, approx.Zs);
    return (M - P).norm();
}

}  // namespace

TEST_CASE("nkp_svd") {
    Rng rng(21);

    SUBCASE("single-term operator is reproduced exactly") {
        KroneckerOperator op = random_op(4, 5, 1, rng);
        KronApprox a = nkp_svd(op, 1);
        CHECK(oracle_error(op, a) <= 1e-12 * op.norm_frobenius());
        CHECK(a.residual <= 1e-12 * op.norm_frobenius());
    }

    SUBCASE("q = r leaves no tail") {
        KroneckerOperator op = random_op(4, 4, 3, rng);
        KronApprox a = nkp_svd(op, 3);
        CHECK(nkp_error(op, a) <= 1e-12 * op.norm_frobenius());
    }

    SUBCASE("error equals the rearranged SVD tail") {
        for (int t = 0; t < 5; ++t) {
            KroneckerOperator op = random_op(6, 6, 4, rng);
            for (int q : {1, 2}) {
                KronApprox a = nkp_svd(op, q);
                double expected = oracle_tail(op, q);
                CHECK(nkp_error(op, a) ==
                      doctest::Approx(expected).epsilon(1e-11));
                CHECK(oracle_error(op, a) ==
                      doctest::Approx(expected).epsilon(1e-11));
                // sigma holds all r values, descending
                CHECK(a.sigma.size() == 4);
                for (Index i = 1; i < a.sigma.size(); ++i)
                    CHECK(a.sigma(i) <= a.sigma(i - 1));
            }
        }
    }

    SUBCASE("invalid rank") {
        KroneckerOperator op = random_op(3, 3, 2, rng);
        CHECK_THROWS_AS(nkp_svd(op, 0), ArgumentError);
        CHECK_THROWS_AS(nkp_svd(op, 3), ArgumentError);
    }

    SUBCASE("duplicate factors cap the effective rank") {
        DenseMatrix A = oracles::random_dense(4, 4, rng);
        DenseMatrix B1 = oracles::random_dense(3, 3, rng);
        DenseMatrix B2 = oracles::random_dense(3, 3, rng);
        std::vector<Factor> fa{A, A}, fb{B1, B2};
        KroneckerOperator op(fa, fb);  // Kronecker rank is 1
        KronApprox a = nkp_svd(op, 2);
        CHECK(a.q == 1);
        CHECK(oracle_error(op, a) <= 1e-10 * op.norm_frobenius());
    }

    SUBCASE("orthogonality of the normalized factors") {
        KroneckerOperator op = random_op(5, 5, 4, rng);
        KronApprox a = nkp_svd(op, 4);
        FactorStack s = op.factor_stacks();
        DenseMatrix M_stack = s.V_A * s.V_B.transpose();
        for (int i = 0; i < a.q; ++i) {
            Vector ui = vec(a.Ys[i]) / std::sqrt(a.sigma(i));
            Vector vi = vec(a.Zs[i]) / std::sqrt(a.sigma(i));
            for (int j = 0; j < a.q; ++j) {
                Vector uj = vec(a.Ys[j]) / std::sqrt(a.sigma(j));
                Vector vj = vec(a.Zs[j]) / std::sqrt(a.sigma(j));
                CHECK(ui.dot(uj) ==
                      doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
                CHECK(vi.dot(vj) ==
                      doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
            }
            // <M, U_i (x) V_i>_F = sigma_i through the stacks
            double sigma_i = ui.transpose() * M_stack * vi;
            CHECK(sigma_i == doctest::Approx(a.sigma(i)).epsilon(1e-10));
        }
    }
}

TEST_CASE("nkp_als") {
    Rng rng(22);

    SUBCASE("exactly representable rank-1 operator") {
        KroneckerOperator op = random_op(5, 4, 1, rng);
        NkpAlsOptions opts;
        opts.max_iter = 2;
        KronApprox a = nkp_als(op, 1, opts);
        CHECK(a.residual <= 1e-10 * op.norm_frobenius());
        CHECK(a.iterations <= 2);
    }

    SUBCASE("residuals non-increasing across half-steps") {
        for (int t = 0; t < 20; ++t) {
            Index n = 4 + t % 3, m = 3 + t % 4;
            KroneckerOperator op = random_op(n, m, 3 + t % 2, rng);
            KronApprox a = nkp_als(op, 2);
            const double slack = 1e-12 * op.norm_frobenius();
            for (size_t i = 1; i < a.half_step_residuals.size(); ++i)
                CHECK(a.half_step_residuals[i] <=
                      a.half_step_residuals[i - 1] + slack);
        }
    }

    SUBCASE("ALS stays above the SVD optimum") {
        for (int t = 0; t < 10; ++t) {
            KroneckerOperator op = random_op(5, 5, 4, rng);
            KronApprox als = nkp_als(op, 2);
            KronApprox opt = nkp_svd(op, 2);
            CHECK(als.residual >= nkp_error(op, opt) - 1e-10);
        }
    }

    SUBCASE("dependent initial factors are reported") {
        KroneckerOperator op = random_op(4, 4, 3, rng);
        NkpAlsOptions opts;
        opts.init_Zs = {DenseMatrix::Identity(4, 4),
                        DenseMatrix(2.0 * DenseMatrix::Identity(4, 4))};
        CHECK_THROWS_AS(nkp_als(op, 2, opts), DependentFactorsError);
        try {
            nkp_als(op, 2, opts);
        } catch (const DependentFactorsError& e) {
            CHECK(std::string(e.what()).find("Z") != std::string::npos);
        }
    }
}

TEST_CASE("nkp_error") {
    Rng rng(23);

    SUBCASE("exact copy gives zero") {
        KroneckerOperator op = random_op(4, 4, 3, rng);
        KronApprox copy;
        copy.q = 3;
        copy.Ys = dense_list(op.right_factors());
        copy.Zs = dense_list(op.left_factors());
        CHECK(nkp_error(op, copy) <= 1e-12 * op.norm_frobenius());
    }

    SUBCASE("empty approximation gives the operator norm") {
        KroneckerOperator op = random_op(4, 5, 3, rng);
        KronApprox empty;
        DenseMatrix M = oracles::kron_sum(dense_list(op.right_factors()),
                                          dense_list(op.left_factors()));
        CHECK(nkp_error(op, empty) ==
              doctest::Approx(M.norm()).epsilon(1e-12));
    }

    SUBCASE("matches the materialized difference") {
        KroneckerOperator op = random_op(5, 5, 3, rng);
        KronApprox a = nkp_als(op, 2);
        CHECK(nkp_error(op, a) ==
              doctest::Approx(oracle_error(op, a)).epsilon(1e-11));
    }
}

TEST_CASE("factor structure lemma") {
    Rng rng(24);
    for (int t = 0; t < 10; ++t) {
        Index n = 6, m = 5;
        Index band_a = 1 + t % 2, band_b = 1;
        std::vector<Factor> A, B;
        for (int k = 0; k < 3; ++k)
            A.emplace_back(oracles::random_banded(n, band_a, rng, true));
        for (int k = 0; k < 3; ++k)
            B.emplace_back(oracles::random_banded(m, band_b, rng, true));
        KroneckerOperator op(A, B);

        for (const KronApprox& a : {nkp_svd(op, 2), nkp_als(op, 2)}) {
            for (const auto& Y : a.Ys) {
                // symmetry is inherited
                CHECK((Y - Y.transpose()).cwiseAbs().maxCoeff() <=
                      1e-12 * Y.cwiseAbs().maxCoeff());
                // sparsity containment is structural
                for (Index j = 0; j < n; ++j)
                    for (Index i = 0; i < n; ++i)
                        if (std::abs(i - j) > band_a) CHECK(Y(i, j) == 0.0);
            }
            for (const auto& Z : a.Zs)
                for (Index j = 0; j < m; ++j)
                    for (Index i = 0; i < m; ++i)
                        if (std::abs(i - j) > band_b) CHECK(Z(i, j) == 0.0);
        }
    }

    SUBCASE("factors lie in the span of the inputs") {
        KroneckerOperator op = random_op(5, 4, 3, rng);
        KronApprox a = nkp_svd(op, 2);
        FactorStack s = op.factor_stacks();
        Eigen::ColPivHouseholderQR<DenseMatrix> qr(s.V_A);
        for (const auto& Y : a.Ys) {
            Vector y = vec(Y);
            Vector coeffs = qr.solve(y);
            CHECK((s.V_A * coeffs - y).norm() <= 1e-10 * y.norm());
        }
    }
}

TEST_CASE("spectral diagnostics") {
    Rng rng(25);
    std::vector<Factor> A, B;
    for (int k = 0; k < 3; ++k) {
        A.emplace_back(oracles::random_spd(5, rng));
        B.emplace_back(oracles::random_spd(5, rng));
    }
    KroneckerOperator op(A, B);

    SUBCASE("exact preconditioner") {
        KronApprox copy;
        copy.q = 3;
        copy.Ys = dense_list(op.right_factors());
        copy.Zs = dense_list(op.left_factors());
        SpectralDiagnostics d = spectral_diagnostics(op, copy);
        CHECK(d.middle <= 1e-9);
        CHECK(d.sandwich_holds);
        for (Index i = 0; i < d.lambdas.size(); ++i)
            CHECK(d.lambdas(i) == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("doubled operator") {
        KronApprox doubled;
        doubled.q = 3;
        for (int k = 0; k < 3; ++k) {
            doubled.Ys.push_back(2.0 * op.A(k).to_dense());
            doubled.Zs.push_back(op.B(k).to_dense());
        }
        SpectralDiagnostics d = spectral_diagnostics(op, doubled);
        CHECK(d.middle == doctest::Approx(0.5).epsilon(1e-10));
        for (Index i = 0; i < d.lambdas.size(); ++i)
            CHECK(d.lambdas(i) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(d.sandwich_holds);
    }

    SUBCASE("rank-1 approximation of an SPD operator") {
        SpectralDiagnostics d = spectral_diagnostics(op, nkp_svd(op, 1));
        CHECK(d.sandwich_holds);
        CHECK(d.lower <= d.middle);
        CHECK(d.middle <= d.upper);
    }

    SUBCASE("non-SPD input is rejected") {
        Rng rng2(26);
        KroneckerOperator skew = random_op(4, 4, 2, rng2);
        CHECK_THROWS_AS(spectral_diagnostics(skew, nkp_svd(skew, 1)),
                        DiagnosticInapplicableError);
    }
}
