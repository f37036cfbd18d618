#include <Eigen/SVD>

#include "doctest.h"
#include "kronsolve/kernels.hpp"
#include "kronsolve/operator.hpp"
#include "support/oracles.hpp"

using namespace kronsolve;

namespace {

KroneckerOperator mixed_random_op(Index n, Index m, int r, Rng& rng) {
    std::vector<Factor> A, B;
    for (int k = 0; k < r; ++k) {
        if (k % 2 == 0)
            A.emplace_back(oracles::random_dense(n, n, rng));
        else
            A.emplace_back(oracles::random_banded(n, 1, rng));
        if (k % 3 == 0)
            B.emplace_back(oracles::random_banded(m, 2, rng));
        else
            B.emplace_back(oracles::random_dense(m, m, rng));
    }
    return KroneckerOperator(std::move(A), std::move(B));
}

std::vector<DenseMatrix> dense_right(const KroneckerOperator& op) {
    std::vector<DenseMatrix> out;
    for (int k = 0; k < op.r(); ++k) out.push_back(op.A(k).to_dense());
    return out;
}

std::vector<DenseMatrix> dense_left(const KroneckerOperator& op) {
    std::vector<DenseMatrix> out;
    for (int k = 0; k < op.r(); ++k) out.push_back(op.B(k).to_dense());
    return out;
}

}  // namespace

TEST_CASE("operator application") {
    Rng rng(11);
    SUBCASE("identity operator") {
        std::vector<Factor> I1{DenseMatrix(DenseMatrix::Identity(3, 3))};
        std::vector<Factor> I2{DenseMatrix(DenseMatrix::Identity(4, 4))};
        KroneckerOperator op(I1, I2);
        DenseMatrix X = oracles::random_dense(4, 3, rng);
        CHECK((op.apply(X) - X).norm() == 0.0);
    }

    SUBCASE("zero maps to zero") {
        KroneckerOperator op = mixed_random_op(4, 5, 3, rng);
        CHECK(op.apply(DenseMatrix::Zero(5, 4)).norm() == 0.0);
    }

    SUBCASE("agrees with the materialized matrix") {
        KroneckerOperator op = mixed_random_op(5, 5, 3, rng);
        DenseMatrix M = oracles::kron_sum(dense_right(op), dense_left(op));
        DenseMatrix X = oracles::random_dense(5, 5, rng);
        DenseMatrix direct = op.apply(X);
        DenseMatrix via = unvec(M * vec(X), 5, 5);
        CHECK((direct - via).norm() <= 1e-12 * via.norm());
    }

    SUBCASE("shape mismatch") {
        KroneckerOperator op = mixed_random_op(4, 5, 2, rng);
        CHECK_THROWS_AS(op.apply(DenseMatrix::Zero(4, 5)), DimensionError);
    }

    SUBCASE("linearity") {
        KroneckerOperator op = mixed_random_op(4, 6, 3, rng);
        DenseMatrix X = oracles::random_dense(6, 4, rng);
        DenseMatrix Y = oracles::random_dense(6, 4, rng);
        DenseMatrix lhs = op.apply(1.7 * X - 0.3 * Y);
        DenseMatrix rhs = 1.7 * op.apply(X) - 0.3 * op.apply(Y);
        CHECK((lhs - rhs).norm() <= 1e-13 * rhs.norm());
    }

    SUBCASE("adjoint identity") {
        KroneckerOperator op = mixed_random_op(5, 4, 3, rng);
        DenseMatrix X = oracles::random_dense(4, 5, rng);
        DenseMatrix Y = oracles::random_dense(4, 5, rng);
        DenseMatrix adj = DenseMatrix::Zero(4, 5);
        for (int k = 0; k < op.r(); ++k)
            adj += op.B(k).to_dense().transpose() * Y * op.A(k).to_dense();
        double lhs = frobenius_inner(op.apply(X), Y);
        double rhs = frobenius_inner(X, adj);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("factor stacks") {
    Rng rng(12);
    SUBCASE("identity column") {
        std::vector<Factor> A{DenseMatrix(DenseMatrix::Identity(2, 2))};
        std::vector<Factor> B{DenseMatrix(DenseMatrix::Identity(2, 2))};
        KroneckerOperator op(A, B);
        FactorStack s = op.factor_stacks();
        Vector expected(4);
        expected << 1, 0, 0, 1;
        CHECK(Vector(s.V_A.col(0)) == expected);
    }

    SUBCASE("columns reshape back to the factors") {
        KroneckerOperator op = mixed_random_op(4, 3, 4, rng);
        FactorStack s = op.factor_stacks();
        for (int k = 0; k < op.r(); ++k) {
            CHECK(unvec(s.V_A.col(k), 4, 4) == op.A(k).to_dense());
            CHECK(unvec(s.V_B.col(k), 3, 3) == op.B(k).to_dense());
        }
    }

    SUBCASE("rearranged operator has rank at most r") {
        KroneckerOperator op = mixed_random_op(4, 4, 3, rng);
        DenseMatrix M = oracles::kron_sum(dense_right(op), dense_left(op));
        DenseMatrix R = oracles::rearrange(M, 4, 4);
        Eigen::JacobiSVD<DenseMatrix> svd(R);
        const Vector& sv = svd.singularValues();
        for (Index k = op.r(); k < sv.size(); ++k)
            CHECK(sv(k) <= 1e-12 * sv(0));
    }
}

TEST_CASE("gram cache") {
    Rng rng(13);
    SUBCASE("orthogonal factor") {
        DenseMatrix Q =
            Eigen::JacobiSVD<DenseMatrix>(oracles::random_dense(4, 4, rng),
                                          Eigen::ComputeFullU)
                .matrixU();
        std::vector<Factor> A{Q};
        std::vector<Factor> B{DenseMatrix(DenseMatrix::Identity(3, 3))};
        KroneckerOperator op(A, B);
        CHECK((op.gram().ata(0, 0).to_dense() - DenseMatrix::Identity(4, 4))
                  .norm() <= 1e-14 * 4);
    }

    SUBCASE("entries and symmetry") {
        KroneckerOperator op = mixed_random_op(4, 3, 3, rng);
        const GramCache& g = op.gram();
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) {
                DenseMatrix expected = op.A(k).to_dense().transpose() *
                                       op.A(l).to_dense();
                CHECK((g.ata(k, l).to_dense() - expected).norm() <=
                      1e-13 * (1.0 + expected.norm()));
                // exact blockwise symmetry relation
                CHECK(g.ata(k, l).to_dense() ==
                      DenseMatrix(g.ata(l, k).to_dense().transpose()));
                CHECK(g.btb(k, l).to_dense() ==
                      DenseMatrix(g.btb(l, k).to_dense().transpose()));
            }
    }

    SUBCASE("gram inner product identity") {
        KroneckerOperator op = mixed_random_op(4, 3, 3, rng);
        DenseMatrix C = oracles::random_dense(4, 4, rng);
        const GramCache& g = op.gram();
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) {
                double lhs = frobenius_inner(g.ata(k, l).to_dense(),
                                             DenseMatrix(C * C.transpose()));
                double rhs = frobenius_inner(
                    DenseMatrix(op.A(k).to_dense() * C),
                    DenseMatrix(op.A(l).to_dense() * C));
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            }
    }
}

TEST_CASE("materialize") {
    Rng rng(14);
    SUBCASE("identity") {
        std::vector<Factor> A{DenseMatrix(DenseMatrix::Identity(2, 2))};
        std::vector<Factor> B{DenseMatrix(DenseMatrix::Identity(2, 2))};
        KroneckerOperator op(A, B);
        CHECK(op.materialize() == DenseMatrix::Identity(4, 4));
    }

    SUBCASE("vec identity") {
        DenseMatrix A = oracles::random_dense(3, 3, rng);
        DenseMatrix B = oracles::random_dense(3, 3, rng);
        std::vector<Factor> fa{A}, fb{B};
        KroneckerOperator op(fa, fb);
        DenseMatrix M = op.materialize();
        DenseMatrix X = oracles::random_dense(3, 3, rng);
        Vector lhs = M * vec(X);
        Vector rhs = vec(DenseMatrix(B * X * A.transpose()));
        CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
        CHECK((M - oracles::kron(A, B)).norm() == 0.0);
    }

    SUBCASE("size guard") {
        KroneckerOperator op = mixed_random_op(8, 8, 2, rng);
        CHECK_THROWS_AS(op.materialize(63), SizeGuardError);
    }

    SUBCASE("norm via stacks matches materialization") {
        KroneckerOperator op = mixed_random_op(5, 4, 3, rng);
        DenseMatrix M = op.materialize();
        CHECK(op.norm_frobenius() ==
              doctest::Approx(M.norm()).epsilon(1e-12));
    }
}
