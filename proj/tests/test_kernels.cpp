#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "kronsolve/errors.hpp"
#include "kronsolve/kernels.hpp"
#include "kronsolve/matrix_market.hpp"
#include "support/oracles.hpp"

using namespace kronsolve;

TEST_CASE("frobenius inner product") {
    CHECK(frobenius_inner(DenseMatrix(DenseMatrix::Identity(3, 3)),
                          DenseMatrix(DenseMatrix::Identity(3, 3))) ==
          doctest::Approx(3.0));

    Rng rng(1);
    DenseMatrix A = oracles::random_dense(4, 4, rng);
    CHECK(frobenius_inner(A, DenseMatrix(DenseMatrix::Zero(4, 4))) == 0.0);

    DenseMatrix B = oracles::random_dense(4, 4, rng);
    double expected = oracles::frobenius(A, B);
    CHECK(frobenius_inner(A, B) ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK(frobenius_inner(A, B) == doctest::Approx(frobenius_inner(B, A)));

    CHECK_THROWS_AS(frobenius_inner(A, DenseMatrix(DenseMatrix::Zero(3, 4))),
                    DimensionError);

    // <A, A> >= 0 with equality iff A = 0
    CHECK(frobenius_inner(A, A) > 0.0);
    SparseMatrix Z(5, 5);
    CHECK(frobenius_inner(Z, Z) == 0.0);

    // mixed representations agree
    SparseMatrix S = oracles::random_banded(6, 1, rng);
    DenseMatrix Sd(S), T = oracles::random_dense(6, 6, rng);
    CHECK(frobenius_inner(S, T) == doctest::Approx(frobenius_inner(Sd, T)));
    SparseMatrix S2 = oracles::random_banded(6, 2, rng);
    CHECK(frobenius_inner(S, S2) ==
          doctest::Approx(frobenius_inner(Sd, DenseMatrix(S2))));
}

TEST_CASE("vec and unvec") {
    DenseMatrix X(2, 2);
    X << 1, 3, 2, 4;
    Vector v = vec(X);
    CHECK(v(0) == 1);
    CHECK(v(1) == 2);
    CHECK(v(2) == 3);
    CHECK(v(3) == 4);

    Rng rng(2);
    DenseMatrix Y = oracles::random_dense(5, 7, rng);
    CHECK(unvec(vec(Y), 5, 7) == Y);

    // vec(e_i e_j^T) is the unit vector at j*m + i
    const Index m = 4, n = 3;
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
            DenseMatrix E = DenseMatrix::Zero(m, n);
            E(i, j) = 1.0;
            Vector e = vec(E);
            for (Index k = 0; k < m * n; ++k)
                CHECK(e(k) == (k == j * m + i ? 1.0 : 0.0));
        }

    CHECK_THROWS_AS(unvec(v, 3, 3), DimensionError);

    // vec is an isometry
    CHECK(vec(Y).norm() == doctest::Approx(Y.norm()).epsilon(1e-14));
}

TEST_CASE("bandwidth") {
    DenseMatrix D = DenseMatrix::Zero(3, 3);
    D.diagonal() << 1, 2, 3;
    CHECK(bandwidth(D) == 0);

    DenseMatrix T = DenseMatrix::Zero(5, 5);
    for (Index i = 0; i < 5; ++i) {
        T(i, i) = 2;
        if (i > 0) {
            T(i, i - 1) = -1;
            T(i - 1, i) = -1;
        }
    }
    CHECK(bandwidth(T) == 1);

    Rng rng(3);
    DenseMatrix F = oracles::random_dense(4, 4, rng);
    Index expected = 0;
    for (Index j = 0; j < 4; ++j)
        for (Index i = 0; i < 4; ++i)
            if (F(i, j) != 0.0) expected = std::max(expected, std::abs(i - j));
    CHECK(bandwidth(F) == expected);
    CHECK(expected == 3);

    CHECK_THROWS_AS(bandwidth(DenseMatrix(DenseMatrix::Zero(2, 3))),
                    DimensionError);

    // sparse bandwidth uses the stored structure, including stored zeros
    SparseMatrix S(4, 4);
    S.insert(3, 0) = 0.0;
    S.makeCompressed();
    CHECK(bandwidth(S) == 3);

    // band(A + B) <= max(band(A), band(B)) for same-shape sparse matrices
    for (int t = 0; t < 10; ++t) {
        SparseMatrix A = oracles::random_banded(8, t % 3, rng);
        SparseMatrix B = oracles::random_banded(8, (t + 1) % 4, rng);
        SparseMatrix sum = A + B;
        CHECK(bandwidth(sum) <= std::max(bandwidth(A), bandwidth(B)));
    }

    CHECK(structural_band(DenseMatrix(DenseMatrix::Zero(3, 5))) == -1);
}

namespace {

bool quasi_upper_triangular(const DenseMatrix& T) {
    for (Index j = 0; j < T.cols(); ++j)
        for (Index i = j + 2; i < T.rows(); ++i)
            if (T(i, j) != 0.0) return false;
    for (Index i = 0; i + 2 < T.rows(); ++i)
        if (T(i + 1, i) != 0.0 && T(i + 2, i + 1) != 0.0) return false;
    return true;
}

}  // namespace

TEST_CASE("real Schur decomposition") {
    DenseMatrix D = DenseMatrix::Zero(3, 3);
    D.diagonal() << 3, 1, 2;
    RealSchurResult s = real_schur(D);
    CHECK(quasi_upper_triangular(s.T));
    std::vector<double> eig{s.T(0, 0), s.T(1, 1), s.T(2, 2)};
    std::sort(eig.begin(), eig.end());
    CHECK(eig[0] == doctest::Approx(1));
    CHECK(eig[1] == doctest::Approx(2));
    CHECK(eig[2] == doctest::Approx(3));

    // 90 degree rotation: a single 2x2 block with eigenvalues +-i
    DenseMatrix R(2, 2);
    R << 0, -1, 1, 0;
    RealSchurResult sr = real_schur(R);
    CHECK(sr.T(1, 0) != 0.0);
    CHECK(sr.T.trace() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(sr.T.determinant() == doctest::Approx(1.0).epsilon(1e-12));

    // reconstruction and orthogonality on random matrices up to size 50
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        Index dim = 2 + (t * 7) % 49;
        DenseMatrix A = oracles::random_dense(dim, dim, rng);
        RealSchurResult r = real_schur(A);
        CHECK((A - r.Q * r.T * r.Q.transpose()).norm() <= 1e-12 * A.norm());
        CHECK((r.Q.transpose() * r.Q - DenseMatrix::Identity(dim, dim))
                  .norm() <= 1e-12 * std::sqrt(double(dim)));
        CHECK(quasi_upper_triangular(r.T));
    }

    CHECK_THROWS_AS(real_schur(DenseMatrix(DenseMatrix::Zero(2, 3))),
                    DimensionError);
}

TEST_CASE("MatrixMarket io") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "kronsolve_mm_test";
    fs::create_directories(dir);

    SUBCASE("identity coordinate round trip") {
        SparseMatrix I(3, 3);
        I.setIdentity();
        const std::string path = (dir / "eye.mtx").string();
        write_matrix_market(path, I);
        SparseMatrix back = read_matrix_market_sparse(path);
        CHECK(back.nonZeros() == 3);
        for (Index i = 0; i < 3; ++i) CHECK(back.coeff(i, i) == 1.0);
    }

    SUBCASE("banner parsing") {
        const std::string path = (dir / "two.mtx").string();
        std::ofstream out(path);
        out << "%%MatrixMarket matrix coordinate real general\n"
            << "% a comment\n"
            << "3 3 2\n"
            << "1 2 1.5\n"
            << "3 1 -2.0\n";
        out.close();
        SparseMatrix S = read_matrix_market_sparse(path);
        CHECK(S.nonZeros() == 2);
        CHECK(S.coeff(0, 1) == 1.5);
        CHECK(S.coeff(2, 0) == -2.0);
    }

    SUBCASE("bitwise round trip of a random banded matrix") {
        Rng rng(5);
        SparseMatrix S = oracles::random_banded(50, 3, rng);
        const std::string path = (dir / "banded.mtx").string();
        write_matrix_market(path, S);
        SparseMatrix back = read_matrix_market_sparse(path);
        REQUIRE(back.nonZeros() == S.nonZeros());
        for (Index j = 0; j < S.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(S, j); it; ++it)
                CHECK(back.coeff(it.row(), j) == it.value());  // 17 digits
    }

    SUBCASE("dense array round trip") {
        Rng rng(6);
        DenseMatrix A = oracles::random_dense(7, 4, rng);
        const std::string path = (dir / "dense.mtx").string();
        write_matrix_market(path, A);
        DenseMatrix back = read_matrix_market_dense(path);
        CHECK(back == A);
    }

    SUBCASE("symmetric coordinate read expands") {
        const std::string path = (dir / "sym.mtx").string();
        std::ofstream out(path);
        out << "%%MatrixMarket matrix coordinate real symmetric\n"
            << "2 2 2\n"
            << "1 1 4.0\n"
            << "2 1 -1.0\n";
        out.close();
        SparseMatrix S = read_matrix_market_sparse(path);
        CHECK(S.coeff(0, 1) == -1.0);
        CHECK(S.coeff(1, 0) == -1.0);
        CHECK(S.coeff(0, 0) == 4.0);
    }

    SUBCASE("malformed input reports the line") {
        const std::string path = (dir / "bad.mtx").string();
        std::ofstream out(path);
        out << "%%MatrixMarket matrix coordinate real general\n"
            << "3 3 1\n"
            << "1 oops 2.0\n";
        out.close();
        try {
            read_matrix_market(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_matrix_market((dir / "nope.mtx").string()),
                        IoError);
    }
}
