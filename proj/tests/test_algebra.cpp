#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qmark/algebra.hpp"
#include "qmark/linalg.hpp"

#include <Eigen/SVD>

using namespace qmark;

TEST_CASE("annihilator single-site convention") {
    const ChainWindow w(0, 1);
    const ChainOperator a = annihilator(w, 0);
    CHECK(a.mat(0, 0) == Complex(0.0, 0.0));
    CHECK(a.mat(0, 1) == Complex(1.0, 0.0));
    CHECK(a.mat(1, 0) == Complex(0.0, 0.0));
    CHECK(a.mat(1, 1) == Complex(0.0, 0.0));
}

TEST_CASE("car relations hold exactly on small windows") {
    for (int len = 1; len <= 5; ++len) {
        const ChainWindow w(-len + 1, len);
        const Matrix id = Matrix::Identity(w.dim(), w.dim());
        for (int i = w.first; i <= w.last(); ++i)
            for (int j = w.first; j <= w.last(); ++j) {
                const ChainOperator ai = annihilator(w, i);
                const ChainOperator aj = annihilator(w, j);
                const Matrix ac = creator(w, i).mat * aj.mat + aj.mat * creator(w, i).mat;
                CHECK(max_abs(Matrix(ac - (i == j ? 1.0 : 0.0) * id)) < 1e-12);
                CHECK(max_abs(anticommutator(ai, aj).mat) < 1e-12);
            }
    }
}

TEST_CASE("matrix units: identity resolution, products, cross-site commutation") {
    const ChainWindow w(-3, 4);
    const Matrix id = Matrix::Identity(w.dim(), w.dim());
    for (int k = w.first; k <= w.last(); ++k) {
        CHECK(max_abs(Matrix(matrix_unit(w, k, 1, 1).mat + matrix_unit(w, k, 2, 2).mat - id)) <
              1e-12);
        CHECK(max_abs(Matrix(matrix_unit(w, k, 1, 2).mat * matrix_unit(w, k, 2, 1).mat -
                             matrix_unit(w, k, 1, 1).mat)) < 1e-12);
        // e11 = a a+ and e22 = a+ a
        CHECK(max_abs(Matrix(matrix_unit(w, k, 1, 1).mat -
                             annihilator(w, k).mat * creator(w, k).mat)) < 1e-12);
        CHECK(max_abs(Matrix(matrix_unit(w, k, 2, 2).mat -
                             creator(w, k).mat * annihilator(w, k).mat)) < 1e-12);
    }
    for (int j = w.first; j <= w.last(); ++j)
        for (int k = w.first; k <= w.last(); ++k) {
            if (j == k) continue;
            for (int m = 1; m <= 2; ++m)
                for (int n = 1; n <= 2; ++n)
                    CHECK(max_abs(commutator(matrix_unit(w, j, 1, 2), matrix_unit(w, k, m, n)).mat) <
                          1e-12);
        }
}

TEST_CASE("matrix unit algebra within one site") {
    const ChainWindow w(0, 3);
    for (int m = 1; m <= 2; ++m)
        for (int n = 1; n <= 2; ++n)
            for (int p = 1; p <= 2; ++p)
                for (int q = 1; q <= 2; ++q) {
                    const Matrix lhs = matrix_unit(w, 1, m, n).mat * matrix_unit(w, 1, p, q).mat;
                    const Matrix rhs = (n == p) ? matrix_unit(w, 1, m, q).mat
                                                : Matrix::Zero(w.dim(), w.dim());
                    CHECK(max_abs(Matrix(lhs - rhs)) < 1e-12);
                }
}

TEST_CASE("parity automorphism") {
    const ChainWindow w(-2, 3);
    Rng rng(7);
    for (int k = w.first; k <= w.last(); ++k)
        CHECK(max_abs(Matrix(parity(annihilator(w, k)).mat + annihilator(w, k).mat)) < 1e-12);
    const ChainOperator even = mul(creator(w, -1), annihilator(w, 0));
    CHECK(max_abs(Matrix(parity(even).mat - even.mat)) < 1e-12);
    for (int t = 0; t < 4; ++t) {
        const ChainOperator x = random_op(w, rng);
        const ChainOperator y = random_op(w, rng);
        CHECK(max_abs(Matrix(parity(parity(x)).mat - x.mat)) < 1e-12);
        CHECK(max_abs(Matrix(parity(mul(x, y)).mat - mul(parity(x), parity(y)).mat)) < 1e-12);
        CHECK(max_abs(Matrix(parity(adjoint(x)).mat - adjoint(parity(x)).mat)) < 1e-12);
    }
}

TEST_CASE("parity decomposition") {
    const ChainWindow w(0, 2);
    Rng rng(11);
    const auto [ap, am] = parity_decompose(annihilator(w, 1));
    CHECK(max_abs(ap.mat) < 1e-12);
    CHECK(max_abs(Matrix(am.mat - annihilator(w, 1).mat)) < 1e-12);
    const auto [ip, im] = parity_decompose(identity_op(w));
    CHECK(max_abs(im.mat) < 1e-12);
    CHECK(max_abs(Matrix(ip.mat - Matrix::Identity(w.dim(), w.dim()))) < 1e-12);
    const ChainOperator x = random_op(w, rng);
    const auto [xp, xm] = parity_decompose(x);
    CHECK(max_abs(Matrix(x.mat - xp.mat - xm.mat)) < 1e-12);
    CHECK(max_abs(Matrix(parity(xp).mat - xp.mat)) < 1e-12);
    CHECK(max_abs(Matrix(parity(xm).mat + xm.mat)) < 1e-12);
}

TEST_CASE("traces and operator norm") {
    const ChainWindow w(-3, 4);
    CHECK(std::abs(normalized_trace(identity_op(w)).real() - 1.0) < 1e-12);
    CHECK(std::abs(trace(matrix_unit(w, -1, 1, 1)).real() - w.dim() / 2.0) < 1e-12);
    // generator norm against an independent SVD
    const ChainOperator a = annihilator(w, -1);
    Eigen::JacobiSVD<Matrix> svd(a.mat);
    CHECK(std::abs(operator_norm(a) - 1.0) < 1e-12);
    CHECK(std::abs(svd.singularValues()(0) - 1.0) < 1e-12);
}

TEST_CASE("window mismatch is rejected") {
    const ChainWindow w1(0, 2), w2(0, 3);
    CHECK_THROWS_AS(add(identity_op(w1), identity_op(w2)), ConfigError);
    CHECK_THROWS_AS(annihilator(w1, 5), ConfigError);
    CHECK_THROWS_AS(matrix_unit(w1, 0, 0, 1), ConfigError);
}

TEST_CASE("embedding maps generators to generators") {
    const ChainWindow w1(-1, 2), w2(-3, 4);
    CHECK(max_abs(Matrix(embed(identity_op(w1), w2).mat - Matrix::Identity(w2.dim(), w2.dim()))) <
          1e-12);
    // even local element, string cancels
    const ChainOperator p = mul(annihilator(w1, 0), creator(w1, 0));
    CHECK(max_abs(Matrix(embed(p, w2).mat - mul(annihilator(w2, 0), creator(w2, 0)).mat)) < 1e-12);
    // odd element: extra left sites produce the parity string of the native one
    CHECK(max_abs(Matrix(embed(annihilator(w1, -1), w2).mat - annihilator(w2, -1).mat)) < 1e-12);
    CHECK(max_abs(Matrix(embed(annihilator(w1, 0), w2).mat - annihilator(w2, 0).mat)) < 1e-12);
}

TEST_CASE("embedding is an isometric homomorphism") {
    const ChainWindow w1(0, 2), w2(-2, 5);
    Rng rng(3);
    for (int t = 0; t < 5; ++t) {
        const ChainOperator x = random_op(w1, rng);
        const ChainOperator y = random_op(w1, rng);
        CHECK(max_abs(Matrix(embed(mul(x, y), w2).mat - mul(embed(x, w2), embed(y, w2)).mat)) <
              1e-11);
        CHECK(max_abs(Matrix(embed(adjoint(x), w2).mat - adjoint(embed(x, w2)).mat)) < 1e-12);
        CHECK(std::abs(operator_norm(embed(x, w2)) - operator_norm(x)) < 1e-10);
    }
}

TEST_CASE("localize inverts embed") {
    const ChainWindow w1(-1, 2), w2(-3, 5);
    Rng rng(13);
    for (int t = 0; t < 5; ++t) {
        const ChainOperator x = random_op(w1, rng);
        const ChainOperator back = localize(embed(x, w2), w1);
        CHECK(max_abs(Matrix(back.mat - x.mat)) < 1e-11);
    }
}

TEST_CASE("embedding rejects non-containing windows") {
    const ChainWindow w1(0, 3), w2(1, 3);
    CHECK_THROWS_AS(embed(identity_op(w1), w2), ConfigError);
}

TEST_CASE("state density validation and faithfulness") {
    const ChainWindow w(0, 2);
    StateDensity tau(w, Matrix::Identity(w.dim(), w.dim()),
                     TraceNormalization::UnitNormalizedTrace);
    tau.validate();
    tau.require_faithful();
    CHECK(std::abs(tau(identity_op(w)).real() - 1.0) < 1e-12);

    Matrix pure = Matrix::Zero(w.dim(), w.dim());
    pure(0, 0) = 1.0;
    StateDensity rho(w, pure, TraceNormalization::UnitTrace);
    rho.validate();
    CHECK_THROWS_AS(rho.require_faithful(), FaithfulnessError);
}

TEST_CASE("reduced densities agree with direct expectations") {
    const ChainWindow w(-2, 3);
    Rng rng(5);
    Matrix g = random_hermitian(w, rng).mat;
    Matrix rho = expm_h(Matrix(0.3 * g));
    rho /= rho.trace().real();
    const StateDensity full(w, rho, TraceNormalization::UnitTrace);
    const ChainWindow sub(-1, 2);
    const StateDensity red = reduce_to(full, sub);
    for (int t = 0; t < 6; ++t) {
        const ChainOperator x = random_op(sub, rng);
        CHECK(std::abs(full(embed(x, w)) - red(x)) < 1e-10);
    }
}

TEST_CASE("hermitian kernels: exp, log, sqrt round trips") {
    const ChainWindow w(0, 2);
    Rng rng(17);
    const Matrix g = random_hermitian(w, rng).mat;
    const Matrix e = expm_h(g);
    CHECK(max_abs(Matrix(logm_h(e) - g)) < 1e-9);
    const Matrix s = sqrtm_h(e);
    CHECK(max_abs(Matrix(s * s - e)) < 1e-10);
    CHECK(max_abs(Matrix(invm_h(e) * e - Matrix::Identity(4, 4))) < 1e-10);
    Matrix singular = Matrix::Zero(4, 4);
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(logm_h(singular), FaithfulnessError);
}
