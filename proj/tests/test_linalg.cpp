#include <doctest.h>

#include <random>

#include "lmas/matrix.hpp"

using namespace lmas;

namespace {

// Independent Gauss-Jordan inverse; deliberately a different algorithm than
// the Cholesky path under test.
MatrixD gauss_jordan_inverse(MatrixD a) {
    const size_t n = a.rows;
    MatrixD inv = MatrixD::identity(n);
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
        for (size_t j = 0; j < n; ++j) {
            std::swap(a.at(col, j), a.at(pivot, j));
            std::swap(inv.at(col, j), inv.at(pivot, j));
        }
        const double p = a.at(col, col);
        REQUIRE(p != 0.0);
        for (size_t j = 0; j < n; ++j) {
            a.at(col, j) /= p;
            inv.at(col, j) /= p;
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a.at(r, col);
            for (size_t j = 0; j < n; ++j) {
                a.at(r, j) -= factor * a.at(col, j);
                inv.at(r, j) -= factor * inv.at(col, j);
            }
        }
    }
    return inv;
}

template <class T>
Matrix<T> random_matrix(size_t rows, size_t cols, uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    Matrix<T> m(rows, cols);
    for (auto& v : m.data) v = T(dist(rng));
    return m;
}

} // namespace

TEST_CASE("frobenius_norm basics") {
    CHECK(frobenius_norm(MatrixD(4, 4)) == 0.0);
    CHECK(frobenius_norm(MatrixD::identity(2)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("frobenius_norm matches double-loop oracle") {
    MatrixD m = random_matrix<double>(3, 3, 41);
    double acc = 0;
    for (size_t i = 0; i < m.rows; ++i)
        for (size_t j = 0; j < m.cols; ++j) acc += m.at(i, j) * m.at(i, j);
    CHECK(frobenius_norm(m) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
}

TEST_CASE("frobenius_norm absolute homogeneity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        MatrixD m = random_matrix<double>(4, 5, 100 + uint64_t(trial));
        const double c = dist(rng);
        MatrixD scaled = m;
        for (auto& v : scaled.data) v *= c;
        CHECK(frobenius_norm(scaled) ==
              doctest::Approx(std::abs(c) * frobenius_norm(m)).epsilon(1e-12));
    }
}

TEST_CASE("solve_spd identity and diagonal cases") {
    MatrixD b = random_matrix<double>(3, 2, 13);
    MatrixD x = solve_spd(MatrixD::identity(3), b);
    for (size_t i = 0; i < b.data.size(); ++i) CHECK(x.data[i] == doctest::Approx(b.data[i]).epsilon(1e-14));

    MatrixD diag(2, 2);
    diag.at(0, 0) = 2;
    diag.at(1, 1) = 2;
    MatrixD rhs(2, 1, {4, 6});
    MatrixD sol = solve_spd(diag, rhs);
    CHECK(sol.at(0, 0) == doctest::Approx(2.0));
    CHECK(sol.at(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("solve_spd matches Gauss-Jordan inverse oracle") {
    MatrixD g = random_matrix<double>(5, 3, 2024);
    MatrixD a = matmul_tn(g, g);
    for (size_t i = 0; i < 3; ++i) a.at(i, i) += 0.1;
    MatrixD b = random_matrix<double>(3, 4, 99);

    MatrixD x = solve_spd(a, b);
    MatrixD expected = matmul(gauss_jordan_inverse(a), b);
    for (size_t i = 0; i < x.data.size(); ++i)
        CHECK(std::abs(x.data[i] - expected.data[i]) < 1e-8);
}

TEST_CASE("solve_spd residual stays small over random SPD instances") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const size_t n = 2 + size_t(seed % 7);
        MatrixD g = random_matrix<double>(n + 2, n, 300 + seed);
        MatrixD a = matmul_tn(g, g);
        for (size_t i = 0; i < n; ++i) a.at(i, i) += 0.05;
        MatrixD b = random_matrix<double>(n, 3, 400 + seed);
        MatrixD x = solve_spd(a, b);
        MatrixD residual = matmul(a, x);
        for (size_t i = 0; i < residual.data.size(); ++i) residual.data[i] -= b.data[i];
        CHECK(frobenius_norm(residual) / frobenius_norm(b) <= 1e-6);
    }
}

TEST_CASE("solve_spd is precision-stable on well-conditioned inputs") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        MatrixD g = random_matrix<double>(8, 4, 500 + seed);
        MatrixD a64 = matmul_tn(g, g);
        for (size_t i = 0; i < 4; ++i) a64.at(i, i) += 0.5; // keeps the condition number modest
        MatrixD b64 = random_matrix<double>(4, 2, 600 + seed);

        MatrixF a32 = a64.cast<float>();
        MatrixF b32 = b64.cast<float>();
        MatrixD x64 = solve_spd(a64, b64);
        MatrixF x32 = solve_spd(a32, b32);

        double diff = 0, ref = 0;
        for (size_t i = 0; i < x64.data.size(); ++i) {
            diff += (double(x32.data[i]) - x64.data[i]) * (double(x32.data[i]) - x64.data[i]);
            ref += x64.data[i] * x64.data[i];
        }
        CHECK(std::sqrt(diff) / std::sqrt(ref) < 1e-3);
    }
}

TEST_CASE("solve_spd error paths") {
    MatrixD rect(2, 3);
    CHECK_THROWS_AS(solve_spd(rect, MatrixD(3, 1)), ShapeMismatch);
    CHECK_THROWS_AS(solve_spd(MatrixD::identity(3), MatrixD(2, 1)), ShapeMismatch);

    MatrixD asymmetric = MatrixD::identity(2);
    asymmetric.at(0, 1) = 0.5;
    CHECK_THROWS_AS(solve_spd(asymmetric, MatrixD(2, 1)), ShapeMismatch);

    MatrixD indefinite(2, 2, {1, 2, 2, 1}); // eigenvalues 3 and -1
    CHECK_THROWS_AS(solve_spd(indefinite, MatrixD(2, 1)), NotSPD);
}

TEST_CASE("matrix construction validates shape and finiteness") {
    CHECK_THROWS_AS(MatrixD(2, 2, {1.0, 2.0, 3.0}), ShapeMismatch);
    CHECK_THROWS_AS(MatrixD::from_external(1, 2, {1.0, std::nan("")}), InvalidArgument);
    CHECK(MatrixD::from_external(1, 2, {1.0, 2.0}).all_finite());
}
