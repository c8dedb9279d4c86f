#include <catch2/catch_amalgamated.hpp>

#include "rankdep/kernels.hpp"
#include "rankdep/rng.hpp"

using namespace rankdep;

namespace {

/// Smallest eigenvalue of a small symmetric matrix by cyclic Jacobi sweeps.
double min_eigenvalue(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-18) continue;
                const double theta = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    double m = a[0][0];
    for (std::size_t i = 1; i < n; ++i) m = std::min(m, a[i][i]);
    return m;
}

std::vector<std::vector<double>> gram(const Kernel& k, const Matrix& pts) {
    const std::size_t n = pts.rows();
    std::vector<std::vector<double>> g(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i][j] = k(pts.row(i), pts.row(j));
    return g;
}

Matrix random_unit_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, d);
    for (auto& v : m.data()) v = rng.uniform();
    return m;
}

}  // namespace

TEST_CASE("kernel evaluations", "[kernels]") {
    const Kernel e = Kernel::energy();
    const double a = 0.3, b = 0.5;
    CHECK_THAT(e(std::span{&a, 1}, std::span{&b, 1}), Catch::Matchers::WithinAbs(0.6, 1e-15));

    const Matrix y = random_unit_points(5, 3, 1);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK_THAT(e(y.row(i), y.row(i)),
                   Catch::Matchers::WithinAbs(2.0 * euclidean_norm(y.row(i)), 1e-14));

    const Kernel g = Kernel::gaussian(1.0);
    for (std::size_t i = 0; i < 5; ++i) CHECK(g(y.row(i), y.row(i)) == 1.0);

    const Kernel l = Kernel::laplace(0.7);
    CHECK_THAT(l(std::span{&a, 1}, std::span{&b, 1}),
               Catch::Matchers::WithinAbs(std::exp(-0.2 / 0.7), 1e-14));

    const Matrix z = random_unit_points(1, 2, 2);
    CHECK_THROWS_AS(g(y.row(0), z.row(0)), error);
    CHECK_THROWS_AS(Kernel::gaussian(0.0), error);
    CHECK_THROWS_AS(Kernel::laplace(-1.0), error);
}

TEST_CASE("kernels are symmetric", "[kernels]") {
    const Matrix y = random_unit_points(24, 2, 3);
    for (const Kernel k : {Kernel::energy(), Kernel::gaussian(0.4), Kernel::laplace(0.8)})
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.rows(); ++j)
                REQUIRE(k(y.row(i), y.row(j)) == k(y.row(j), y.row(i)));
}

TEST_CASE("gram matrices are nonnegative definite", "[kernels]") {
    const Matrix pts = random_unit_points(20, 3, 5);
    CHECK(min_eigenvalue(gram(Kernel::gaussian(0.5), pts)) >= -1e-8);
    CHECK(min_eigenvalue(gram(Kernel::laplace(0.5), pts)) >= -1e-8);

    // energy kernel: test the doubly centered Gram matrix
    auto g = gram(Kernel::energy(), pts);
    const std::size_t n = pts.rows();
    std::vector<double> rowm(n, 0.0);
    double allm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) rowm[i] += g[i][j];
        rowm[i] /= static_cast<double>(n);
        allm += rowm[i];
    }
    allm /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i][j] += allm - rowm[i] - rowm[j];
    CHECK(min_eigenvalue(g) >= -1e-8);
}

TEST_CASE("energy kernel is twice the minimum on the half line", "[kernels]") {
    const Kernel e = Kernel::energy();
    for (double u = 0.05; u <= 1.0; u += 0.12)
        for (double v = 0.05; v <= 1.0; v += 0.12) {
            CHECK_THAT(e(std::span{&u, 1}, std::span{&v, 1}),
                       Catch::Matchers::WithinAbs(2.0 * std::min(u, v), 1e-15));
        }
}

TEST_CASE("closed-form null moments of the energy kernel", "[kernels]") {
    const auto m = null_moments(Kernel::energy(), 1, MomentMethod::closed_form);
    CHECK_THAT(m.a_tilde, Catch::Matchers::WithinAbs(4.0 / 6.0, 1e-15));
    CHECK_THAT(m.b_tilde, Catch::Matchers::WithinAbs(8.0 / 15.0, 1e-15));
    CHECK_THAT(m.c_tilde, Catch::Matchers::WithinAbs(4.0 / 9.0, 1e-15));
    CHECK_THAT(m.diag_mean, Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(m.offdiag_mean, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));

    const auto half = m.scaled(0.5);  // min-form normalization
    CHECK_THAT(half.a_tilde, Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-15));
    CHECK_THAT(half.b_tilde, Catch::Matchers::WithinAbs(2.0 / 15.0, 1e-15));
    CHECK_THAT(half.c_tilde, Catch::Matchers::WithinAbs(1.0 / 9.0, 1e-15));

    CHECK_THROWS_AS(null_moments(Kernel::gaussian(1.0), 1, MomentMethod::closed_form), error);
    CHECK_THROWS_AS(null_moments(Kernel::energy(), 2, MomentMethod::closed_form), error);
    CHECK_THROWS_AS(null_moments(Kernel::energy(), 1, MomentMethod::quasi_mc, 500), error);
}

TEST_CASE("quasi-MC moments reproduce the closed forms", "[kernels]") {
    const auto qmc = null_moments(Kernel::energy(), 1, MomentMethod::quasi_mc, 200'000);
    const auto cf = null_moments(Kernel::energy(), 1, MomentMethod::closed_form);
    CHECK(std::abs(qmc.a_tilde - cf.a_tilde) < 1e-3);
    CHECK(std::abs(qmc.b_tilde - cf.b_tilde) < 1e-3);
    CHECK(std::abs(qmc.c_tilde - cf.c_tilde) < 1e-3);
    CHECK(std::abs(qmc.diag_mean - cf.diag_mean) < 1e-3);
    CHECK(std::abs(qmc.offdiag_mean - cf.offdiag_mean) < 1e-3);
}

TEST_CASE("null moment inequalities hold for every kernel", "[kernels]") {
    for (const Kernel k : {Kernel::energy(), Kernel::gaussian(0.5), Kernel::laplace(0.7)})
        for (std::size_t d : {std::size_t{1}, std::size_t{2}}) {
            const auto m = null_moments(k, d, MomentMethod::quasi_mc, 100'000);
            INFO(to_string(k.kind) << " d=" << d);
            CHECK(m.a_tilde >= m.c_tilde);
            CHECK(m.c_tilde >= 0.0);
            CHECK(m.b_tilde >= m.c_tilde - 1e-12);
            CHECK(m.a_tilde - 2.0 * m.b_tilde + m.c_tilde >= -1e-12);
        }
}

TEST_CASE("gaussian moments are stable in the quasi-MC budget", "[kernels][slow]") {
    const Kernel k = Kernel::gaussian(0.5);
    const auto m1 = null_moments(k, 2, MomentMethod::quasi_mc, 1'000'000);
    const auto m4 = null_moments(k, 2, MomentMethod::quasi_mc, 4'000'000);
    CHECK(std::abs(m1.a_tilde - m4.a_tilde) < 5e-4);
    CHECK(std::abs(m1.b_tilde - m4.b_tilde) < 5e-4);
    CHECK(std::abs(m1.c_tilde - m4.c_tilde) < 5e-4);
}

TEST_CASE("mmd on identical samples and point masses", "[kernels]") {
    const Matrix a = random_unit_points(12, 2, 8);
    CHECK(mmd_squared(Kernel::gaussian(0.6), a, a, MmdEstimator::v_stat) == 0.0);

    // repeated points act as point masses
    Matrix pa(3, 1), pb(3, 1);
    for (std::size_t i = 0; i < 3; ++i) {
        pa(i, 0) = 0.2;
        pb(i, 0) = 0.7;
    }
    const double sigma = 0.5;
    const double expected = 2.0 - 2.0 * std::exp(-0.25 / (2.0 * sigma * sigma));
    CHECK_THAT(mmd_squared(Kernel::gaussian(sigma), pa, pb),
               Catch::Matchers::WithinAbs(expected, 1e-12));

    CHECK_THROWS_AS(mmd_squared(Kernel::energy(), Matrix(1, 1), a), error);
}

TEST_CASE("mmd between same-law samples is within Monte Carlo noise", "[kernels][slow]") {
    const Kernel k = Kernel::energy();
    std::vector<double> vals;
    for (std::uint64_t r = 0; r < 30; ++r) {
        const Matrix a = random_unit_points(150, 1, 100 + r);
        const Matrix b = random_unit_points(150, 1, 900 + r);
        vals.push_back(mmd_squared(k, a, b));
    }
    const double m = mean(vals);
    const double se = standard_error_of_mean(vals);
    INFO("mean=" << m << " se=" << se);
    CHECK(std::abs(m) < 4.0 * se);
}

TEST_CASE("median heuristic bandwidth", "[kernels]") {
    const Matrix pts = random_unit_points(50, 2, 21);
    const double bw = median_heuristic_bandwidth(pts);
    CHECK(bw > 0.0);
    CHECK(bw < std::sqrt(2.0));
    CHECK_THROWS_AS(median_heuristic_bandwidth(Matrix(1, 2)), error);
}
