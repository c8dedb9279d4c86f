#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "rankdep/models.hpp"
#include "rankdep/ot_ranks.hpp"
#include "rankdep/rng.hpp"

using namespace rankdep;

namespace {

/// Classical univariate ranks (1-based), independent of the assignment path.
std::vector<std::size_t> classical_ranks(const Matrix& col) {
    std::vector<std::size_t> order(col.rows()), rank(col.rows());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return col(a, 0) < col(b, 0); });
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
    return rank;
}

Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Matrix m(n, d);
    for (auto& v : m.data()) v = scale * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("single observation gets the single grid point", "[ot_ranks]") {
    const auto grid = make_halton(1, 2);
    const Matrix x = Matrix::from_rows({{3.0, -4.0}});
    const auto a = compute_ranks(x, grid);
    REQUIRE(a.perm == std::vector<std::uint32_t>{0});
    const auto b = brute_force_ranks(x, grid);
    CHECK(b.perm == a.perm);
}

TEST_CASE("lattice ranks are classical ranks over n", "[ot_ranks]") {
    const auto grid = make_lattice_1d(3);
    const Matrix x = Matrix::from_rows({{0.9}, {-2.3}, {0.4}});
    const auto a = compute_ranks(x, grid);
    const Matrix r = rank_points(grid, a);
    CHECK(r(0, 0) == 1.0);
    CHECK_THAT(r(1, 0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
    CHECK_THAT(r(2, 0), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("lattice ranks reduce to classical ranks on random samples", "[ot_ranks]") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(1000 + seed);
        const std::size_t n = 3 + rng.below(60);
        const Matrix x = random_matrix(n, 1, seed * 11 + 5, 2.5);
        const auto grid = make_lattice_1d(n);
        const auto a = compute_ranks(x, grid);
        const auto cls = classical_ranks(x);
        const Matrix r = rank_points(grid, a);
        for (std::size_t i = 0; i < n; ++i)
            REQUIRE(r(i, 0) == static_cast<double>(cls[i]) / static_cast<double>(n));
    }
}

TEST_CASE("solver matches exhaustive optimum on a seeded d=2 instance", "[ot_ranks]") {
    const auto grid = make_halton(6, 2);
    const Matrix x = random_matrix(6, 2, 99);
    const auto fast = compute_ranks(x, grid);
    const auto brute = brute_force_ranks(x, grid);
    CHECK(fast.perm == brute.perm);
    CHECK_THAT(fast.cost, Catch::Matchers::WithinRel(brute.cost, 1e-12));
}

TEST_CASE("brute force oracle basics", "[ot_ranks]") {
    const Matrix pts = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}});
    const ReferenceGrid grid({GridScheme::iid_uniform, 2, 2, 0}, pts);
    const Matrix x = Matrix::from_rows({{0.9, 0.9}, {0.1, 0.1}});
    const auto b = brute_force_ranks(x, grid);
    CHECK(b.perm == std::vector<std::uint32_t>{1, 0});

    const Matrix big = random_matrix(11, 2, 4);
    CHECK_THROWS_AS(brute_force_ranks(big, make_halton(11, 2)), error);
}

TEST_CASE("solver cost is optimal for random small instances", "[ot_ranks]") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed * 3 + 2);
        const std::size_t n = 2 + rng.below(7);
        const std::size_t d = 1 + rng.below(3);
        const Matrix x = random_matrix(n, d, seed + 500, 2.0);
        const auto grid = make_halton(n, d);
        const auto fast = compute_ranks(x, grid);
        const auto brute = brute_force_ranks(x, grid);
        REQUIRE_THAT(fast.cost, Catch::Matchers::WithinRel(brute.cost, 1e-12));
    }
}

TEST_CASE("solver stays optimal under heavy-tailed data", "[ot_ranks]") {
    // Cauchy draws produce cost matrices whose entries span many orders of
    // magnitude; the dual updates must not lose the optimum.
    for (std::uint64_t t = 0; t < 60; ++t) {
        Rng rng(31'000 + t);
        const std::size_t n = 2 + rng.below(7), d = 1 + rng.below(3);
        Matrix x(n, d);
        for (auto& v : x.data()) v = rng.cauchy();
        const auto grid = make_halton(n, d);
        const auto fast = compute_ranks(x, grid);
        const auto brute = brute_force_ranks(x, grid);
        REQUIRE_THAT(fast.cost, Catch::Matchers::WithinRel(brute.cost, 1e-9));
    }
}

TEST_CASE("reported cost equals recomputed cost", "[ot_ranks]") {
    const std::size_t n = 64;
    const Matrix x = random_matrix(n, 2, 7);
    const auto grid = make_halton(n, 2);
    const auto a = compute_ranks(x, grid);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += squared_distance(x.row(i), grid.point(a.perm[i]));
    CHECK(std::abs(a.cost - c) <= 1e-9 * static_cast<double>(n));
}

TEST_CASE("permuting sample rows permutes ranks identically", "[ot_ranks]") {
    const std::size_t n = 24;
    const Matrix x = random_matrix(n, 2, 13);
    const auto grid = make_halton(n, 2);
    const auto base = compute_ranks(x, grid);

    Rng rng(77);
    const auto pi = rng.permutation(n);
    Matrix shuffled(n, 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 2; ++j) shuffled(i, j) = x(pi[i], j);
    const auto moved = compute_ranks(shuffled, grid);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(moved.perm[i] == base.perm[pi[i]]);
}

TEST_CASE("shape and degeneracy errors", "[ot_ranks]") {
    const auto grid = make_halton(4, 2);
    CHECK_THROWS_AS(compute_ranks(random_matrix(5, 2, 1), grid), error);
    CHECK_THROWS_AS(compute_ranks(random_matrix(4, 3, 1), grid), error);
    Matrix dup = random_matrix(4, 2, 2);
    dup(3, 0) = dup(0, 0);
    dup(3, 1) = dup(0, 1);
    try {
        compute_ranks(dup, grid);
        FAIL("expected degenerate-input error");
    } catch (const error& e) {
        CHECK(e.code() == errc::degenerate);
    }
}

TEST_CASE("dense solver agrees with the monotone pairing in one dimension", "[ot_ranks]") {
    // The d = 1 path is solved by sorting; force the dense solver on the same
    // costs and require the identical optimal value.
    const std::size_t n = 200;
    Rng rng(31);
    Matrix x(n, 1);
    for (auto& v : x.data()) v = rng.cauchy();
    const auto grid = make_lattice_1d(n);
    const auto sorted = compute_ranks(x, grid);

    Matrix cost(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost(i, j) = squared_distance(x.row(i), grid.point(j));
    const auto rowsol = detail::solve_lap(cost);
    double dense = 0.0;
    for (std::size_t i = 0; i < n; ++i) dense += cost(i, rowsol[i]);
    CHECK_THAT(dense, Catch::Matchers::WithinRel(sorted.cost, 1e-12));
}

TEST_CASE("empirical ranks converge to population ranks", "[ot_ranks][slow]") {
    const auto model = KnownModel::independent_normal(2, 1);
    auto mean_rank_error = [&](std::size_t n, std::uint64_t seed) {
        auto [x, y] = model.sample(n, seed);
        const auto grid = make_halton(n, 2);
        const auto a = compute_ranks(x, grid);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto pop = model.population_rank(Margin::x, x.row(i));
            acc += euclidean_distance(grid.point(a.perm[i]), pop);
        }
        return acc / static_cast<double>(n);
    };
    const double e50 = mean_rank_error(50, 11);
    const double e200 = mean_rank_error(200, 12);
    const double e2000 = mean_rank_error(2000, 13);
    INFO("errors: " << e50 << " > " << e200 << " > " << e2000);
    CHECK(e200 < e50);
    CHECK(e2000 < e200);
    CHECK(e2000 < 0.1);
}

TEST_CASE("rank vector is distribution-free under continuous sampling", "[ot_ranks][slow]") {
    // Each grid point should be assigned to sample position 1 with frequency
    // 1/n up to binomial noise, whatever the data law.
    const std::size_t n = 8, reps = 4000;
    const auto grid = make_halton(n, 2);
    std::vector<std::size_t> hits(n, 0);
    for (std::size_t r = 0; r < reps; ++r) {
        const Matrix x = random_matrix(n, 2, 90'000 + r);
        const auto a = compute_ranks(x, grid);
        ++hits[a.perm[0]];
    }
    const double p = 1.0 / static_cast<double>(n);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    for (std::size_t g = 0; g < n; ++g) {
        const double freq = static_cast<double>(hits[g]) / static_cast<double>(reps);
        INFO("grid point " << g << " frequency " << freq);
        CHECK(std::abs(freq - p) <= 3.0 * se);
    }
}
