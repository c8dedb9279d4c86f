#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rankdep/core.hpp"
#include "rankdep/geograph.hpp"
#include "rankdep/grids.hpp"
#include "rankdep/kernels.hpp"
#include "rankdep/ot_ranks.hpp"

namespace rankdep {

/// One evaluation of the graph association estimator, with every intermediate
/// the inference layer needs. eta_hat = (numerator_core - f_n) / d_n,
/// n_n = sqrt(n) * (numerator_core - f_n), d_n = diag_mean - f_n.
struct EstimateResult {
    double eta_hat = 0.0;
    double numerator_core = 0.0;  // (1/n) sum_i d_i^{-1} sum_{j ~ i} K(z_i, z_j)
    double f_n = 0.0;             // mean of K over distinct ordered pairs
    double diag_mean = 0.0;       // (1/n) sum_i K(z_i, z_i)
    double n_n = 0.0;
    double d_n = 0.0;
    bool rank_based = false;
    std::size_t n = 0;
    GraphSpec graph_spec;
    Kernel kernel;
    GridSpec grid_x, grid_y;              // rank-based runs only
    std::vector<std::uint32_t> perm_x, perm_y;  // assignment permutations, rank-based runs
};

namespace detail {

template <KernelFn K>
double graph_numerator(const GeometricGraph& g, const Matrix& y, const K& kernel) {
    double acc = 0.0;
    for (const auto& e : g.edges()) {
        const double w = kernel(y.row(e.a), y.row(e.b));
        acc += w / static_cast<double>(g.degree(e.a)) + w / static_cast<double>(g.degree(e.b));
    }
    return acc / static_cast<double>(g.order());
}

struct PairMeans {
    double f_n;
    double diag_mean;
};

template <KernelFn K>
PairMeans pair_means(const Matrix& y, const K& kernel) {
    const std::size_t n = y.rows();
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diag += kernel(y.row(i), y.row(i));
        for (std::size_t j = i + 1; j < n; ++j) off += kernel(y.row(i), y.row(j));
    }
    const double nd = static_cast<double>(n);
    return {2.0 * off / (nd * (nd - 1.0)), diag / nd};
}

inline double denominator_or_throw(double diag_mean, double f_n) {
    const double d_n = diag_mean - f_n;
    const double scale = std::max({1.0, std::abs(diag_mean), std::abs(f_n)});
    if (std::abs(d_n) <= 1e-12 * scale)
        throw_degenerate("estimator: degenerate denominator (constant kernel values)");
    return d_n;
}

}  // namespace detail

/// Graph estimator on the raw observations.
template <KernelFn K>
EstimateResult eta_hat_plain(const Matrix& x, const Matrix& y, const GraphSpec& graph_spec,
                             const K& kernel) {
    const std::size_t n = x.rows();
    if (n != y.rows()) throw_config("eta_hat_plain: x and y row counts differ");
    if (n < 3) throw_config("eta_hat_plain: need at least 3 observations");

    const GraphSpec resolved = resolve_graph_spec(graph_spec, n);
    const GeometricGraph g = build_graph(x, resolved);

    EstimateResult r;
    r.n = n;
    r.graph_spec = resolved;
    r.rank_based = false;
    r.numerator_core = detail::graph_numerator(g, y, kernel);
    const auto pm = detail::pair_means(y, kernel);
    r.f_n = pm.f_n;
    r.diag_mean = pm.diag_mean;
    r.d_n = detail::denominator_or_throw(r.diag_mean, r.f_n);
    r.n_n = std::sqrt(static_cast<double>(n)) * (r.numerator_core - r.f_n);
    r.eta_hat = (r.numerator_core - r.f_n) / r.d_n;
    return r;
}

inline EstimateResult eta_hat_plain(const Matrix& x, const Matrix& y, const GraphSpec& graph_spec,
                                    const Kernel& kernel) {
    auto r = eta_hat_plain<Kernel>(x, y, graph_spec, kernel);
    r.kernel = kernel;
    return r;
}

/// Rank-based estimator: graph on the OT ranks of x, kernel on the OT ranks
/// of y. f_n and diag_mean are evaluated on the grid point set directly (they
/// are permutation-invariant, hence deterministic given the grid and kernel).
template <KernelFn K>
EstimateResult eta_hat_rank(const Matrix& x, const Matrix& y, const ReferenceGrid& grid_x,
                            const ReferenceGrid& grid_y, const GraphSpec& graph_spec,
                            const K& kernel) {
    const std::size_t n = x.rows();
    if (n != y.rows()) throw_config("eta_hat_rank: x and y row counts differ");
    if (n < 3) throw_config("eta_hat_rank: need at least 3 observations");

    const RankAssignment ax = compute_ranks(x, grid_x);
    const RankAssignment ay = compute_ranks(y, grid_y);
    const Matrix rx = rank_points(grid_x, ax);
    const Matrix ry = rank_points(grid_y, ay);

    const GraphSpec resolved = resolve_graph_spec(graph_spec, n);
    const GeometricGraph g = build_graph(rx, resolved);

    EstimateResult r;
    r.n = n;
    r.graph_spec = resolved;
    r.rank_based = true;
    r.grid_x = grid_x.spec();
    r.grid_y = grid_y.spec();
    r.perm_x = ax.perm;
    r.perm_y = ay.perm;
    r.numerator_core = detail::graph_numerator(g, ry, kernel);
    const auto pm = detail::pair_means(grid_y.points(), kernel);
    r.f_n = pm.f_n;
    r.diag_mean = pm.diag_mean;
    r.d_n = detail::denominator_or_throw(r.diag_mean, r.f_n);
    r.n_n = std::sqrt(static_cast<double>(n)) * (r.numerator_core - r.f_n);
    r.eta_hat = (r.numerator_core - r.f_n) / r.d_n;
    return r;
}

inline EstimateResult eta_hat_rank(const Matrix& x, const Matrix& y, const ReferenceGrid& grid_x,
                                   const ReferenceGrid& grid_y, const GraphSpec& graph_spec,
                                   const Kernel& kernel) {
    auto r = eta_hat_rank<Kernel>(x, y, grid_x, grid_y, graph_spec, kernel);
    r.kernel = kernel;
    return r;
}

}  // namespace rankdep
