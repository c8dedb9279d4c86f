#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "rankdep/estimator.hpp"
#include "rankdep/geograph.hpp"
#include "rankdep/grids.hpp"
#include "rankdep/kernels.hpp"
#include "rankdep/mathutil.hpp"
#include "rankdep/rng.hpp"

namespace rankdep {

/// Everything entering the two studentizers of the numerator N_n:
/// graph functionals g1,g2,g3, kernel null moments under the continuous
/// uniform law (tilde) and over the finite rank grid (hat), and the two
/// variance formulas built from them.
struct VarianceComponents {
    std::size_t n = 0;
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;
    double a_tilde = 0.0, b_tilde = 0.0, c_tilde = 0.0;
    double a_hat = 0.0, b_hat = 0.0, c_hat = 0.0;
    double s_n_sq_asymptotic = 0.0;
    double var_exact = 0.0;
    bool nonnegative_ok = true;  // diagnostic: both variances >= 0
};

namespace detail {

struct GridMoments {
    double a_hat, b_hat, c_hat;
};

/// Grid kernel moments over distinct index tuples, via O(n^2) sum
/// decompositions: the triple sum reduces to row sums, the quadruple sum to
/// the square of the total minus overlap corrections.
template <KernelFn K>
GridMoments grid_null_moments(const Matrix& pts, const K& kernel) {
    const std::size_t n = pts.rows();
    if (n < 4) throw_config("grid moments: need n >= 4 for quadruple moments");
    std::vector<double> row_sum(n, 0.0), row_sq(n, 0.0);
    double total = 0.0, total_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto pi = pts.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = kernel(pi, pts.row(j));
            const double k2 = k * k;
            row_sum[i] += k;
            row_sum[j] += k;
            row_sq[i] += k2;
            row_sq[j] += k2;
            total += 2.0 * k;
            total_sq += 2.0 * k2;
        }
    }
    double b_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) b_sum += row_sum[i] * row_sum[i] - row_sq[i];
    const double nd = static_cast<double>(n);
    GridMoments m;
    m.a_hat = total_sq / (nd * (nd - 1.0));
    m.b_hat = b_sum / (nd * (nd - 1.0) * (nd - 2.0));
    m.c_hat = (total * total - 2.0 * total_sq - 4.0 * b_sum) /
              (nd * (nd - 1.0) * (nd - 2.0) * (nd - 3.0));
    return m;
}

inline double exact_variance_formula(std::size_t n, double g1, double g2, double g3, double a,
                                     double b, double c) {
    const double nd = static_cast<double>(n);
    return (g1 + g3 - 2.0 / (nd - 1.0)) * (a - 2.0 * b + c) + (g2 - 1.0) * (b - c);
}

}  // namespace detail

/// Exact finite-sample variance of N_n under independence, from precomputed
/// grid moments and graph functionals.
inline double exact_variance_of_Nn(const VarianceComponents& vc, std::size_t n) {
    if (n < 2) throw_config("exact_variance_of_Nn: n must be at least 2");
    return detail::exact_variance_formula(n, vc.g1, vc.g2, vc.g3, vc.a_hat, vc.b_hat, vc.c_hat);
}

/// Asymptotic CLT variance of N_n, from the continuous-uniform kernel moments.
inline double s_n_sq_asymptotic(const VarianceComponents& vc, std::size_t n) {
    const double nd = static_cast<double>(n);
    const double g1 = vc.g1, g2 = vc.g2, g3 = vc.g3;
    return vc.a_tilde * (g1 + g3 - 2.0 / (nd - 1.0)) +
           vc.b_tilde * (g2 - 2.0 * g1 - 2.0 * g3 - (nd - 5.0) / (nd - 1.0)) +
           vc.c_tilde * (g1 + g3 - g2 + (nd - 3.0) / (nd - 1.0));
}

/// Assembles both studentizers for a graph built on a rank grid of the same
/// size as grid_y. `tilde` may carry precomputed continuous-uniform moments;
/// otherwise they are computed here (closed form when available, quasi-MC
/// else).
template <KernelFn K>
VarianceComponents variance_components(const ReferenceGrid& grid_y, const GeometricGraph& graph,
                                       const K& kernel, const NullMoments* tilde = nullptr) {
    if (graph.order() != grid_y.size())
        throw_config("variance_components: graph order must match grid size");
    if (grid_y.size() < 4) throw_config("variance_components: need n >= 4");

    VarianceComponents vc;
    vc.n = grid_y.size();
    const GraphStats gs = graph_stats(graph);
    vc.g1 = gs.g1;
    vc.g2 = gs.g2;
    vc.g3 = gs.g3;

    const auto gm = detail::grid_null_moments(grid_y.points(), kernel);
    vc.a_hat = gm.a_hat;
    vc.b_hat = gm.b_hat;
    vc.c_hat = gm.c_hat;

    NullMoments nm;
    if (tilde) {
        nm = *tilde;
    } else if constexpr (std::is_same_v<K, Kernel>) {
        nm = (kernel.kind == KernelKind::energy && grid_y.dim() == 1)
                 ? null_moments(kernel, 1, MomentMethod::closed_form)
                 : null_moments(kernel, grid_y.dim(), MomentMethod::quasi_mc);
    } else {
        // Opaque kernel callable: fall back to the grid moments, which share
        // the same limit.
        nm = NullMoments{gm.a_hat, gm.b_hat, gm.c_hat, 0.0, 0.0};
    }
    vc.a_tilde = nm.a_tilde;
    vc.b_tilde = nm.b_tilde;
    vc.c_tilde = nm.c_tilde;

    vc.var_exact = exact_variance_of_Nn(vc, vc.n);
    vc.s_n_sq_asymptotic = s_n_sq_asymptotic(vc, vc.n);
    vc.nonnegative_ok = vc.var_exact >= 0.0 && vc.s_n_sq_asymptotic >= 0.0;
    return vc;
}

/// Identifies a null table: the full configuration whose pivotal null law it
/// samples.
struct TableKey {
    std::size_t n = 0;
    GridSpec grid_x, grid_y;
    GraphSpec graph;
    Kernel kernel;

    std::string canonical() const {
        return "{n:" + std::to_string(n) + ",grid_x:" + grid_x.canonical() +
               ",grid_y:" + grid_y.canonical() + ",graph:" + graph.canonical() +
               ",kernel:" + kernel.canonical() + "}";
    }
    bool operator==(const TableKey&) const = default;
};

inline TableKey make_table_key(GridSpec grid_x, GridSpec grid_y, const GraphSpec& graph,
                               const Kernel& kernel) {
    if (grid_x.n != grid_y.n) throw_config("table key: grid sizes differ");
    // the seed field only identifies iid grids; zero it elsewhere so that
    // equivalent configurations hash identically
    if (grid_x.scheme != GridScheme::iid_uniform) grid_x.seed = 0;
    if (grid_y.scheme != GridScheme::iid_uniform) grid_y.seed = 0;
    return {grid_x.n, grid_x, grid_y, resolve_graph_spec(graph, grid_x.n), kernel};
}

/// Monte-Carlo table of the pivotal null distribution of eta_hat for one
/// configuration. Statistics are sorted ascending; N_n values are recovered
/// as sqrt(n) * d_n * eta since d_n is constant under the null.
struct NullTable {
    TableKey key;
    std::uint64_t seed = 0;
    std::size_t replicates = 0;
    double d_n = 0.0;
    std::vector<double> stats;  // sorted eta_hat replicates

    double n_scale() const { return std::sqrt(static_cast<double>(key.n)) * d_n; }

    /// Right-tail Monte-Carlo p-value with the add-one correction; exact for
    /// any continuous data law by pivotality.
    double p_value_right(double eta_observed) const {
        const auto it = std::lower_bound(stats.begin(), stats.end(), eta_observed);
        const std::size_t count_ge = static_cast<std::size_t>(stats.end() - it);
        return static_cast<double>(1 + count_ge) / static_cast<double>(replicates + 1);
    }

    /// Linearly interpolated quantile of the stored statistics.
    double eta_quantile(double q) const {
        if (!(q >= 0.0 && q <= 1.0)) throw_config("eta_quantile: q must be in [0,1]");
        const double pos = q * static_cast<double>(stats.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= stats.size()) return stats.back();
        const double frac = pos - static_cast<double>(lo);
        return stats[lo] * (1.0 - frac) + stats[lo + 1] * frac;
    }
};

/// Simulates the pivotal null law: the rank vector pairing under independence
/// is a uniformly random permutation matching grid_x points (fixed order)
/// with permuted grid_y points, so each replicate only reshuffles the kernel
/// arguments along a fixed graph. Deterministic under (seed, replicate index)
/// regardless of thread count.
inline NullTable build_null_table(const TableKey& key, std::size_t replicates, std::uint64_t seed,
                                  unsigned threads = 0) {
    if (replicates < 1) throw_config("build_null_table: need at least 1 replicate");
    const ReferenceGrid gx = make_grid(key.grid_x);
    const ReferenceGrid gy = make_grid(key.grid_y);
    if (gx.size() != key.n || gy.size() != key.n)
        throw_config("build_null_table: key n does not match grid sizes");
    const GeometricGraph graph = build_graph(gx.points(), resolve_graph_spec(key.graph, key.n));

    const auto pm = detail::pair_means(gy.points(), key.kernel);
    const double d_n = detail::denominator_or_throw(pm.diag_mean, pm.f_n);
    const std::size_t n = key.n;

    NullTable table;
    table.key = key;
    table.key.graph = resolve_graph_spec(key.graph, key.n);
    table.seed = seed;
    table.replicates = replicates;
    table.d_n = d_n;
    table.stats.assign(replicates, 0.0);

    const auto& edges = graph.edges();
    const auto& gyp = gy.points();
    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            Rng rng = Rng::for_replicate(seed, r);
            const auto pi = rng.permutation(n);
            double acc = 0.0;
            for (const auto& e : edges) {
                const double w = key.kernel(gyp.row(pi[e.a]), gyp.row(pi[e.b]));
                acc += w / static_cast<double>(graph.degree(e.a)) +
                       w / static_cast<double>(graph.degree(e.b));
            }
            const double numerator = acc / static_cast<double>(n);
            table.stats[r] = (numerator - pm.f_n) / d_n;
        }
    };

    unsigned nthreads = threads ? threads : std::thread::hardware_concurrency();
    if (nthreads <= 1 || replicates < 256) {
        worker(0, replicates);
    } else {
        nthreads = std::min<std::size_t>(nthreads, replicates);
        std::vector<std::thread> pool;
        const std::size_t chunk = (replicates + nthreads - 1) / nthreads;
        for (unsigned t = 0; t < nthreads; ++t) {
            const std::size_t lo = t * chunk, hi = std::min(replicates, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    std::sort(table.stats.begin(), table.stats.end());
    return table;
}

struct TestOptions {
    double alpha = 0.05;
    std::size_t replicates = 10'000;
    std::uint64_t seed = 0;
    const NullTable* table = nullptr;     // use a prebuilt table (key must match)
    const NullMoments* tilde = nullptr;   // precomputed continuous-uniform moments
    unsigned threads = 0;
};

/// Full test output: the estimate, both p-values, the variance components and
/// the graph regularity diagnostics.
struct TestResult {
    EstimateResult estimate;
    double alpha = 0.05;
    double p_exact = 1.0;
    double z_stat = 0.0;
    double p_clt = 1.0;
    bool reject = false;
    VarianceComponents variance;
    GraphStats diagnostics;
    double max_degree_over_log_n = 0.0;
    std::size_t table_replicates = 0;
    std::uint64_t table_seed = 0;
    bool table_cache_hit = false;
};

/// Distribution-free independence test. The exact p-value comes from the
/// pivotal null table (right tail); the CLT p-value studentizes N_n by the
/// exact finite-sample variance.
inline TestResult test_independence(const Matrix& x, const Matrix& y, const ReferenceGrid& grid_x,
                                    const ReferenceGrid& grid_y, const GraphSpec& graph_spec,
                                    const Kernel& kernel, const TestOptions& opt = {}) {
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw_config("test_independence: alpha must be in (0,1)");

    TestResult out;
    out.alpha = opt.alpha;
    out.estimate = eta_hat_rank(x, y, grid_x, grid_y, graph_spec, kernel);

    const TableKey key = make_table_key(grid_x.spec(), grid_y.spec(), graph_spec, kernel);
    NullTable built;
    const NullTable* table = opt.table;
    if (table) {
        if (!(table->key == key))
            throw_config("test_independence: null table key does not match run configuration\n  table: " +
                         table->key.canonical() + "\n  run:   " + key.canonical());
        if (table->replicates < 1000)
            throw_config("test_independence: null table has fewer than 1000 replicates");
    } else {
        if (opt.replicates < 1000)
            throw_config("test_independence: at least 1000 replicates required for p-values");
        built = build_null_table(key, opt.replicates, opt.seed, opt.threads);
        table = &built;
    }
    out.table_replicates = table->replicates;
    out.table_seed = table->seed;
    out.p_exact = table->p_value_right(out.estimate.eta_hat);
    out.reject = out.p_exact <= opt.alpha;

    // Variance and diagnostics are deterministic functions of the grids and
    // the graph functional; evaluate them on the grid point set directly.
    const GeometricGraph grid_graph = build_graph(grid_x.points(), key.graph);
    out.variance = variance_components(grid_y, grid_graph, kernel, opt.tilde);
    out.diagnostics = graph_stats(grid_graph);
    out.max_degree_over_log_n =
        static_cast<double>(out.diagnostics.max_degree) / std::log(static_cast<double>(key.n));

    out.z_stat = out.estimate.n_n / std::sqrt(out.variance.var_exact);
    out.p_clt = 1.0 - normal_cdf(out.z_stat);
    return out;
}

}  // namespace rankdep
