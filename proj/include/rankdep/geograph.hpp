#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rankdep/core.hpp"

namespace rankdep {

struct GraphSpec {
    enum class Type { knn, mst };
    Type type = Type::knn;
    std::size_t k = 0;  // knn only; 0 means "default" max(1, floor(log n))

    std::string canonical() const {
        if (type == Type::mst) return "{type:mst}";
        return "{type:knn,k:" + std::to_string(k) + "}";
    }
    bool operator==(const GraphSpec&) const = default;
};

inline std::size_t default_knn_k(std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log(static_cast<double>(n)))));
}

/// Fills in the default k = max(1, floor(log n)) for knn specs that left it 0.
inline GraphSpec resolve_graph_spec(GraphSpec spec, std::size_t n) {
    if (spec.type == GraphSpec::Type::knn && spec.k == 0) spec.k = default_knn_k(n);
    return spec;
}

/// Simple undirected graph on point indices with Euclidean edge lengths.
/// No self loops, no multi-edges, no isolated vertices.
class GeometricGraph {
public:
    struct Edge {
        std::uint32_t a, b;
        double length;
    };

    GeometricGraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
        adjacency_.assign(n_, {});
        for (const auto& e : edges_) {
            if (e.a >= n_ || e.b >= n_) throw_config("GeometricGraph: vertex id out of range");
            if (e.a == e.b) throw_config("GeometricGraph: self loop");
            adjacency_[e.a].push_back(e.b);
            adjacency_[e.b].push_back(e.a);
        }
        degrees_.assign(n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            auto& adj = adjacency_[i];
            std::sort(adj.begin(), adj.end());
            if (std::adjacent_find(adj.begin(), adj.end()) != adj.end())
                throw_config("GeometricGraph: multi-edge");
            degrees_[i] = adj.size();
            if (degrees_[i] == 0)
                throw_config("GeometricGraph: isolated vertex " + std::to_string(i));
        }
    }

    std::size_t order() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::uint32_t>& neighbors(std::size_t i) const { return adjacency_[i]; }
    std::size_t degree(std::size_t i) const { return degrees_[i]; }
    const std::vector<std::size_t>& degrees() const noexcept { return degrees_; }

    std::size_t min_degree() const { return *std::min_element(degrees_.begin(), degrees_.end()); }
    std::size_t max_degree() const { return *std::max_element(degrees_.begin(), degrees_.end()); }

    bool has_edge(std::size_t i, std::size_t j) const {
        const auto& adj = adjacency_[i];
        return std::binary_search(adj.begin(), adj.end(), static_cast<std::uint32_t>(j));
    }

private:
    std::size_t n_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::uint32_t>> adjacency_;
    std::vector<std::size_t> degrees_;
};

namespace detail {

/// Strict lexicographic order on point coordinates. Points are pairwise
/// distinct wherever graphs are built, so this is a total order and keeps
/// every tie-break a function of the point set alone (never of vertex
/// labels); that is what makes graph functionals relabeling invariant and
/// the permutation null simulation exact on tie-heavy grids like lattices.
inline bool point_less(const Matrix& pts, std::size_t a, std::size_t b) {
    const auto ra = pts.row(a), rb = pts.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
}

}  // namespace detail

/// Symmetrized k-nearest-neighbor graph: (i,j) is an edge iff j is among the k
/// nearest of i or vice versa. Distance ties break toward the candidate with
/// lexicographically smaller coordinates.
inline GeometricGraph knn_graph(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    if (n < 2) throw_config("knn_graph: need at least 2 points");
    if (k < 1 || k > n - 1) throw_config("knn_graph: k must be in [1, n-1]");
    require_distinct_rows(points, "knn_graph");

    std::vector<std::vector<std::uint32_t>> nearest(n);
    std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
    auto closer = [&](const std::pair<double, std::uint32_t>& a,
                      const std::pair<double, std::uint32_t>& b) {
        if (a.first != b.first) return a.first < b.first;
        return detail::point_less(points, a.second, b.second);
    };
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) cand[m++] = {squared_distance(points.row(i), points.row(j)),
                                     static_cast<std::uint32_t>(j)};
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), closer);
        nearest[i].reserve(k);
        for (std::size_t r = 0; r < k; ++r) nearest[i].push_back(cand[r].second);
    }

    std::vector<GeometricGraph::Edge> edges;
    edges.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::uint32_t j : nearest[i]) {
            const bool mutual = std::find(nearest[j].begin(), nearest[j].end(),
                                          static_cast<std::uint32_t>(i)) != nearest[j].end();
            if (j > i || !mutual)  // emit each undirected edge once
                edges.push_back({static_cast<std::uint32_t>(std::min<std::size_t>(i, j)),
                                 static_cast<std::uint32_t>(std::max<std::size_t>(i, j)),
                                 euclidean_distance(points.row(i), points.row(j))});
        }
    return GeometricGraph(n, std::move(edges));
}

/// Euclidean minimum spanning tree by Prim's algorithm, O(n^2). Every
/// selection ties on coordinates, so the edge set is a function of the point
/// set alone.
inline GeometricGraph mst_graph(const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 2) throw_config("mst_graph: need at least 2 points");
    require_distinct_rows(points, "mst_graph");

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best(n, inf);
    std::vector<std::uint32_t> parent(n, 0);
    std::vector<bool> in_tree(n, false);
    std::size_t start = 0;
    for (std::size_t v = 1; v < n; ++v)
        if (detail::point_less(points, v, start)) start = v;
    best[start] = 0.0;
    std::vector<GeometricGraph::Edge> edges;
    edges.reserve(n - 1);
    for (std::size_t it = 0; it < n; ++it) {
        std::size_t u = n;
        double b = inf;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v] || best[v] > b) continue;
            if (best[v] < b || u == n || detail::point_less(points, v, u)) {
                b = best[v];
                u = v;
            }
        }
        in_tree[u] = true;
        if (it > 0)
            edges.push_back({static_cast<std::uint32_t>(std::min<std::size_t>(parent[u], u)),
                             static_cast<std::uint32_t>(std::max<std::size_t>(parent[u], u)),
                             std::sqrt(best[u])});
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const double d = squared_distance(points.row(u), points.row(v));
            if (d < best[v] ||
                (d == best[v] && detail::point_less(points, u, parent[v]))) {
                best[v] = d;
                parent[v] = static_cast<std::uint32_t>(u);
            }
        }
    }
    return GeometricGraph(n, std::move(edges));
}

inline GeometricGraph build_graph(const Matrix& points, const GraphSpec& spec) {
    if (spec.type == GraphSpec::Type::mst) return mst_graph(points);
    const std::size_t k = spec.k == 0 ? default_knn_k(points.rows()) : spec.k;
    return knn_graph(points, k);
}

/// Number of common neighbors of i and j (i = j allowed; then it is deg(i)).
inline std::size_t common_neighbors(const GeometricGraph& g, std::size_t i, std::size_t j) {
    if (i >= g.order() || j >= g.order()) throw_config("common_neighbors: vertex out of range");
    const auto& a = g.neighbors(i);
    const auto& b = g.neighbors(j);
    std::size_t count = 0, p = 0, q = 0;
    while (p < a.size() && q < b.size()) {
        if (a[p] < b[q])
            ++p;
        else if (a[p] > b[q])
            ++q;
        else {
            ++count;
            ++p;
            ++q;
        }
    }
    return count;
}

/// Graph functionals entering the estimator variance and the regularity
/// diagnostics. g2 sums T(i,j)/(d_i d_j) over all ordered pairs including
/// i = j; g3 and holder_sum count each undirected edge in both orientations.
struct GraphStats {
    double g1 = 0.0;
    double g2 = 0.0;
    double g3 = 0.0;
    double degree_ratio = 0.0;
    double holder_sum = 0.0;
    double beta = 1.0;
    std::size_t min_degree = 0;
    std::size_t max_degree = 0;
};

inline GraphStats graph_stats(const GeometricGraph& g, double beta = 1.0) {
    if (!(beta > 0.0 && beta <= 1.0)) throw_config("graph_stats: beta must be in (0,1]");
    const std::size_t n = g.order();
    GraphStats s;
    s.beta = beta;
    s.min_degree = g.min_degree();
    s.max_degree = g.max_degree();
    s.degree_ratio = static_cast<double>(s.max_degree) / static_cast<double>(s.min_degree);

    double g1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) g1 += 1.0 / static_cast<double>(g.degree(i));
    s.g1 = g1 / static_cast<double>(n);

    // g2 = (1/n) sum_k (sum_{i ~ k} 1/d_i)^2, the common-neighbor double sum.
    double g2 = 0.0;
    for (std::size_t kv = 0; kv < n; ++kv) {
        double sk = 0.0;
        for (std::uint32_t i : g.neighbors(kv)) sk += 1.0 / static_cast<double>(g.degree(i));
        g2 += sk * sk;
    }
    s.g2 = g2 / static_cast<double>(n);

    double g3 = 0.0, holder = 0.0;
    for (const auto& e : g.edges()) {
        g3 += 2.0 / (static_cast<double>(g.degree(e.a)) * static_cast<double>(g.degree(e.b)));
        holder += 2.0 * std::pow(e.length, beta);
    }
    s.g3 = g3 / static_cast<double>(n);
    s.holder_sum = holder / (static_cast<double>(n) * static_cast<double>(s.min_degree));
    return s;
}

}  // namespace rankdep
