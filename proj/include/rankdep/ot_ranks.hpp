#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "rankdep/core.hpp"
#include "rankdep/grids.hpp"

namespace rankdep {

/// Optimal matching of sample points to reference grid points under total
/// squared Euclidean cost. perm[i] is the grid index assigned to sample row i;
/// the rank vector of row i is grid.point(perm[i]).
struct RankAssignment {
    std::vector<std::uint32_t> perm;
    double cost = 0.0;
    GridSpec grid;
};

namespace detail {

/// Dense linear assignment by Jonker-Volgenant shortest augmenting paths:
/// column reduction, reduction transfer, one augmenting-row-reduction sweep,
/// then Dijkstra-style augmentation for the remaining free rows. O(n^3) worst
/// case, far faster on geometric instances.
inline std::vector<int> solve_lap(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<int> rowsol(n, -1), colsol(n, -1);
    if (n == 1) {
        rowsol[0] = 0;
        return rowsol;
    }
    std::vector<double> v(n, 0.0);

    // Column reduction, reverse column order.
    std::vector<int> matches(n, 0);
    for (int j = n - 1; j >= 0; --j) {
        double minv = cost(0, j);
        int imin = 0;
        for (int i = 1; i < n; ++i)
            if (cost(i, j) < minv) {
                minv = cost(i, j);
                imin = i;
            }
        v[j] = minv;
        if (++matches[imin] == 1) {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else if (v[j] < v[rowsol[imin]]) {
            const int j1 = rowsol[imin];
            rowsol[imin] = j;
            colsol[j] = imin;
            colsol[j1] = -1;
        } else {
            colsol[j] = -1;
        }
    }

    // Reduction transfer from rows assigned exactly once.
    std::vector<int> free_rows(n);
    int numfree = 0;
    for (int i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            free_rows[numfree++] = i;
        } else if (matches[i] == 1) {
            const int j1 = rowsol[i];
            double minv = inf;
            for (int j = 0; j < n; ++j)
                if (j != j1) minv = std::min(minv, cost(i, j) - v[j]);
            v[j1] -= minv;
        }
    }

    // One augmenting-row-reduction sweep. On real-valued geometric costs the
    // classic repeated sweeps degenerate into long chains of tiny dual
    // updates, so rows are never requeued here; ties go straight to the
    // augmentation phase.
    {
        int k = 0;
        const int prvnumfree = numfree;
        numfree = 0;
        while (k < prvnumfree) {
            const int i = free_rows[k];
            ++k;
            double umin = cost(i, 0) - v[0], usubmin = inf;
            int j1 = 0;
            for (int j = 1; j < n; ++j) {
                const double h = cost(i, j) - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j1 = j;
                    }
                }
            }
            const int i0 = colsol[j1];
            if (umin < usubmin && i0 < 0) {
                v[j1] -= usubmin - umin;
                rowsol[i] = j1;
                colsol[j1] = i;
            } else {
                free_rows[numfree++] = i;
            }
        }
    }

    // Shortest augmenting path for each remaining free row.
    std::vector<double> d(n);
    std::vector<int> pred(n), collist(n);
    for (int f = 0; f < numfree; ++f) {
        const int freerow = free_rows[f];
        for (int j = 0; j < n; ++j) {
            d[j] = cost(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        int low = 0, up = 0, last = 0, endofpath = -1;
        double minv = 0.0;
        bool unassigned_found = false;
        do {
            if (up == low) {
                last = low - 1;
                minv = d[collist[up++]];
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double h = d[j];
                    if (h <= minv) {
                        if (h < minv) {
                            up = low;
                            minv = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (int k = low; k < up; ++k)
                    if (colsol[collist[k]] < 0) {
                        endofpath = collist[k];
                        unassigned_found = true;
                        break;
                    }
            }
            if (!unassigned_found) {
                const int j1 = collist[low];
                ++low;
                const int i = colsol[j1];
                const double h = cost(i, j1) - v[j1] - minv;
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double v2 = cost(i, j) - v[j] - h;
                    if (v2 < d[j]) {
                        pred[j] = i;
                        if (v2 == minv) {
                            if (colsol[j] < 0) {
                                endofpath = j;
                                unassigned_found = true;
                                break;
                            }
                            collist[k] = collist[up];
                            collist[up++] = j;
                        }
                        d[j] = v2;
                    }
                }
            }
        } while (!unassigned_found);

        for (int k = 0; k <= last; ++k) {
            const int j1 = collist[k];
            v[j1] += d[j1] - minv;
        }
        int i;
        do {
            i = pred[endofpath];
            colsol[endofpath] = i;
            const int j1 = endofpath;
            endofpath = rowsol[i];
            rowsol[i] = j1;
        } while (i != freerow);
    }
    return rowsol;
}

/// Indices 0..n-1 ordered by the values they point at.
inline std::vector<std::uint32_t> argsort(const Matrix& col) {
    std::vector<std::uint32_t> order(col.rows());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return col(a, 0) < col(b, 0); });
    return order;
}

inline double assignment_cost(const Matrix& sample, const ReferenceGrid& grid,
                              const std::vector<std::uint32_t>& perm) {
    double total = 0.0;
    for (std::size_t i = 0; i < sample.rows(); ++i)
        total += squared_distance(sample.row(i), grid.point(perm[i]));
    return total;
}

}  // namespace detail

/// Exact empirical rank map: solves the sample-to-grid assignment problem
/// under squared Euclidean cost. For d = 1 the optimum is the monotone
/// (sorted-to-sorted) pairing; for d >= 2 the dense solver runs.
inline RankAssignment compute_ranks(const Matrix& sample, const ReferenceGrid& grid) {
    const std::size_t n = sample.rows();
    if (n != grid.size())
        throw_config("compute_ranks: sample rows (" + std::to_string(n) +
                     ") must equal grid size (" + std::to_string(grid.size()) + ")");
    if (sample.cols() != grid.dim()) throw_config("compute_ranks: dimension mismatch");
    require_distinct_rows(sample, "compute_ranks");

    RankAssignment out;
    out.grid = grid.spec();
    out.perm.resize(n);
    if (sample.cols() == 1) {
        const auto sample_order = detail::argsort(sample);
        const auto grid_order = detail::argsort(grid.points());
        for (std::size_t r = 0; r < n; ++r) out.perm[sample_order[r]] = grid_order[r];
    } else {
        Matrix cost(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto xi = sample.row(i);
            for (std::size_t j = 0; j < n; ++j) cost(i, j) = squared_distance(xi, grid.point(j));
        }
        const auto rowsol = detail::solve_lap(cost);
        for (std::size_t i = 0; i < n; ++i) out.perm[i] = static_cast<std::uint32_t>(rowsol[i]);
    }
    out.cost = detail::assignment_cost(sample, grid, out.perm);
    return out;
}

/// Exhaustive assignment oracle, n <= 10.
inline RankAssignment brute_force_ranks(const Matrix& sample, const ReferenceGrid& grid) {
    const std::size_t n = sample.rows();
    if (n > 10) throw_config("brute_force_ranks: n > 10 would enumerate " + std::to_string(n) + "!");
    if (n != grid.size() || sample.cols() != grid.dim())
        throw_config("brute_force_ranks: shape mismatch");
    require_distinct_rows(sample, "brute_force_ranks");

    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    RankAssignment best;
    best.grid = grid.spec();
    best.cost = std::numeric_limits<double>::infinity();
    do {
        const double c = detail::assignment_cost(sample, grid, perm);
        if (c < best.cost) {
            best.cost = c;
            best.perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Materializes the rank vectors: row i is the grid point assigned to sample row i.
inline Matrix rank_points(const ReferenceGrid& grid, const RankAssignment& assignment) {
    Matrix out(assignment.perm.size(), grid.dim());
    for (std::size_t i = 0; i < assignment.perm.size(); ++i) {
        const auto p = grid.point(assignment.perm[i]);
        for (std::size_t j = 0; j < grid.dim(); ++j) out(i, j) = p[j];
    }
    return out;
}

}  // namespace rankdep
