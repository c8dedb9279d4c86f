#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "rankdep/core.hpp"
#include "rankdep/grids.hpp"
#include "rankdep/mathutil.hpp"

namespace rankdep {

template <typename F>
concept KernelFn = requires(F f, std::span<const double> a, std::span<const double> b) {
    { f(a, b) } -> std::convertible_to<double>;
};

enum class KernelKind { energy, gaussian, laplace };

inline const char* to_string(KernelKind k) {
    switch (k) {
        case KernelKind::energy: return "energy";
        case KernelKind::gaussian: return "gaussian";
        case KernelKind::laplace: return "laplace";
    }
    return "?";
}

constexpr bool is_characteristic(KernelKind) { return true; }

/// Symmetric nonnegative-definite kernel on rank space.
///   energy:   |y1| + |y2| - |y1 - y2|   (Euclidean norms)
///   gaussian: exp(-|y1 - y2|^2 / (2 sigma^2))
///   laplace:  exp(-|y1 - y2| / sigma)
struct Kernel {
    KernelKind kind = KernelKind::energy;
    double bandwidth = 1.0;

    static Kernel energy() { return {KernelKind::energy, 0.0}; }
    static Kernel gaussian(double sigma) {
        if (!(sigma > 0.0)) throw_config("gaussian kernel: bandwidth must be positive");
        return {KernelKind::gaussian, sigma};
    }
    static Kernel laplace(double sigma) {
        if (!(sigma > 0.0)) throw_config("laplace kernel: bandwidth must be positive");
        return {KernelKind::laplace, sigma};
    }

    double operator()(std::span<const double> y1, std::span<const double> y2) const {
        if (y1.size() != y2.size()) throw_config("kernel: dimension mismatch");
        switch (kind) {
            case KernelKind::energy:
                return euclidean_norm(y1) + euclidean_norm(y2) - euclidean_distance(y1, y2);
            case KernelKind::gaussian: {
                const double d2 = squared_distance(y1, y2);
                return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
            }
            case KernelKind::laplace:
                return std::exp(-euclidean_distance(y1, y2) / bandwidth);
        }
        return 0.0;
    }

    std::string canonical() const {
        if (kind == KernelKind::energy) return "{id:energy}";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "{id:%s,bandwidth:%.17g}", to_string(kind), bandwidth);
        return buf;
    }
    bool operator==(const Kernel&) const = default;
};

inline double eval(const Kernel& k, std::span<const double> y1, std::span<const double> y2) {
    return k(y1, y2);
}

/// Median pairwise distance over the rows of `points`, the usual bandwidth
/// heuristic for Gaussian kernels on bounded rank space.
inline double median_heuristic_bandwidth(const Matrix& points) {
    const std::size_t n = points.rows();
    if (n < 2) throw_config("median_heuristic_bandwidth: need at least 2 points");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dists.push_back(euclidean_distance(points.row(i), points.row(j)));
    const double m = median_of(std::move(dists));
    if (!(m > 0.0)) throw_degenerate("median_heuristic_bandwidth: zero median distance");
    return m;
}

/// Moments of a kernel under i.i.d. Uniform[0,1]^d inputs:
///   a_tilde = E K^2(U1,U2), b_tilde = E K(U1,U2) K(U1,U3),
///   c_tilde = (E K(U1,U2))^2, diag_mean = E K(U,U), offdiag_mean = E K(U1,U2).
struct NullMoments {
    double a_tilde = 0.0;
    double b_tilde = 0.0;
    double c_tilde = 0.0;
    double diag_mean = 0.0;
    double offdiag_mean = 0.0;

    /// Moments of the rescaled kernel c*K.
    NullMoments scaled(double c) const {
        return {a_tilde * c * c, b_tilde * c * c, c_tilde * c * c, diag_mean * c,
                offdiag_mean * c};
    }
};

enum class MomentMethod { closed_form, quasi_mc };

/// Null moment constants for a kernel on [0,1]^d. Closed forms exist for the
/// energy kernel with d = 1 (where K = 2 min(u,v)); everything else goes
/// through a Halton quadrature of size `budget` in 3d dimensions.
inline NullMoments null_moments(const Kernel& kernel, std::size_t d,
                                MomentMethod method = MomentMethod::quasi_mc,
                                std::size_t budget = 1'000'000) {
    if (d == 0) throw_config("null_moments: d must be positive");
    if (method == MomentMethod::closed_form) {
        if (kernel.kind != KernelKind::energy || d != 1)
            throw_config("null_moments: closed form available only for the energy kernel with d=1");
        // K(u,v) = 2 min(u,v) on [0,1]: moments of min are 1/6, 2/15, 1/9, 1/2, 1/3.
        return NullMoments{1.0 / 6.0, 2.0 / 15.0, 1.0 / 9.0, 0.5, 1.0 / 3.0}.scaled(2.0);
    }
    if (budget < 100'000) throw_config("null_moments: quasi-MC budget must be at least 1e5");
    if (3 * d > detail::first_primes.size())
        throw_config("null_moments: dimension too large for Halton quadrature");

    double a = 0.0, b = 0.0, diag = 0.0, off = 0.0;
    std::vector<double> u1(d), u2(d), u3(d);
    for (std::size_t idx = 1; idx <= budget; ++idx) {
        for (std::size_t j = 0; j < d; ++j) {
            u1[j] = detail::radical_inverse(idx, detail::first_primes[j]);
            u2[j] = detail::radical_inverse(idx, detail::first_primes[d + j]);
            u3[j] = detail::radical_inverse(idx, detail::first_primes[2 * d + j]);
        }
        const double k12 = kernel(u1, u2);
        a += k12 * k12;
        b += k12 * kernel(u1, u3);
        off += k12;
        diag += kernel(u1, u1);
    }
    const double inv = 1.0 / static_cast<double>(budget);
    NullMoments m;
    m.a_tilde = a * inv;
    m.b_tilde = b * inv;
    m.offdiag_mean = off * inv;
    m.c_tilde = m.offdiag_mean * m.offdiag_mean;
    m.diag_mean = diag * inv;
    return m;
}

enum class MmdEstimator { u_stat, v_stat };

/// Squared maximum mean discrepancy between the empirical laws of two samples.
/// u_stat uses within-sample means over distinct pairs and can be slightly
/// negative; v_stat is the plug-in version, zero for identical samples.
template <KernelFn K>
double mmd_squared(const K& kernel, const Matrix& a, const Matrix& b,
                   MmdEstimator est = MmdEstimator::u_stat) {
    const std::size_t m = a.rows(), l = b.rows();
    if (m < 2 || l < 2) throw_config("mmd_squared: samples must have at least 2 rows");
    if (a.cols() != b.cols()) throw_config("mmd_squared: dimension mismatch");

    // All three blocks iterate in the same row order so that identical
    // samples cancel exactly in the V-statistic.
    double within_a = 0.0, within_b = 0.0, cross = 0.0;
    double diag_a = 0.0, diag_b = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        diag_a += kernel(a.row(i), a.row(i));
        for (std::size_t j = 0; j < m; ++j) within_a += kernel(a.row(i), a.row(j));
    }
    for (std::size_t i = 0; i < l; ++i) {
        diag_b += kernel(b.row(i), b.row(i));
        for (std::size_t j = 0; j < l; ++j) within_b += kernel(b.row(i), b.row(j));
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < l; ++j) cross += kernel(a.row(i), b.row(j));

    const double md = static_cast<double>(m), ld = static_cast<double>(l);
    if (est == MmdEstimator::u_stat)
        return (within_a - diag_a) / (md * (md - 1.0)) + (within_b - diag_b) / (ld * (ld - 1.0)) -
               2.0 * cross / (md * ld);
    return within_a / (md * md) + within_b / (ld * ld) - 2.0 * cross / (md * ld);
}

}  // namespace rankdep
