#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "rankdep/core.hpp"
#include "rankdep/rng.hpp"

namespace rankdep {

enum class GridScheme { lattice1d, halton, iid_uniform };

inline const char* to_string(GridScheme s) {
    switch (s) {
        case GridScheme::lattice1d: return "lattice1d";
        case GridScheme::halton: return "halton";
        case GridScheme::iid_uniform: return "iid";
    }
    return "?";
}

/// Compact description of a reference point set, sufficient to rebuild it.
struct GridSpec {
    GridScheme scheme = GridScheme::halton;
    std::size_t n = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;  // used by iid_uniform only

    /// Canonical string form, used in cache keys.
    std::string canonical() const {
        std::string s = std::string("{scheme:") + to_string(scheme) + ",n:" + std::to_string(n) +
                        ",d:" + std::to_string(d);
        if (scheme == GridScheme::iid_uniform) s += ",seed:" + std::to_string(seed);
        return s + "}";
    }
    bool operator==(const GridSpec&) const = default;
};

/// Fixed "uniform-like" point set in [0,1]^d used as the discrete reference
/// for the rank maps. Immutable after construction; points are validated to
/// lie in the unit cube and to be pairwise distinct.
class ReferenceGrid {
public:
    ReferenceGrid(GridSpec spec, Matrix points) : spec_(spec), points_(std::move(points)) {
        if (points_.rows() != spec_.n || points_.cols() != spec_.d)
            throw_config("ReferenceGrid: points shape does not match spec");
        for (std::size_t i = 0; i < points_.rows(); ++i)
            for (std::size_t j = 0; j < points_.cols(); ++j) {
                const double v = points_(i, j);
                if (!(v >= 0.0 && v <= 1.0))
                    throw_config("ReferenceGrid: coordinate outside [0,1] at row " + std::to_string(i));
            }
        require_distinct_rows(points_, "ReferenceGrid");
    }

    const GridSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return points_.rows(); }
    std::size_t dim() const noexcept { return points_.cols(); }
    const Matrix& points() const noexcept { return points_; }
    std::span<const double> point(std::size_t i) const { return points_.row(i); }

private:
    GridSpec spec_;
    Matrix points_;
};

namespace detail {

inline constexpr std::array<std::uint32_t, 32> first_primes = {
    2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43,  47,  53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
    double inv = 1.0 / base, factor = inv, value = 0.0;
    while (index > 0) {
        value += factor * static_cast<double>(index % base);
        index /= base;
        factor *= inv;
    }
    return value;
}

}  // namespace detail

/// The 1-d lattice {1/n, ..., n/n}.
inline ReferenceGrid make_lattice_1d(std::size_t n) {
    if (n == 0) throw_config("make_lattice_1d: n must be positive");
    Matrix pts(n, 1);
    for (std::size_t i = 0; i < n; ++i)
        pts(i, 0) = static_cast<double>(i + 1) / static_cast<double>(n);
    return ReferenceGrid({GridScheme::lattice1d, n, 1, 0}, std::move(pts));
}

/// First n points of the d-dimensional Halton sequence with the first d prime
/// bases, starting at index 1 so the all-zeros point is skipped.
inline ReferenceGrid make_halton(std::size_t n, std::size_t d) {
    if (n == 0 || d == 0) throw_config("make_halton: n and d must be positive");
    if (d > detail::first_primes.size())
        throw_config("make_halton: dimension exceeds supported maximum of " +
                     std::to_string(detail::first_primes.size()));
    Matrix pts(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            pts(i, j) = detail::radical_inverse(i + 1, detail::first_primes[j]);
    return ReferenceGrid({GridScheme::halton, n, d, 0}, std::move(pts));
}

inline ReferenceGrid make_iid_uniform(std::size_t n, std::size_t d, std::uint64_t seed) {
    if (n == 0 || d == 0) throw_config("make_iid_uniform: n and d must be positive");
    Rng rng(seed);
    Matrix pts(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) pts(i, j) = rng.uniform();
    return ReferenceGrid({GridScheme::iid_uniform, n, d, seed}, std::move(pts));
}

inline ReferenceGrid make_grid(const GridSpec& spec) {
    switch (spec.scheme) {
        case GridScheme::lattice1d:
            if (spec.d != 1) throw_config("lattice1d grid requires d = 1");
            return make_lattice_1d(spec.n);
        case GridScheme::halton: return make_halton(spec.n, spec.d);
        case GridScheme::iid_uniform: return make_iid_uniform(spec.n, spec.d, spec.seed);
    }
    throw_config("make_grid: unknown scheme");
}

}  // namespace rankdep
