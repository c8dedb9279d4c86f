#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rankdep/core.hpp"
#include "rankdep/mathutil.hpp"
#include "rankdep/rng.hpp"

namespace rankdep {

enum class ModelKind {
    independent_uniform,
    independent_normal,
    bivariate_gaussian,
    noiseless_function,
    additive_noise,
    cauchy_independent,
    sinusoid,
};

enum class GFunc { identity, cube, sine };

inline double apply_g(GFunc g, double x) {
    switch (g) {
        case GFunc::identity: return x;
        case GFunc::cube: return x * x * x;
        case GFunc::sine: return std::sin(x);
    }
    return x;
}

inline bool g_is_monotone(GFunc g) { return g == GFunc::identity || g == GFunc::cube; }

inline double apply_g_inverse(GFunc g, double y) {
    switch (g) {
        case GFunc::identity: return y;
        case GFunc::cube: return std::cbrt(y);
        case GFunc::sine: throw_config("g inverse: sine is not invertible");
    }
    return y;
}

enum class Margin { x, y };

/// Synthetic joint laws with known population quantities, used as test and
/// oracle models. All laws are absolutely continuous with continuous
/// marginals.
///
///   independent_uniform(d1,d2)   X ~ U[0,1]^d1 independent of Y ~ U[0,1]^d2
///   independent_normal(d1,d2)    standard normal coordinates, independent
///   cauchy_independent(d1,d2)    standard Cauchy coordinates, independent
///   bivariate_gaussian(rho)      standard bivariate normal, d1 = d2 = 1
///   noiseless(g)                 X ~ N(0,1), Y = g(X)
///   additive_noise(g, sigma)     X ~ N(0,1), Y = g(X) + sigma * N(0,1)
///   sinusoid(a, sigma)           X ~ U[0,1], Y = sin(2 pi a X) + sigma * N(0,1)
struct KnownModel {
    ModelKind kind = ModelKind::independent_normal;
    std::size_t d1 = 1, d2 = 1;
    double rho = 0.0;
    double noise = 0.0;
    double amplitude = 1.0;
    GFunc g = GFunc::identity;

    static KnownModel independent_uniform(std::size_t d1, std::size_t d2) {
        return {ModelKind::independent_uniform, d1, d2};
    }
    static KnownModel independent_normal(std::size_t d1, std::size_t d2) {
        return {ModelKind::independent_normal, d1, d2};
    }
    static KnownModel cauchy_independent(std::size_t d1, std::size_t d2) {
        return {ModelKind::cauchy_independent, d1, d2};
    }
    static KnownModel bivariate_gaussian(double rho) {
        if (!(rho > -1.0 && rho < 1.0)) throw_config("bivariate_gaussian: |rho| must be < 1");
        KnownModel m{ModelKind::bivariate_gaussian, 1, 1};
        m.rho = rho;
        return m;
    }
    static KnownModel noiseless(GFunc g) {
        KnownModel m{ModelKind::noiseless_function, 1, 1};
        m.g = g;
        return m;
    }
    static KnownModel additive_noise(GFunc g, double sigma) {
        if (!(sigma > 0.0)) throw_config("additive_noise: sigma must be positive");
        KnownModel m{ModelKind::additive_noise, 1, 1};
        m.g = g;
        m.noise = sigma;
        return m;
    }
    static KnownModel sinusoid(double amplitude, double sigma) {
        KnownModel m{ModelKind::sinusoid, 1, 1};
        m.amplitude = amplitude;
        m.noise = sigma;
        return m;
    }

    bool is_independence_model() const {
        return kind == ModelKind::independent_uniform || kind == ModelKind::independent_normal ||
               kind == ModelKind::cauchy_independent ||
               (kind == ModelKind::bivariate_gaussian && rho == 0.0);
    }

    std::pair<Matrix, Matrix> sample(std::size_t n, std::uint64_t seed) const {
        if (n < 1) throw_config("KnownModel::sample: n must be positive");
        Rng rng(seed);
        Matrix x(n, d1), y(n, d2);
        for (std::size_t i = 0; i < n; ++i) {
            switch (kind) {
                case ModelKind::independent_uniform:
                    for (std::size_t j = 0; j < d1; ++j) x(i, j) = rng.uniform();
                    for (std::size_t j = 0; j < d2; ++j) y(i, j) = rng.uniform();
                    break;
                case ModelKind::independent_normal:
                    for (std::size_t j = 0; j < d1; ++j) x(i, j) = rng.normal();
                    for (std::size_t j = 0; j < d2; ++j) y(i, j) = rng.normal();
                    break;
                case ModelKind::cauchy_independent:
                    for (std::size_t j = 0; j < d1; ++j) x(i, j) = rng.cauchy();
                    for (std::size_t j = 0; j < d2; ++j) y(i, j) = rng.cauchy();
                    break;
                case ModelKind::bivariate_gaussian: {
                    const double z1 = rng.normal(), z2 = rng.normal();
                    x(i, 0) = z1;
                    y(i, 0) = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
                    break;
                }
                case ModelKind::noiseless_function:
                    x(i, 0) = rng.normal();
                    y(i, 0) = apply_g(g, x(i, 0));
                    break;
                case ModelKind::additive_noise:
                    x(i, 0) = rng.normal();
                    y(i, 0) = apply_g(g, x(i, 0)) + noise * rng.normal();
                    break;
                case ModelKind::sinusoid:
                    x(i, 0) = rng.uniform();
                    y(i, 0) = std::sin(2.0 * std::numbers::pi * amplitude * x(i, 0)) +
                              noise * rng.normal();
                    break;
            }
        }
        return {std::move(x), std::move(y)};
    }

    /// Whether the coordinatewise-CDF population rank map is available for the
    /// given margin (product-structure marginals only).
    bool has_population_ranks(Margin m) const {
        switch (kind) {
            case ModelKind::independent_uniform:
            case ModelKind::independent_normal:
            case ModelKind::cauchy_independent:
            case ModelKind::bivariate_gaussian: return true;
            case ModelKind::noiseless_function:
                return m == Margin::x || g_is_monotone(g);
            case ModelKind::additive_noise:
            case ModelKind::sinusoid: return m == Margin::x;
        }
        return false;
    }

    double marginal_cdf(Margin m, std::size_t coord, double v) const {
        (void)coord;
        switch (kind) {
            case ModelKind::independent_uniform: return v;
            case ModelKind::independent_normal: return normal_cdf(v);
            case ModelKind::cauchy_independent: return cauchy_cdf(v);
            case ModelKind::bivariate_gaussian: return normal_cdf(v);
            case ModelKind::noiseless_function:
                if (m == Margin::x) return normal_cdf(v);
                return normal_cdf(apply_g_inverse(g, v));
            case ModelKind::additive_noise:
                if (m == Margin::x) return normal_cdf(v);
                throw_config("marginal_cdf: Y margin unavailable for additive_noise");
            case ModelKind::sinusoid:
                if (m == Margin::x) return v;
                throw_config("marginal_cdf: Y margin unavailable for sinusoid");
        }
        throw_config("marginal_cdf: unsupported model");
    }

    double marginal_quantile(Margin m, std::size_t coord, double p) const {
        (void)coord;
        if (!(p > 0.0 && p < 1.0)) throw_config("marginal_quantile: p must be in (0,1)");
        switch (kind) {
            case ModelKind::independent_uniform: return p;
            case ModelKind::independent_normal: return normal_quantile(p);
            case ModelKind::cauchy_independent: return cauchy_quantile(p);
            case ModelKind::bivariate_gaussian: return normal_quantile(p);
            case ModelKind::noiseless_function:
                if (m == Margin::x) return normal_quantile(p);
                return apply_g(g, normal_quantile(p));
            default: throw_config("marginal_quantile: unsupported model/margin");
        }
    }

    /// Coordinatewise-CDF population rank map (the OT map to U[0,1]^d for
    /// product marginals).
    std::vector<double> population_rank(Margin m, std::span<const double> point) const {
        if (!has_population_ranks(m))
            throw_config("population_rank: no closed-form rank map for this model/margin");
        const std::size_t d = (m == Margin::x) ? d1 : d2;
        if (point.size() != d) throw_config("population_rank: point dimension mismatch");
        std::vector<double> r(d);
        for (std::size_t j = 0; j < d; ++j) r[j] = marginal_cdf(m, j, point[j]);
        return r;
    }

    /// Coordinatewise inverse-CDF population quantile map (inverse of the rank map).
    std::vector<double> population_quantile(Margin m, std::span<const double> u) const {
        const std::size_t d = (m == Margin::x) ? d1 : d2;
        if (u.size() != d) throw_config("population_quantile: point dimension mismatch");
        std::vector<double> q(d);
        for (std::size_t j = 0; j < d; ++j) q[j] = marginal_quantile(m, j, u[j]);
        return q;
    }

    bool has_conditional_sampler() const { return d2 == 1; }

    /// One draw from the X marginal.
    void sample_x(std::span<double> out, Rng& rng) const {
        if (out.size() != d1) throw_config("sample_x: dimension mismatch");
        switch (kind) {
            case ModelKind::independent_uniform:
            case ModelKind::sinusoid:
                for (auto& v : out) v = rng.uniform();
                return;
            case ModelKind::independent_normal:
            case ModelKind::bivariate_gaussian:
            case ModelKind::noiseless_function:
            case ModelKind::additive_noise:
                for (auto& v : out) v = rng.normal();
                return;
            case ModelKind::cauchy_independent:
                for (auto& v : out) v = rng.cauchy();
                return;
        }
        throw_config("sample_x: unsupported model");
    }

    /// Two independent draws from Y | X = x.
    std::pair<double, double> sample_conditional_pair(std::span<const double> x, Rng& rng) const {
        switch (kind) {
            case ModelKind::independent_uniform: return {rng.uniform(), rng.uniform()};
            case ModelKind::independent_normal: return {rng.normal(), rng.normal()};
            case ModelKind::cauchy_independent: return {rng.cauchy(), rng.cauchy()};
            case ModelKind::bivariate_gaussian: {
                const double s = std::sqrt(1.0 - rho * rho);
                return {rho * x[0] + s * rng.normal(), rho * x[0] + s * rng.normal()};
            }
            case ModelKind::noiseless_function: {
                const double y = apply_g(g, x[0]);
                return {y, y};
            }
            case ModelKind::additive_noise: {
                const double m = apply_g(g, x[0]);
                return {m + noise * rng.normal(), m + noise * rng.normal()};
            }
            case ModelKind::sinusoid: {
                const double m = std::sin(2.0 * std::numbers::pi * amplitude * x[0]);
                return {m + noise * rng.normal(), m + noise * rng.normal()};
            }
        }
        throw_config("sample_conditional_pair: unsupported model");
    }

    std::string name() const {
        switch (kind) {
            case ModelKind::independent_uniform: return "independent-uniform";
            case ModelKind::independent_normal: return "independent-normal";
            case ModelKind::cauchy_independent: return "cauchy-independent";
            case ModelKind::bivariate_gaussian: return "bivariate-gaussian";
            case ModelKind::noiseless_function: return "noiseless";
            case ModelKind::additive_noise: return "additive-noise";
            case ModelKind::sinusoid: return "sinusoid";
        }
        return "?";
    }
};

/// Population rank map oracle for catalog models (coordinatewise CDF).
inline std::vector<double> population_rank_oracle(const KnownModel& model,
                                                  std::span<const double> point,
                                                  Margin margin = Margin::x) {
    return model.population_rank(margin, point);
}

}  // namespace rankdep
