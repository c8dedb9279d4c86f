#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rankdep/kernels.hpp"
#include "rankdep/mathutil.hpp"
#include "rankdep/models.hpp"
#include "rankdep/rng.hpp"

namespace rankdep {

struct OracleValue {
    double value = 0.0;
    double error = 0.0;  // standard error (MC) or quadrature error estimate
    std::string method;
};

enum class XiMethod { automatic, quadrature, nested_mc };

namespace detail {

/// xi numerator for the standard bivariate Gaussian with correlation rho,
/// by tensor Gauss-Legendre quadrature with the analytic conditional CDF:
/// integral over t of Var_X( P(Y >= t | X) ) phi(t) dt.
inline double xi_gaussian_numerator_quadrature(double rho, int npanel, int nnode) {
    const double s = std::sqrt(1.0 - rho * rho);
    const double lim = 8.0;
    auto inner = [&](double t) {
        auto p2 = [&](double x) {
            const double p = normal_cdf((rho * x - t) / s);  // P(Y >= t | X = x)
            return p * p * normal_pdf(x);
        };
        auto p1 = [&](double x) { return normal_cdf((rho * x - t) / s) * normal_pdf(x); };
        const double m2 = integrate(p2, -lim, lim, npanel, nnode);
        const double m1 = integrate(p1, -lim, lim, npanel, nnode);
        return (m2 - m1 * m1) * normal_pdf(t);
    };
    return integrate(inner, -lim, lim, npanel, nnode);
}

inline OracleValue xi_gaussian_quadrature(double rho) {
    // The denominator integral of Var(1(Y >= t)) dmu_Y(t) equals
    // E[F(Y)(1-F(Y))] = 1/2 - 1/3 = 1/6 for any continuous marginal.
    const double den = 1.0 / 6.0;
    const double coarse = xi_gaussian_numerator_quadrature(rho, 6, 24) / den;
    const double fine = xi_gaussian_numerator_quadrature(rho, 10, 32) / den;
    return {fine, std::abs(fine - coarse) + 1e-12, "quadrature"};
}

/// Same numerator by nested Monte Carlo: outer draws of t ~ mu_Y, inner
/// sample variance over X draws of the analytic conditional tail probability.
inline OracleValue xi_gaussian_nested_mc(double rho, std::size_t budget, std::uint64_t seed) {
    const double s = std::sqrt(1.0 - rho * rho);
    const std::size_t n_outer = static_cast<std::size_t>(std::sqrt(static_cast<double>(budget)));
    const std::size_t n_inner = n_outer;
    Rng rng(seed);
    std::vector<double> vars(n_outer);
    std::vector<double> p(n_inner);
    for (std::size_t o = 0; o < n_outer; ++o) {
        const double t = rng.normal();  // t ~ mu_Y
        for (std::size_t i = 0; i < n_inner; ++i)
            p[i] = normal_cdf((rho * rng.normal() - t) / s);
        vars[o] = sample_variance(p);
    }
    const double num = mean(vars);
    const double se = standard_error_of_mean(vars);
    return {num / (1.0 / 6.0), se / (1.0 / 6.0), "nested-mc"};
}

}  // namespace detail

/// Population regression-dependence coefficient
///   xi = integral Var(P(Y >= t | X)) dmu_Y(t) / integral Var(1(Y >= t)) dmu_Y(t).
/// Exact for independence (0) and noiseless functional models (1); numeric
/// for the bivariate Gaussian, where both a quadrature and a nested-MC route
/// are available.
inline OracleValue xi_population(const KnownModel& model, std::size_t budget = 4'000'000,
                                 XiMethod method = XiMethod::automatic, std::uint64_t seed = 17) {
    if (model.d2 != 1) throw_config("xi_population: requires d2 = 1");
    if (model.is_independence_model()) return {0.0, 0.0, "exact"};
    if (model.kind == ModelKind::noiseless_function ||
        (model.kind == ModelKind::sinusoid && model.noise == 0.0))
        return {1.0, 0.0, "exact"};
    if (model.kind == ModelKind::bivariate_gaussian) {
        switch (method) {
            case XiMethod::automatic:
            case XiMethod::quadrature: return detail::xi_gaussian_quadrature(model.rho);
            case XiMethod::nested_mc: return detail::xi_gaussian_nested_mc(model.rho, budget, seed);
        }
    }
    throw_config("xi_population: unsupported model '" + model.name() + "'");
}

/// Population limit of the rank estimator, by nested Monte Carlo with the
/// population rank maps:
///   eta = (E K(R(Y'), R(Y~')) - E K(R(Y1), R(Y2))) / (E K(R(Y1), R(Y1)) - E K(R(Y1), R(Y2)))
/// where Y', Y~' are conditionally independent draws given a common X'.
/// For noiseless models the conditional draws coincide, the first and third
/// term estimates cancel exactly, and the value is exactly 1.
inline OracleValue population_eta_rank_oracle(const KnownModel& model, const Kernel& kernel,
                                              std::size_t budget = 1'000'000,
                                              std::uint64_t seed = 29) {
    if (!model.has_conditional_sampler())
        throw_config("population_eta_rank_oracle: model lacks a conditional sampler");
    if (!model.has_population_ranks(Margin::y))
        throw_config("population_eta_rank_oracle: model lacks a population rank map for y");
    const std::size_t reps = std::max<std::size_t>(budget / 4, 1000);

    Rng rng(seed);
    std::vector<double> cond(reps), diag(reps), off(reps);
    std::vector<double> xbuf(model.d1);
    auto kern1 = [&](double u, double v) {
        return kernel(std::span<const double>(&u, 1), std::span<const double>(&v, 1));
    };
    for (std::size_t r = 0; r < reps; ++r) {
        // One outer draw of X' with two conditional Y draws.
        model.sample_x(xbuf, rng);
        const auto [y1, y2] = model.sample_conditional_pair(xbuf, rng);
        const double r1 = model.marginal_cdf(Margin::y, 0, y1);
        const double r2 = model.marginal_cdf(Margin::y, 0, y2);
        cond[r] = kern1(r1, r2);
        diag[r] = kern1(r1, r1);
        // Independent marginal pair for the off-diagonal term. The rank of a
        // marginal draw is itself uniform, so draw it directly.
        off[r] = kern1(rng.uniform(), rng.uniform());
    }

    const double A = mean(cond), B = mean(off), C = mean(diag);
    const double seA = standard_error_of_mean(cond);
    const double seB = standard_error_of_mean(off);
    const double seC = standard_error_of_mean(diag);
    const double den = C - B;
    if (std::abs(den) < 1e-9) throw_degenerate("population_eta_rank_oracle: degenerate denominator");
    const double eta = (A - B) / den;
    // Delta-method standard error, treating A, B, C as independent estimates.
    const double dA = 1.0 / den;
    const double dB = (A - C) / (den * den);
    const double dC = -(A - B) / (den * den);
    const double se = std::sqrt(dA * dA * seA * seA + dB * dB * seB * seB + dC * dC * seC * seC);
    return {eta, se, "nested-mc"};
}

struct EquivalenceReport {
    OracleValue eta;
    OracleValue xi;
    double difference = 0.0;
    double combined_error = 0.0;
    bool consistent = false;  // |difference| <= 3 * combined_error (or both exact)
};

/// Cross-checks the two population oracles, which must agree for d2 = 1 with
/// the energy kernel.
inline EquivalenceReport eta_rank_equivalence_check(const KnownModel& model,
                                                    std::size_t budget = 1'000'000,
                                                    std::uint64_t seed = 31) {
    if (model.d2 != 1) throw_config("eta_rank_equivalence_check: requires d2 = 1");
    EquivalenceReport rep;
    rep.eta = population_eta_rank_oracle(model, Kernel::energy(), budget, seed);
    rep.xi = xi_population(model, budget, XiMethod::automatic, seed + 1);
    rep.difference = rep.eta.value - rep.xi.value;
    rep.combined_error = std::sqrt(rep.eta.error * rep.eta.error + rep.xi.error * rep.xi.error);
    rep.consistent = std::abs(rep.difference) <= std::max(3.0 * rep.combined_error, 1e-9);
    return rep;
}

}  // namespace rankdep
