#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace osal {

// Lower bound on fitted variances; keeps densities finite when a component
// collapses onto duplicated values.
inline constexpr double kGmmVarianceFloor = 1e-6;

// Two-component univariate Gaussian mixture. Components are stored sorted by
// mean, so index 1 is always the larger-mean ("known") component.
struct Gmm1d {
    std::array<double, 2> weights{0.5, 0.5};
    std::array<double, 2> means{0.0, 0.0};
    std::array<double, 2> variances{1.0, 1.0};
};

// Per-iteration log-likelihood of an EM fit, for convergence diagnostics.
struct EmTrace {
    std::vector<double> log_likelihood;
};

// Expectation-Maximization fit of a two-component mixture. Deterministic:
// means start at the 25th/75th percentiles, both variances at the (floored)
// sample variance, weights at 0.5/0.5. Stops when the log-likelihood
// improvement drops below tol or after max_iter iterations. Throws
// std::invalid_argument on fewer than two values or all-identical values.
Gmm1d fit_gmm2(std::span<const double> values, std::size_t max_iter = 100,
               double tol = 1e-6, EmTrace* trace = nullptr);

// Posterior probability of the larger-mean component at v,
// w1*N(v;m1,s1) / (w0*N(v;m0,s0) + w1*N(v;m1,s1)), evaluated in log space.
double posterior_known(const Gmm1d& gmm, double v);

}  // namespace osal
