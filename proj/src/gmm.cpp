#include "osal/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace osal {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_normal_pdf(double v, double mean, double variance) {
    const double d = v - mean;
    return -0.5 * (kLogTwoPi + std::log(variance) + d * d / variance);
}

// Percentile by linear interpolation between closest ranks of the sorted data.
double percentile(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

Gmm1d fit_gmm2(std::span<const double> values, std::size_t max_iter, double tol,
               EmTrace* trace) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("fit_gmm2: need at least two values");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw std::invalid_argument("fit_gmm2: all values identical");
    }

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double variance = 0.0;
    for (double v : values) variance += (v - mean) * (v - mean);
    variance /= static_cast<double>(n - 1);
    variance = std::max(variance, kGmmVarianceFloor);

    Gmm1d gmm;
    gmm.means = {percentile(sorted, 0.25), percentile(sorted, 0.75)};
    gmm.variances = {variance, variance};
    gmm.weights = {0.5, 0.5};
    if (trace) trace->log_likelihood.clear();

    std::vector<double> resp1(n);  // responsibility of component 1
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // E step, in log space.
        double ll = 0.0;
        const double log_w0 = gmm.weights[0] > 0.0
                                  ? std::log(gmm.weights[0])
                                  : -std::numeric_limits<double>::infinity();
        const double log_w1 = gmm.weights[1] > 0.0
                                  ? std::log(gmm.weights[1])
                                  : -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = log_w0 + log_normal_pdf(values[i], gmm.means[0], gmm.variances[0]);
            const double l1 = log_w1 + log_normal_pdf(values[i], gmm.means[1], gmm.variances[1]);
            const double norm = log_add_exp(l0, l1);
            resp1[i] = std::exp(l1 - norm);
            ll += norm;
        }
        if (trace) trace->log_likelihood.push_back(ll);
        if (ll - prev_ll < tol && iter > 0) break;
        prev_ll = ll;

        // M step.
        double n1 = 0.0;
        for (double r : resp1) n1 += r;
        const double n0 = static_cast<double>(n) - n1;

        double mu0 = 0.0;
        double mu1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mu1 += resp1[i] * values[i];
            mu0 += (1.0 - resp1[i]) * values[i];
        }
        if (n0 > 0.0) gmm.means[0] = mu0 / n0;
        if (n1 > 0.0) gmm.means[1] = mu1 / n1;

        double var0 = 0.0;
        double var1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = values[i] - gmm.means[0];
            const double d1 = values[i] - gmm.means[1];
            var0 += (1.0 - resp1[i]) * d0 * d0;
            var1 += resp1[i] * d1 * d1;
        }
        if (n0 > 0.0) gmm.variances[0] = std::max(var0 / n0, kGmmVarianceFloor);
        if (n1 > 0.0) gmm.variances[1] = std::max(var1 / n1, kGmmVarianceFloor);
        gmm.weights[0] = n0 / static_cast<double>(n);
        gmm.weights[1] = n1 / static_cast<double>(n);
    }

    if (gmm.means[0] > gmm.means[1]) {
        std::swap(gmm.means[0], gmm.means[1]);
        std::swap(gmm.variances[0], gmm.variances[1]);
        std::swap(gmm.weights[0], gmm.weights[1]);
    }
    return gmm;
}

double posterior_known(const Gmm1d& gmm, double v) {
    const double l0 = (gmm.weights[0] > 0.0 ? std::log(gmm.weights[0])
                                            : -std::numeric_limits<double>::infinity()) +
                      log_normal_pdf(v, gmm.means[0], gmm.variances[0]);
    const double l1 = (gmm.weights[1] > 0.0 ? std::log(gmm.weights[1])
                                            : -std::numeric_limits<double>::infinity()) +
                      log_normal_pdf(v, gmm.means[1], gmm.variances[1]);
    return std::exp(l1 - log_add_exp(l0, l1));
}

}  // namespace osal
