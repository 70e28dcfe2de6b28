// Independent reference implementations used to check the library. These
// deliberately avoid the production code paths: plain formulas, exhaustive
// recomputation, and finite differences only.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "osal/net.hpp"

namespace oracles {

// Closed-form softmax without max subtraction (safe for small logits only).
inline std::vector<double> direct_softmax(std::span<const double> logits, double temperature) {
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] / temperature);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

// Central finite differences of ce_loss_t with respect to the logits.
inline std::vector<double> fd_loss_grad(std::span<const double> logits, std::size_t target,
                                        double temperature, double step = 1e-5) {
    std::vector<double> probe(logits.begin(), logits.end());
    std::vector<double> grad(logits.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + step;
        const double hi = osal::ce_loss_t(probe, target, temperature);
        probe[i] = saved - step;
        const double lo = osal::ce_loss_t(probe, target, temperature);
        probe[i] = saved;
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

// Vector relative error ||a - b|| / max(||a||, ||b||).
inline double vec_relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        norm_a += a[i] * a[i];
        norm_b += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(norm_a), std::sqrt(norm_b), 1e-300});
}

inline double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// Gaussian density evaluated directly (no log-space tricks).
inline double normal_pdf(double v, double mean, double variance) {
    return std::exp(-(v - mean) * (v - mean) / (2.0 * variance)) /
           std::sqrt(2.0 * 3.14159265358979323846 * variance);
}

// Exhaustive k-center greedy over explicit feature vectors; returns
// positions into `candidates`.
inline std::vector<std::size_t> brute_force_k_center(
    const std::vector<std::vector<double>>& candidates,
    const std::vector<std::vector<double>>& centers, std::size_t budget) {
    const auto sq_dist = [](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        return acc;
    };

    std::vector<std::vector<double>> current_centers = centers;
    std::vector<bool> used(candidates.size(), false);
    std::vector<std::size_t> picks;
    for (std::size_t round = 0; round < std::min(budget, candidates.size()); ++round) {
        std::size_t best = candidates.size();
        double best_dist = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (used[i]) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& center : current_centers) {
                nearest = std::min(nearest, sq_dist(candidates[i], center));
            }
            if (best == candidates.size() || nearest > best_dist) {
                best = i;
                best_dist = nearest;
            }
        }
        picks.push_back(best);
        used[best] = true;
        current_centers.push_back(candidates[best]);
    }
    return picks;
}

}  // namespace oracles
