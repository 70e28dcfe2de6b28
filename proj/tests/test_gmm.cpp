#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "osal/gmm.hpp"
#include "osal/rng.hpp"

using namespace osal;

TEST_CASE("fit_gmm2 recovers a well-separated two-component mixture") {
    Rng rng(404);
    std::vector<double> values;
    std::vector<bool> from_high;
    for (int i = 0; i < 500; ++i) values.push_back(rng.normal(0.0, 1.0));
    for (int i = 0; i < 500; ++i) values.push_back(rng.normal(5.0, 1.0));

    EmTrace trace;
    const Gmm1d gmm = fit_gmm2(values, 100, 1e-6, &trace);
    CHECK(std::abs(gmm.means[0] - 0.0) <= 0.2);
    CHECK(std::abs(gmm.means[1] - 5.0) <= 0.2);
    CHECK(std::abs(gmm.weights[0] - 0.5) <= 0.05);
    CHECK(std::abs(gmm.weights[1] - 0.5) <= 0.05);
    CHECK(gmm.means[1] >= gmm.means[0]);
    CHECK(gmm.weights[0] + gmm.weights[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(trace.log_likelihood.size() >= 2);
}

TEST_CASE("fit_gmm2 on the six-point split lands on the two values") {
    const std::vector<double> values{0.0, 0.0, 0.0, 1.0, 1.0, 1.0};
    const Gmm1d gmm = fit_gmm2(values);
    CHECK(gmm.means[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(gmm.means[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(gmm.variances[0] == doctest::Approx(kGmmVarianceFloor));
    CHECK(gmm.variances[1] == doctest::Approx(kGmmVarianceFloor));
    CHECK(gmm.weights[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("fit_gmm2 log-likelihood is non-decreasing at every iteration") {
    Rng rng(1001);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> values;
        const std::size_t n = 10 + rng.bounded(300);
        const double m1 = rng.uniform(-5.0, 5.0);
        const double m2 = rng.uniform(-5.0, 5.0);
        for (std::size_t i = 0; i < n; ++i) {
            values.push_back(rng.normal(rng.uniform() < 0.5 ? m1 : m2, 0.1 + rng.uniform()));
        }
        EmTrace trace;
        fit_gmm2(values, 200, 1e-12, &trace);
        for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i) {
            CHECK(trace.log_likelihood[i] >= trace.log_likelihood[i - 1] - 1e-9);
        }
    }
}

TEST_CASE("fit_gmm2 rejects degenerate inputs") {
    CHECK_THROWS_AS(fit_gmm2(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(fit_gmm2(std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_gmm2(std::vector<double>{2.0, 2.0, 2.0}), std::invalid_argument);
}

TEST_CASE("fit_gmm2 is deterministic") {
    Rng rng(55);
    std::vector<double> values;
    for (int i = 0; i < 100; ++i) values.push_back(rng.uniform(-3.0, 3.0));
    const Gmm1d a = fit_gmm2(values);
    const Gmm1d b = fit_gmm2(values);
    CHECK(a.means == b.means);
    CHECK(a.variances == b.variances);
    CHECK(a.weights == b.weights);
}

TEST_CASE("affine shift moves the means and preserves posteriors") {
    Rng rng(56);
    std::vector<double> values;
    for (int i = 0; i < 200; ++i) {
        values.push_back(rng.normal(rng.uniform() < 0.5 ? 0.0 : 3.0, 0.5));
    }
    const double shift = 7.25;
    std::vector<double> shifted = values;
    for (double& v : shifted) v += shift;

    const Gmm1d base = fit_gmm2(values);
    const Gmm1d moved = fit_gmm2(shifted);
    CHECK(moved.means[0] == doctest::Approx(base.means[0] + shift).epsilon(1e-9));
    CHECK(moved.means[1] == doctest::Approx(base.means[1] + shift).epsilon(1e-9));
    CHECK(moved.variances[0] == doctest::Approx(base.variances[0]).epsilon(1e-7));
    CHECK(moved.variances[1] == doctest::Approx(base.variances[1]).epsilon(1e-7));
    CHECK(moved.weights[0] == doctest::Approx(base.weights[0]).epsilon(1e-9));

    for (double v : {-1.0, 0.5, 1.5, 2.9, 4.0}) {
        CHECK(posterior_known(moved, v + shift) ==
              doctest::Approx(posterior_known(base, v)).epsilon(1e-9));
    }
}

TEST_CASE("posterior_known point values") {
    Gmm1d gmm;
    gmm.weights = {0.5, 0.5};
    gmm.means = {0.0, 4.0};
    gmm.variances = {1.0, 1.0};

    CHECK(posterior_known(gmm, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(posterior_known(gmm, gmm.means[1] + 10.0) > 0.999);
    CHECK(posterior_known(gmm, gmm.means[0] - 10.0) < 0.001);
}

TEST_CASE("posterior_known agrees with the direct density ratio") {
    Rng rng(57);
    for (int trial = 0; trial < 200; ++trial) {
        Gmm1d gmm;
        const double w = 0.05 + 0.9 * rng.uniform();
        gmm.weights = {1.0 - w, w};
        gmm.means = {rng.uniform(-3.0, 0.0), rng.uniform(0.5, 4.0)};
        gmm.variances = {0.1 + rng.uniform(), 0.1 + rng.uniform()};
        const double v = rng.uniform(-6.0, 8.0);

        const double d0 = gmm.weights[0] * oracles::normal_pdf(v, gmm.means[0], gmm.variances[0]);
        const double d1 = gmm.weights[1] * oracles::normal_pdf(v, gmm.means[1], gmm.variances[1]);
        const double expected = d1 / (d0 + d1);
        const double actual = posterior_known(gmm, v);
        CHECK(actual == doctest::Approx(expected).epsilon(1e-9));
        CHECK(actual >= 0.0);
        CHECK(actual <= 1.0);
        // The two component posteriors are complementary by construction.
        Gmm1d flipped = gmm;
        std::swap(flipped.means[0], flipped.means[1]);
        std::swap(flipped.variances[0], flipped.variances[1]);
        std::swap(flipped.weights[0], flipped.weights[1]);
        CHECK(actual + posterior_known(flipped, v) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("posterior_known is monotone in v for equal variances") {
    Rng rng(58);
    for (int trial = 0; trial < 50; ++trial) {
        Gmm1d gmm;
        const double w = 0.1 + 0.8 * rng.uniform();
        gmm.weights = {1.0 - w, w};
        gmm.means = {rng.uniform(-2.0, 0.0), rng.uniform(0.5, 3.0)};
        const double variance = 0.2 + rng.uniform();
        gmm.variances = {variance, variance};

        double previous = posterior_known(gmm, -8.0);
        for (double v = -7.75; v <= 8.0; v += 0.25) {
            const double current = posterior_known(gmm, v);
            CHECK(current >= previous - 1e-12);
            previous = current;
        }
    }
}
