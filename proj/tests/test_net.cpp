#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "oracles.hpp"
#include "osal/net.hpp"
#include "osal/rng.hpp"

using namespace osal;

namespace {

NetSpec tiny_spec(std::size_t input, std::vector<std::size_t> hidden, std::size_t output,
                  double dropout = 0.0) {
    NetSpec spec;
    spec.input_dim = input;
    spec.hidden_dims = std::move(hidden);
    spec.output_dim = output;
    spec.dropout_rate = dropout;
    return spec;
}

NetParams zero_params(const NetSpec& spec) {
    NetParams params = init_params(spec, 0);
    for (Layer& layer : params.layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    }
    return params;
}

bool same_params(const NetParams& a, const NetParams& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].weights != b.layers[l].weights) return false;
        if (a.layers[l].bias != b.layers[l].bias) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("init_params is deterministic and zero-biased") {
    const NetSpec spec = tiny_spec(4, {8, 3}, 2);
    const NetParams a = init_params(spec, 42);
    const NetParams b = init_params(spec, 42);
    CHECK(same_params(a, b));
    CHECK_FALSE(same_params(a, init_params(spec, 43)));

    for (const Layer& layer : a.layers) {
        for (double bias : layer.bias) CHECK(bias == 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (double w : layer.weights) {
            CHECK(w >= -bound);
            CHECK(w <= bound);
        }
    }
}

TEST_CASE("init_params with no hidden layers gives one linear layer") {
    const NetParams params = init_params(tiny_spec(5, {}, 3), 7);
    REQUIRE(params.layers.size() == 1);
    CHECK(params.layers[0].in == 5);
    CHECK(params.layers[0].out == 3);
}

TEST_CASE("NetSpec validation rejects bad fields") {
    CHECK_THROWS_AS(init_params(tiny_spec(0, {}, 2), 1), std::invalid_argument);
    CHECK_THROWS_AS(init_params(tiny_spec(2, {}, 1), 1), std::invalid_argument);
    CHECK_THROWS_AS(init_params(tiny_spec(2, {0}, 2), 1), std::invalid_argument);
    CHECK_THROWS_AS(init_params(tiny_spec(2, {}, 2, 1.0), 1), std::invalid_argument);
}

TEST_CASE("forward on zero parameters gives zero logits") {
    const NetParams params = zero_params(tiny_spec(3, {4}, 2));
    const std::vector<double> x{1.0, -2.0, 0.5};
    const ForwardResult result = forward(params, x);
    REQUIRE(result.logits.size() == 2);
    for (double v : result.logits) CHECK(v == 0.0);
    CHECK(result.penultimate.size() == 4);
}

TEST_CASE("forward rejects dimension mismatch") {
    const NetParams params = init_params(tiny_spec(3, {4}, 2), 1);
    const std::vector<double> x{1.0, 2.0};
    CHECK_THROWS_AS(forward(params, x), std::invalid_argument);
}

TEST_CASE("penultimate is the input when the net has no hidden layers") {
    const NetParams params = init_params(tiny_spec(3, {}, 2), 5);
    const std::vector<double> x{0.5, -1.0, 2.0};
    const ForwardResult result = forward(params, x);
    CHECK(result.penultimate == x);
}

TEST_CASE("dropout rate zero makes the mask seed irrelevant") {
    const NetParams params = init_params(tiny_spec(4, {16}, 3), 9);
    const std::vector<double> x{0.3, -0.7, 1.2, 0.1};
    const ForwardResult plain = forward(params, x);
    const ForwardResult masked = forward(params, x, 12345u);
    CHECK(plain.logits == masked.logits);
}

TEST_CASE("different dropout seeds give different logits with high probability") {
    const NetParams params = init_params(tiny_spec(4, {32}, 3, 0.5), 9);
    const std::vector<double> x{0.9, -0.7, 1.2, 0.4};
    std::set<std::vector<double>> distinct;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        distinct.insert(forward(params, x, seed).logits);
    }
    // 32 hidden units at 50% dropout: collisions should be rare.
    CHECK(distinct.size() >= 95);
}

TEST_CASE("softmax_t matches the closed form") {
    const std::vector<double> uniform{1.0, 1.0, 1.0};
    for (double temperature : {0.1, 0.5, 1.0, 2.0, 10.0}) {
        const std::vector<double> probs = softmax_t(uniform, temperature);
        for (double p : probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }

    const std::vector<double> two{2.0, 0.0};
    const std::vector<double> sharp = softmax_t(two, 0.5);
    const double e4 = std::exp(4.0);
    CHECK(sharp[0] == doctest::Approx(e4 / (e4 + 1.0)).epsilon(1e-12));
    CHECK(sharp[0] == doctest::Approx(0.98201).epsilon(1e-5));
    CHECK(sharp[1] == doctest::Approx(0.01799).epsilon(1e-3));

    const std::vector<double> soft = softmax_t(two, 2.0);
    const double e1 = std::exp(1.0);
    CHECK(soft[0] == doctest::Approx(e1 / (e1 + 1.0)).epsilon(1e-12));
    CHECK(soft[0] == doctest::Approx(0.73106).epsilon(1e-5));
    CHECK(soft[1] == doctest::Approx(0.26894).epsilon(1e-4));
}

TEST_CASE("softmax_t is a stable probability simplex point") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.bounded(9);
        std::vector<double> logits(n);
        for (double& v : logits) v = rng.uniform(-50.0, 50.0);
        for (double temperature : {0.1, 0.5, 1.0, 2.0, 10.0}) {
            const std::vector<double> probs = softmax_t(logits, temperature);
            double sum = 0.0;
            for (double p : probs) {
                CHECK(p >= 0.0);
                sum += p;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
            // Max subtraction keeps this finite and argmax-preserving even
            // for logits far outside the oracle-safe range.
            const auto arg_probs = std::max_element(probs.begin(), probs.end()) - probs.begin();
            const auto arg_logits = std::max_element(logits.begin(), logits.end()) - logits.begin();
            CHECK(probs[arg_logits] == probs[arg_probs]);
        }
        // Cross-check against the direct closed form on a safe range.
        std::vector<double> small(n);
        for (double& v : small) v = rng.uniform(-5.0, 5.0);
        const std::vector<double> expected = oracles::direct_softmax(small, 0.7);
        const std::vector<double> actual = softmax_t(small, 0.7);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(actual[i] == doctest::Approx(expected[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("lower temperature sharpens the distribution") {
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> logits(2 + rng.bounded(6));
        for (double& v : logits) v = rng.uniform(-4.0, 4.0);
        const auto max_prob = [&](double temperature) {
            const std::vector<double> probs = softmax_t(logits, temperature);
            return *std::max_element(probs.begin(), probs.end());
        };
        const double p_half = max_prob(0.5);
        const double p_one = max_prob(1.0);
        const double p_two = max_prob(2.0);
        CHECK(p_half >= p_one);
        CHECK(p_one >= p_two);
    }
}

TEST_CASE("ce_loss_t point values") {
    const std::vector<double> even{0.0, 0.0};
    for (double temperature : {0.5, 1.0, 3.0}) {
        CHECK(ce_loss_t(even, 0, temperature) ==
              doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }

    const std::vector<double> two{2.0, 0.0};
    const double expected = -std::log(oracles::direct_softmax(two, 0.5)[0]);
    CHECK(ce_loss_t(two, 0, 0.5) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ce_loss_t(two, 0, 0.5) == doctest::Approx(0.01815).epsilon(1e-3));
    CHECK_THROWS_AS(ce_loss_t(two, 2, 1.0), std::invalid_argument);
}

TEST_CASE("ce_loss_t decreases monotonically in the target logit") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(3);
        for (double& v : logits) v = rng.uniform(-3.0, 3.0);
        const double temperature = 0.25 + rng.uniform() * 3.0;
        double previous = ce_loss_t(logits, 0, temperature);
        for (int step = 0; step < 20; ++step) {
            logits[0] += 0.5;
            const double current = ce_loss_t(logits, 0, temperature);
            CHECK(current < previous);
            previous = current;
        }
    }
}

TEST_CASE("loss_grad_logits point values and zero-sum") {
    const std::vector<double> even{0.0, 0.0};
    const std::vector<double> g1 = loss_grad_logits(even, 0, 1.0);
    CHECK(g1[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(g1[1] == doctest::Approx(0.5).epsilon(1e-12));

    const std::vector<double> g2 = loss_grad_logits(even, 0, 0.5);
    CHECK(g2[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(g2[1] == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(2 + rng.bounded(7));
        for (double& v : logits) v = rng.uniform(-5.0, 5.0);
        const std::vector<double> grad =
            loss_grad_logits(logits, rng.bounded(logits.size()), 0.5 + rng.uniform());
        double sum = 0.0;
        for (double g : grad) sum += g;
        CHECK(std::abs(sum) < 1e-9);
    }
}

TEST_CASE("loss_grad_logits matches central finite differences") {
    Rng rng(2024);
    const double temperatures[] = {0.5, 1.0, 2.0};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.bounded(8);
        std::vector<double> logits(n);
        for (double& v : logits) v = rng.uniform(-5.0, 5.0);
        const std::size_t target = rng.bounded(n);
        const double temperature = temperatures[rng.bounded(3)];

        const std::vector<double> analytic = loss_grad_logits(logits, target, temperature);
        const std::vector<double> numeric = oracles::fd_loss_grad(logits, target, temperature);
        CHECK(oracles::vec_relative_error(analytic, numeric) < 1e-6);
    }
}

TEST_CASE("backprop matches finite differences on every parameter of a 2-3-2 net") {
    Rng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        NetParams params = init_params(tiny_spec(2, {3}, 2), 100 + trial);
        // Move biases off zero so their gradients are generic.
        for (Layer& layer : params.layers) {
            for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
        }
        const std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        const std::size_t target = rng.bounded(2);
        const double temperature = trial % 2 == 0 ? 1.0 : 0.5;

        const NetGrads grads = backprop(params, x, target, temperature);

        const double step = 1e-6;
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            auto check_param = [&](double& value, double analytic) {
                const double saved = value;
                value = saved + step;
                const double hi = ce_loss_t(forward(params, x).logits, target, temperature);
                value = saved - step;
                const double lo = ce_loss_t(forward(params, x).logits, target, temperature);
                value = saved;
                const double numeric = (hi - lo) / (2.0 * step);
                const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
                CHECK(std::abs(analytic - numeric) / scale < 1e-4);
            };
            for (std::size_t i = 0; i < params.layers[l].weights.size(); ++i) {
                check_param(params.layers[l].weights[i], grads.layers[l].weights[i]);
            }
            for (std::size_t i = 0; i < params.layers[l].bias.size(); ++i) {
                check_param(params.layers[l].bias[i], grads.layers[l].bias[i]);
            }
        }
    }
}

TEST_CASE("train with zero epochs returns the parameters unchanged") {
    const NetParams params = init_params(tiny_spec(2, {4}, 2), 3);
    TrainConfig cfg;
    cfg.epochs = 0;
    const std::vector<double> x{1.0, 2.0};
    const std::vector<TrainExample> data{{x, 0}};
    CHECK(same_params(train(params, data, cfg), params));
}

TEST_CASE("train rejects out-of-range labels") {
    const NetParams params = init_params(tiny_spec(2, {}, 2), 3);
    TrainConfig cfg;
    const std::vector<double> x{1.0, 2.0};
    const std::vector<TrainExample> data{{x, 2}};
    CHECK_THROWS_AS(train(params, data, cfg), std::invalid_argument);
}

TEST_CASE("train fits two linearly separable clusters perfectly") {
    Rng rng(8);
    std::vector<std::vector<double>> points;
    std::vector<TrainExample> data;
    for (int i = 0; i < 40; ++i) {
        points.push_back({rng.normal(-2.0, 0.3), rng.normal(-2.0, 0.3)});
        points.push_back({rng.normal(2.0, 0.3), rng.normal(2.0, 0.3)});
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        data.push_back({points[i], i % 2});
    }

    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 0.05;
    cfg.temperature = 1.0;
    cfg.batch_size = 16;
    cfg.seed = 4;
    const NetParams trained = train(init_params(tiny_spec(2, {8}, 2), 4), data, cfg);

    std::size_t correct = 0;
    for (const TrainExample& ex : data) {
        if (predict_class(trained, ex.x) == ex.label) ++correct;
    }
    CHECK(correct == data.size());
}

TEST_CASE("full-batch training loss is non-increasing on a convex instance") {
    Rng rng(19);
    std::vector<std::vector<double>> points;
    std::vector<TrainExample> data;
    for (int i = 0; i < 30; ++i) {
        points.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 1.0});
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        data.push_back({points[i], points[i][0] + points[i][1] > 0 ? 1u : 0u});
    }

    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 0.05;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    cfg.batch_size = data.size();  // full batch: plain gradient descent
    cfg.temperature = 1.0;
    NetParams params = init_params(tiny_spec(3, {}, 2), 21);

    const auto mean_loss = [&] {
        double total = 0.0;
        for (const TrainExample& ex : data) {
            total += ce_loss_t(forward(params, ex.x).logits, ex.label, 1.0);
        }
        return total / static_cast<double>(data.size());
    };

    double previous = mean_loss();
    for (int epoch = 0; epoch < 40; ++epoch) {
        cfg.seed = static_cast<std::uint64_t>(epoch);
        params = train(std::move(params), data, cfg);
        const double current = mean_loss();
        CHECK(current <= previous + 1e-12);
        previous = current;
    }
}

TEST_CASE("train is deterministic") {
    Rng rng(23);
    std::vector<std::vector<double>> points;
    std::vector<TrainExample> data;
    for (int i = 0; i < 50; ++i) {
        points.push_back({rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)});
        data.push_back({points.back(), rng.bounded(3)});
    }
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    cfg.seed = 99;
    const NetSpec spec = tiny_spec(2, {6}, 3, 0.2);
    const NetParams a = train(init_params(spec, 1), data, cfg);
    const NetParams b = train(init_params(spec, 1), data, cfg);
    CHECK(same_params(a, b));
}

TEST_CASE("train aborts with a diagnostic when parameters blow up") {
    Rng rng(29);
    std::vector<std::vector<double>> points;
    std::vector<TrainExample> data;
    for (int i = 0; i < 16; ++i) {
        points.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
        data.push_back({points.back(), rng.bounded(2)});
    }
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e80;  // guarantees overflow within a few steps
    cfg.weight_decay = 1e80;
    cfg.seed = 1;
    CHECK_THROWS_WITH_AS(train(init_params(tiny_spec(2, {4}, 2), 2), data, cfg),
                         doctest::Contains("epoch"), std::runtime_error);
}

TEST_CASE("predict_class breaks ties toward the smallest index") {
    const NetParams zero = zero_params(tiny_spec(3, {}, 4));
    const std::vector<double> x{0.4, -0.2, 1.0};
    CHECK(predict_class(zero, x) == 0);

    NetParams dominant = zero_params(tiny_spec(3, {}, 4));
    dominant.layers[0].bias[2] = 5.0;
    CHECK(predict_class(dominant, x) == 2);
}

TEST_CASE("predict_class agrees with the argmax of softmax_t at any temperature") {
    Rng rng(37);
    const NetParams params = init_params(tiny_spec(5, {7}, 4), 11);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> x(5);
        for (double& v : x) v = rng.uniform(-3.0, 3.0);
        const std::size_t predicted = predict_class(params, x);
        const double temperature = 0.1 + rng.uniform() * 5.0;
        const std::vector<double> probs = softmax_t(forward(params, x).logits, temperature);
        const std::size_t argmax = static_cast<std::size_t>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        CHECK(predicted == argmax);
    }
}

TEST_CASE("mc_dropout_probs invariants") {
    const std::vector<double> x{0.5, -1.0, 0.7};

    SUBCASE("no dropout: all samples identical") {
        const NetParams params = init_params(tiny_spec(3, {8}, 3, 0.0), 13);
        const auto samples = mc_dropout_probs(params, x, 10, 5);
        REQUIRE(samples.size() == 10);
        for (const auto& sample : samples) CHECK(sample == samples[0]);
    }

    SUBCASE("samples are simplex points and reproducible") {
        const NetParams params = init_params(tiny_spec(3, {8}, 3, 0.5), 13);
        const auto a = mc_dropout_probs(params, x, 10, 5);
        const auto b = mc_dropout_probs(params, x, 10, 5);
        CHECK(a == b);
        for (const auto& sample : a) {
            double sum = 0.0;
            for (double p : sample) sum += p;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("save/load round-trips parameters bitwise") {
    const NetParams params = init_params(tiny_spec(4, {5, 3}, 2, 0.25), 77);
    const std::string path = "/tmp/osal_test_params.bin";
    save_params(params, path);
    const NetParams loaded = load_params(path);
    CHECK(same_params(params, loaded));
    CHECK(loaded.spec.input_dim == 4);
    CHECK(loaded.spec.hidden_dims == std::vector<std::size_t>{5, 3});
    CHECK(loaded.spec.output_dim == 2);
    CHECK(loaded.spec.dropout_rate == 0.25);
    std::remove(path.c_str());
}

TEST_CASE("truncate_output keeps the leading logits") {
    const NetParams params = init_params(tiny_spec(3, {4}, 5), 3);
    const NetParams truncated = truncate_output(params, 3);
    const std::vector<double> x{0.2, -0.4, 0.9};
    const std::vector<double> full = forward(params, x).logits;
    const std::vector<double> head = forward(truncated, x).logits;
    REQUIRE(head.size() == 3);
    for (std::size_t i = 0; i < head.size(); ++i) CHECK(head[i] == full[i]);
}
