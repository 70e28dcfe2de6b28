#include "osal/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "osal/rng.hpp"

namespace osal {

namespace {

std::vector<std::size_t> layer_dims(const NetSpec& spec) {
    std::vector<std::size_t> dims;
    dims.reserve(spec.hidden_dims.size() + 2);
    dims.push_back(spec.input_dim);
    dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
    dims.push_back(spec.output_dim);
    return dims;
}

void check_input(const NetParams& params, std::span<const double> x) {
    if (x.size() != params.spec.input_dim) {
        throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                    " dims, net expects " +
                                    std::to_string(params.spec.input_dim));
    }
}

// Bernoulli keep/drop mask with inverted-dropout scaling. mask[i] is the
// multiplier applied to hidden unit i.
std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng) {
    std::vector<double> mask(n);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    return mask;
}

struct ForwardTrace {
    // activations[l] is the input of layer l; activations.back() is the logits.
    std::vector<std::vector<double>> activations;
    // masks[l] is the dropout mask applied after the ReLU of hidden layer l
    // (empty when dropout is off).
    std::vector<std::vector<double>> masks;
};

ForwardTrace forward_trace(const NetParams& params, std::span<const double> x,
                           std::optional<std::uint64_t> dropout_seed) {
    ForwardTrace trace;
    trace.activations.emplace_back(x.begin(), x.end());
    const bool use_dropout = dropout_seed.has_value() && params.spec.dropout_rate > 0.0;
    Rng mask_rng(use_dropout ? *dropout_seed : 0);

    const std::size_t n_layers = params.layers.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Layer& layer = params.layers[l];
        const std::vector<double>& in = trace.activations.back();
        std::vector<double> out(layer.out);
        for (std::size_t r = 0; r < layer.out; ++r) {
            double acc = layer.bias[r];
            const double* w = layer.weights.data() + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c) acc += w[c] * in[c];
            out[r] = acc;
        }
        const bool hidden = l + 1 < n_layers;
        if (hidden) {
            for (double& v : out) v = v > 0.0 ? v : 0.0;
            if (use_dropout) {
                std::vector<double> mask = dropout_mask(out.size(), params.spec.dropout_rate, mask_rng);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
                trace.masks.push_back(std::move(mask));
            } else {
                trace.masks.emplace_back();
            }
        }
        trace.activations.push_back(std::move(out));
    }
    return trace;
}

double logsumexp_scaled(std::span<const double> logits, double temperature, double max_logit) {
    double sum = 0.0;
    for (double a : logits) sum += std::exp((a - max_logit) / temperature);
    return std::log(sum);
}

void check_finite(const NetParams& params, std::size_t epoch, std::size_t batch) {
    for (const Layer& layer : params.layers) {
        for (double w : layer.weights) {
            if (!std::isfinite(w)) {
                throw std::runtime_error("train: non-finite weight after epoch " +
                                         std::to_string(epoch) + " batch " +
                                         std::to_string(batch));
            }
        }
        for (double b : layer.bias) {
            if (!std::isfinite(b)) {
                throw std::runtime_error("train: non-finite bias after epoch " +
                                         std::to_string(epoch) + " batch " +
                                         std::to_string(batch));
            }
        }
    }
}

NetGrads zero_grads(const NetParams& params) {
    NetGrads grads;
    grads.layers.reserve(params.layers.size());
    for (const Layer& layer : params.layers) {
        Layer g;
        g.in = layer.in;
        g.out = layer.out;
        g.weights.assign(layer.weights.size(), 0.0);
        g.bias.assign(layer.bias.size(), 0.0);
        grads.layers.push_back(std::move(g));
    }
    return grads;
}

// Backward pass from a recorded forward trace; accumulates scaled gradients
// into grads (grads += scale * dLoss/dParam).
void accumulate_backprop(const NetParams& params, const ForwardTrace& trace,
                         std::size_t target_class, double temperature, double scale,
                         NetGrads& grads) {
    const std::vector<double>& logits = trace.activations.back();
    std::vector<double> delta = loss_grad_logits(logits, target_class, temperature);

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const Layer& layer = params.layers[l];
        Layer& g = grads.layers[l];
        const std::vector<double>& in = trace.activations[l];

        for (std::size_t r = 0; r < layer.out; ++r) {
            const double d = delta[r];
            g.bias[r] += scale * d;
            double* gw = g.weights.data() + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c) gw[c] += scale * d * in[c];
        }
        if (l == 0) break;

        // Propagate through the linear layer, then the dropout mask and the
        // ReLU of hidden layer l-1. in == post-ReLU post-mask activation, so
        // in > 0 identifies units that were both active and kept.
        std::vector<double> prev(layer.in, 0.0);
        for (std::size_t r = 0; r < layer.out; ++r) {
            const double d = delta[r];
            const double* w = layer.weights.data() + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c) prev[c] += d * w[c];
        }
        const std::vector<double>& mask = trace.masks[l - 1];
        for (std::size_t c = 0; c < layer.in; ++c) {
            if (in[c] > 0.0) {
                prev[c] *= mask.empty() ? 1.0 : mask[c];
            } else {
                prev[c] = 0.0;
            }
        }
        delta = std::move(prev);
    }
}

}  // namespace

void NetSpec::validate() const {
    if (input_dim == 0) throw std::invalid_argument("NetSpec: input_dim must be positive");
    if (output_dim < 2) throw std::invalid_argument("NetSpec: output_dim must be >= 2");
    for (std::size_t h : hidden_dims) {
        if (h == 0) throw std::invalid_argument("NetSpec: hidden dims must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw std::invalid_argument("NetSpec: dropout_rate must be in [0, 1)");
    }
}

NetParams init_params(const NetSpec& spec, std::uint64_t seed) {
    spec.validate();
    NetParams params;
    params.spec = spec;
    Rng rng(seed);

    const std::vector<std::size_t> dims = layer_dims(spec);
    params.layers.reserve(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.weights.resize(layer.in * layer.out);
        layer.bias.assign(layer.out, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (double& w : layer.weights) w = rng.uniform(-bound, bound);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

ForwardResult forward(const NetParams& params, std::span<const double> x,
                      std::optional<std::uint64_t> dropout_seed) {
    check_input(params, x);
    ForwardTrace trace = forward_trace(params, x, dropout_seed);
    ForwardResult result;
    result.logits = std::move(trace.activations.back());
    trace.activations.pop_back();
    result.penultimate = std::move(trace.activations.back());
    return result;
}

std::vector<double> softmax_t(std::span<const double> logits, double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("softmax_t: temperature must be > 0");
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp((logits[i] - max_logit) / temperature);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

double ce_loss_t(std::span<const double> logits, std::size_t target_class,
                 double temperature) {
    if (target_class >= logits.size()) {
        throw std::invalid_argument("ce_loss_t: target class out of range");
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    const double target = logits[target_class];
    if (target == max_logit) {
        // log1p form keeps the loss relatively accurate when it is tiny
        // (dominant target logit), which finite-difference checks rely on.
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.size(); ++j) {
            if (j != target_class) sum += std::exp((logits[j] - target) / temperature);
        }
        return std::log1p(sum);
    }
    return logsumexp_scaled(logits, temperature, max_logit) -
           (target - max_logit) / temperature;
}

std::vector<double> loss_grad_logits(std::span<const double> logits,
                                     std::size_t target_class, double temperature) {
    if (target_class >= logits.size()) {
        throw std::invalid_argument("loss_grad_logits: target class out of range");
    }
    std::vector<double> grad = softmax_t(logits, temperature);
    grad[target_class] -= 1.0;
    for (double& g : grad) g /= temperature;
    return grad;
}

NetGrads backprop(const NetParams& params, std::span<const double> x,
                  std::size_t target_class, double temperature,
                  std::optional<std::uint64_t> dropout_seed) {
    check_input(params, x);
    NetGrads grads = zero_grads(params);
    ForwardTrace trace = forward_trace(params, x, dropout_seed);
    accumulate_backprop(params, trace, target_class, temperature, 1.0, grads);
    return grads;
}

NetParams train(NetParams params, std::span<const TrainExample> data,
                const TrainConfig& cfg) {
    if (cfg.epochs == 0 || data.empty()) return params;
    if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
    if (cfg.temperature <= 0.0) throw std::invalid_argument("train: temperature must be > 0");
    for (const TrainExample& ex : data) {
        if (ex.label >= params.spec.output_dim) {
            throw std::invalid_argument("train: label " + std::to_string(ex.label) +
                                        " out of range for output_dim " +
                                        std::to_string(params.spec.output_dim));
        }
    }

    NetGrads velocity = zero_grads(params);
    Rng shuffle_rng(cfg.seed);
    Rng mask_seed_rng(mix_seed(cfg.seed, 1));
    const bool use_dropout = params.spec.dropout_rate > 0.0;

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            const double inv_batch = 1.0 / static_cast<double>(end - start);

            NetGrads grads = zero_grads(params);
            for (std::size_t i = start; i < end; ++i) {
                const TrainExample& ex = data[order[i]];
                check_input(params, ex.x);
                std::optional<std::uint64_t> mask_seed;
                if (use_dropout) mask_seed = mask_seed_rng.next_u64();
                ForwardTrace trace = forward_trace(params, ex.x, mask_seed);
                accumulate_backprop(params, trace, ex.label, cfg.temperature, inv_batch, grads);
            }

            for (std::size_t l = 0; l < params.layers.size(); ++l) {
                Layer& layer = params.layers[l];
                Layer& g = grads.layers[l];
                Layer& v = velocity.layers[l];
                for (std::size_t i = 0; i < layer.weights.size(); ++i) {
                    const double grad = g.weights[i] + cfg.weight_decay * layer.weights[i];
                    v.weights[i] = cfg.momentum * v.weights[i] + grad;
                    layer.weights[i] -= cfg.learning_rate * v.weights[i];
                }
                for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                    const double grad = g.bias[i] + cfg.weight_decay * layer.bias[i];
                    v.bias[i] = cfg.momentum * v.bias[i] + grad;
                    layer.bias[i] -= cfg.learning_rate * v.bias[i];
                }
            }
            check_finite(params, epoch, batch_index);
        }
    }
    return params;
}

std::size_t predict_class(const NetParams& params, std::span<const double> x) {
    const ForwardResult result = forward(params, x);
    const auto max_it = std::max_element(result.logits.begin(), result.logits.end());
    return static_cast<std::size_t>(max_it - result.logits.begin());
}

std::vector<std::vector<double>> mc_dropout_probs(const NetParams& params,
                                                  std::span<const double> x,
                                                  std::size_t n_samples,
                                                  std::uint64_t seed) {
    std::vector<std::vector<double>> samples;
    samples.reserve(n_samples);
    Rng seed_rng(seed);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const ForwardResult result = forward(params, x, seed_rng.next_u64());
        samples.push_back(softmax_t(result.logits, 1.0));
    }
    return samples;
}

namespace {

void write_u64(std::ofstream& out, std::uint64_t v) {
    // Host is little-endian; the format is defined as little-endian.
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ofstream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

double read_f64(std::ifstream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_params(const NetParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_params: cannot open " + path);

    const std::vector<std::size_t> dims = layer_dims(params.spec);
    write_u64(out, dims.size());
    for (std::size_t d : dims) write_u64(out, d);
    write_f64(out, params.spec.dropout_rate);
    for (const Layer& layer : params.layers) {
        for (double w : layer.weights) write_f64(out, w);
        for (double b : layer.bias) write_f64(out, b);
    }
    if (!out) throw std::runtime_error("save_params: write failed for " + path);
}

NetParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_params: cannot open " + path);

    const std::uint64_t n_dims = read_u64(in);
    if (!in || n_dims < 2 || n_dims > 1024) {
        throw std::runtime_error("load_params: bad shape header in " + path);
    }
    std::vector<std::size_t> dims(n_dims);
    for (std::size_t& d : dims) d = read_u64(in);

    NetSpec spec;
    spec.input_dim = dims.front();
    spec.hidden_dims.assign(dims.begin() + 1, dims.end() - 1);
    spec.output_dim = dims.back();
    spec.dropout_rate = read_f64(in);
    spec.validate();

    NetParams params;
    params.spec = spec;
    params.layers.reserve(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.weights.resize(layer.in * layer.out);
        layer.bias.resize(layer.out);
        for (double& w : layer.weights) w = read_f64(in);
        for (double& b : layer.bias) b = read_f64(in);
        params.layers.push_back(std::move(layer));
    }
    if (!in) throw std::runtime_error("load_params: truncated file " + path);
    return params;
}

NetParams truncate_output(const NetParams& params, std::size_t keep_outputs) {
    if (keep_outputs == 0 || keep_outputs > params.spec.output_dim) {
        throw std::invalid_argument("truncate_output: bad output count");
    }
    NetParams truncated = params;
    truncated.spec.output_dim = keep_outputs;
    Layer& last = truncated.layers.back();
    last.out = keep_outputs;
    last.weights.resize(keep_outputs * last.in);
    last.bias.resize(keep_outputs);
    return truncated;
}

}  // namespace osal
