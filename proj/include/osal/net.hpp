#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace osal {

// Architecture of a small fully-connected ReLU network. output_dim is K for
// the classifier and K+1 for the detector (the extra logit is the unknown
// class). hidden_dims may be empty, giving a single linear layer.
struct NetSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t output_dim = 0;
    double dropout_rate = 0.0;

    void validate() const;  // throws std::invalid_argument on a bad spec
};

// SGD hyperparameters. The defaults follow the usual recipe for this kind of
// experiment: momentum 0.9, weight decay 5e-4, lr 0.01, batch size 128.
// temperature divides the logits inside the softmax of the training loss;
// 0.5 sharpens the detector's output distribution, the classifier runs at 1.
struct TrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t batch_size = 128;
    double temperature = 0.5;
    std::uint64_t seed = 0;
};

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // row-major, out x in
    std::vector<double> bias;     // out
};

struct NetParams {
    NetSpec spec;
    std::vector<Layer> layers;

    std::size_t input_dim() const { return spec.input_dim; }
    std::size_t output_dim() const { return spec.output_dim; }
};

struct ForwardResult {
    std::vector<double> logits;       // output_dim activations of the last layer
    std::vector<double> penultimate;  // input to the last layer (last hidden
                                      // activation, or x itself with no hidden layers)
};

struct TrainExample {
    std::span<const double> x;
    std::size_t label = 0;
};

// Gradients with the same shapes as the parameters they belong to.
struct NetGrads {
    std::vector<Layer> layers;
};

// Fresh parameters: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
// biases zero. Deterministic for a fixed (spec, seed).
NetParams init_params(const NetSpec& spec, std::uint64_t seed);

// Plain forward pass. When dropout_seed is set and spec.dropout_rate > 0,
// each hidden unit is zeroed with probability dropout_rate and survivors are
// scaled by 1/(1 - dropout_rate) (inverted dropout).
ForwardResult forward(const NetParams& params, std::span<const double> x,
                      std::optional<std::uint64_t> dropout_seed = std::nullopt);

// Temperature-scaled softmax q_c = exp(a_c/T) / sum_j exp(a_j/T), computed
// with max subtraction. Preserves the argmax for any T > 0.
std::vector<double> softmax_t(std::span<const double> logits, double temperature);

// -log q_target under softmax_t, evaluated in log space.
double ce_loss_t(std::span<const double> logits, std::size_t target_class,
                 double temperature);

// Exact gradient of ce_loss_t with respect to the logits:
// (1/T) * (softmax_t(logits, T) - onehot(target)). Components sum to zero.
std::vector<double> loss_grad_logits(std::span<const double> logits,
                                     std::size_t target_class, double temperature);

// Full backward pass for one example; returns per-parameter gradients of
// ce_loss_t(forward(x), target, T). The optional dropout seed must match the
// forward pass being differentiated.
NetGrads backprop(const NetParams& params, std::span<const double> x,
                  std::size_t target_class, double temperature,
                  std::optional<std::uint64_t> dropout_seed = std::nullopt);

// Mini-batch SGD with momentum and L2 weight decay. Shuffles each epoch from
// cfg.seed, batches the shuffled order, averages gradients over the batch.
// Training uses dropout when spec.dropout_rate > 0, with per-example mask
// seeds derived from cfg.seed. Throws std::runtime_error naming the
// epoch/batch if a parameter turns NaN/Inf.
NetParams train(NetParams params, std::span<const TrainExample> data,
                const TrainConfig& cfg);

// Argmax of the logits; ties break toward the smallest class index.
std::size_t predict_class(const NetParams& params, std::span<const double> x);

// n_samples stochastic forward passes through softmax_t with T=1, mask seeds
// derived from seed. With dropout_rate == 0 all samples are identical.
std::vector<std::vector<double>> mc_dropout_probs(const NetParams& params,
                                                  std::span<const double> x,
                                                  std::size_t n_samples,
                                                  std::uint64_t seed);

// Checkpoint format: shape header (u64 dimension count, the dimensions, f64
// dropout rate) followed by the flat parameters, all 64-bit little-endian.
void save_params(const NetParams& params, const std::string& path);
NetParams load_params(const std::string& path);

// K-output view of a K+1-output network: drops the trailing rows of the last
// layer. Used by the shared-network ablation, where the detector's first K
// logits stand in for the classifier.
NetParams truncate_output(const NetParams& params, std::size_t keep_outputs);

}  // namespace osal
