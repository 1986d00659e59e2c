#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace p2pfaas {

// Feed-forward architecture descriptor. Logistic regression is the
// zero-hidden-layer case; MLPs use tanh hidden activations and a linear
// output layer feeding softmax cross-entropy.
struct Architecture {
    std::vector<int> layer_sizes;  // [input_dim, hidden..., num_classes]

    static Architecture logistic_regression(int features, int classes);
    static Architecture mlp(std::vector<int> layer_sizes);

    int input_dim() const { return layer_sizes.front(); }
    int num_classes() const { return layer_sizes.back(); }
    std::size_t num_layers() const { return layer_sizes.size() - 1; }
    bool is_logistic_regression() const { return layer_sizes.size() == 2; }

    // Total number of parameters: sum over layers of fan_in*fan_out + fan_out.
    std::size_t param_count() const;

    // Throws ConfigError on non-positive dimensions or fewer than 2 classes.
    void validate() const;

    std::string to_string() const;

    bool operator==(const Architecture&) const = default;
};

struct ModelParams {
    std::vector<double> values;  // layer-major: weights row-major, then biases
    Architecture arch;
    std::int64_t version = 0;
};

struct GradientVector {
    std::vector<double> values;      // same length/ordering as the model it came from
    std::int64_t source_version = 0;
    std::int64_t batch_count = 1;
};

struct Batch {
    std::vector<double> features;  // row-major, rows() x feature_dim
    std::vector<std::int32_t> labels;
    std::int64_t batch_id = 0;
    int feature_dim = 0;

    std::size_t rows() const { return labels.size(); }
};

struct LossValue {
    double value = 0.0;
    std::int64_t sample_count = 0;
};

struct Evaluation {
    LossValue loss;
    double accuracy = 0.0;  // top-1, in [0, 1]
};

// Draws every parameter of layer l from uniform(-r, r) with r = 1/sqrt(fan_in).
// Deterministic for a fixed seed; version starts at 0.
ModelParams init_model(const Architecture& arch, std::uint64_t seed);

// Gradient of the mean softmax cross-entropy over the batch w.r.t. the model
// parameters. Pure and deterministic; batch_count = 1, source_version =
// model.version.
GradientVector compute_batch_gradient(const ModelParams& model, const Batch& batch);

// Element-wise arithmetic mean. Inputs must be non-empty, same length and
// same source_version; batch_count of the result is the sum of the inputs'.
GradientVector average_batch_gradients(const std::vector<GradientVector>& grads);

// theta' = theta - lr * grad, version incremented. grad.source_version must
// equal model.version.
ModelParams apply_update(const ModelParams& model, const GradientVector& grad, double lr);

// Mean cross-entropy and top-1 accuracy over all samples of all batches.
Evaluation evaluate(const ModelParams& model, const std::vector<Batch>& dataset);

namespace detail {
// Mean cross-entropy loss of one batch; shared by evaluate() and the
// finite-difference tests.
double batch_loss(const Architecture& arch, std::span<const double> params, const Batch& batch);
}  // namespace detail

}  // namespace p2pfaas
