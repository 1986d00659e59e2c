#include "p2pfaas/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/rng.hpp"

namespace p2pfaas {

namespace {

bool all_finite(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

// Per-layer views into the flat parameter vector.
struct LayerView {
    const double* weights;  // fan_in x fan_out, row-major
    const double* biases;   // fan_out
    int fan_in;
    int fan_out;
};

std::vector<LayerView> layer_views(const Architecture& arch, std::span<const double> params) {
    std::vector<LayerView> views;
    views.reserve(arch.num_layers());
    const double* p = params.data();
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        const int fan_in = arch.layer_sizes[l];
        const int fan_out = arch.layer_sizes[l + 1];
        LayerView v{p, p + static_cast<std::size_t>(fan_in) * fan_out, fan_in, fan_out};
        views.push_back(v);
        p += static_cast<std::size_t>(fan_in) * fan_out + fan_out;
    }
    return views;
}

// Runs one sample through the network. `activations[l]` holds the layer-l
// output (activations[0] is the input); returns the output logits.
std::vector<double> forward_sample(const std::vector<LayerView>& layers, std::span<const double> x,
                                   std::vector<std::vector<double>>* activations) {
    std::vector<double> current(x.begin(), x.end());
    if (activations) {
        activations->clear();
        activations->push_back(current);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerView& lay = layers[l];
        std::vector<double> next(static_cast<std::size_t>(lay.fan_out));
        for (int j = 0; j < lay.fan_out; ++j) {
            double z = lay.biases[j];
            for (int i = 0; i < lay.fan_in; ++i) {
                z += current[static_cast<std::size_t>(i)] * lay.weights[static_cast<std::size_t>(i) * lay.fan_out + j];
            }
            next[static_cast<std::size_t>(j)] = z;
        }
        const bool hidden = l + 1 < layers.size();
        if (hidden) {
            for (double& v : next) v = std::tanh(v);
        }
        current = std::move(next);
        if (activations) activations->push_back(current);
    }
    return current;
}

// Stable softmax cross-entropy: returns loss and fills `probs`.
double softmax_cross_entropy(std::span<const double> logits, int label, std::vector<double>* probs) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double lse = std::log(sum);
    if (probs) {
        probs->resize(logits.size());
        for (std::size_t j = 0; j < logits.size(); ++j) {
            (*probs)[j] = std::exp(logits[j] - zmax - lse);
        }
    }
    return lse - (logits[static_cast<std::size_t>(label)] - zmax);
}

void check_batch_against_arch(const Architecture& arch, const Batch& batch) {
    if (batch.feature_dim != arch.input_dim()) {
        std::ostringstream os;
        os << "batch feature_dim " << batch.feature_dim << " does not match architecture input dim "
           << arch.input_dim();
        throw ShapeError(os.str());
    }
    if (batch.rows() == 0) throw ValidationError("empty batch");
    if (batch.features.size() != batch.rows() * static_cast<std::size_t>(batch.feature_dim)) {
        throw ShapeError("batch features size does not match rows x feature_dim");
    }
    for (std::int32_t y : batch.labels) {
        if (y < 0 || y >= arch.num_classes()) {
            std::ostringstream os;
            os << "label " << y << " outside [0, " << arch.num_classes() << ")";
            throw ValidationError(os.str());
        }
    }
}

}  // namespace

Architecture Architecture::logistic_regression(int features, int classes) {
    Architecture arch{{features, classes}};
    arch.validate();
    return arch;
}

Architecture Architecture::mlp(std::vector<int> layer_sizes) {
    Architecture arch{std::move(layer_sizes)};
    arch.validate();
    return arch;
}

std::size_t Architecture::param_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        count += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
    }
    return count;
}

void Architecture::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("architecture needs at least input and output layers");
    for (int s : layer_sizes) {
        if (s <= 0) throw ConfigError("architecture layer sizes must be positive");
    }
    if (layer_sizes.back() < 2) throw ConfigError("architecture needs at least 2 classes");
}

std::string Architecture::to_string() const {
    std::ostringstream os;
    if (is_logistic_regression()) {
        os << "logistic-regression(d=" << input_dim() << ",k=" << num_classes() << ")";
    } else {
        os << "mlp(";
        for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
            if (i) os << "-";
            os << layer_sizes[i];
        }
        os << ")";
    }
    return os.str();
}

ModelParams init_model(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng(seed);
    ModelParams model;
    model.arch = arch;
    model.version = 0;
    model.values.reserve(arch.param_count());
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        const int fan_in = arch.layer_sizes[l];
        const int fan_out = arch.layer_sizes[l + 1];
        const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
        const std::size_t layer_params = static_cast<std::size_t>(fan_in) * fan_out + fan_out;
        for (std::size_t i = 0; i < layer_params; ++i) {
            model.values.push_back(rng.uniform(-r, r));
        }
    }
    return model;
}

GradientVector compute_batch_gradient(const ModelParams& model, const Batch& batch) {
    const Architecture& arch = model.arch;
    check_batch_against_arch(arch, batch);
    if (model.values.size() != arch.param_count()) throw ShapeError("model values length does not match architecture");
    if (!all_finite(model.values)) throw NumericError("model parameters contain non-finite values");

    const auto layers = layer_views(arch, model.values);
    GradientVector grad;
    grad.values.assign(model.values.size(), 0.0);
    grad.source_version = model.version;
    grad.batch_count = 1;

    // Offsets of each layer's weight block in the flat vector.
    std::vector<std::size_t> offsets(layers.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        offsets[l] = off;
        off += static_cast<std::size_t>(layers[l].fan_in) * layers[l].fan_out + layers[l].fan_out;
    }

    std::vector<std::vector<double>> activations;
    std::vector<double> probs;
    const std::size_t rows = batch.rows();
    for (std::size_t rix = 0; rix < rows; ++rix) {
        std::span<const double> x(batch.features.data() + rix * static_cast<std::size_t>(batch.feature_dim),
                                  static_cast<std::size_t>(batch.feature_dim));
        const std::vector<double> logits = forward_sample(layers, x, &activations);
        softmax_cross_entropy(logits, batch.labels[rix], &probs);

        // delta at the output layer of softmax cross-entropy: p - onehot(y).
        std::vector<double> delta = probs;
        delta[static_cast<std::size_t>(batch.labels[rix])] -= 1.0;

        for (std::size_t l = layers.size(); l-- > 0;) {
            const LayerView& lay = layers[l];
            double* dw = grad.values.data() + offsets[l];
            double* db = dw + static_cast<std::size_t>(lay.fan_in) * lay.fan_out;
            const std::vector<double>& a_in = activations[l];
            for (int j = 0; j < lay.fan_out; ++j) {
                db[j] += delta[static_cast<std::size_t>(j)];
                for (int i = 0; i < lay.fan_in; ++i) {
                    dw[static_cast<std::size_t>(i) * lay.fan_out + j] +=
                        a_in[static_cast<std::size_t>(i)] * delta[static_cast<std::size_t>(j)];
                }
            }
            if (l > 0) {
                std::vector<double> prev(static_cast<std::size_t>(lay.fan_in), 0.0);
                for (int i = 0; i < lay.fan_in; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < lay.fan_out; ++j) {
                        s += lay.weights[static_cast<std::size_t>(i) * lay.fan_out + j] *
                             delta[static_cast<std::size_t>(j)];
                    }
                    const double a = a_in[static_cast<std::size_t>(i)];
                    prev[static_cast<std::size_t>(i)] = s * (1.0 - a * a);  // tanh'
                }
                delta = std::move(prev);
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(rows);
    for (double& g : grad.values) g *= inv;
    if (!all_finite(grad.values)) throw NumericError("gradient contains non-finite values");
    return grad;
}

GradientVector average_batch_gradients(const std::vector<GradientVector>& grads) {
    if (grads.empty()) throw ValidationError("cannot average an empty gradient list");
    const std::size_t len = grads.front().values.size();
    const std::int64_t version = grads.front().source_version;
    GradientVector out;
    out.values.assign(len, 0.0);
    out.source_version = version;
    out.batch_count = 0;
    for (const GradientVector& g : grads) {
        if (g.values.size() != len) throw ShapeError("gradient length mismatch in average");
        if (g.source_version != version) {
            std::ostringstream os;
            os << "stale gradient: source_version " << g.source_version << " != " << version;
            throw StalenessError(os.str());
        }
        for (std::size_t i = 0; i < len; ++i) out.values[i] += g.values[i];
        out.batch_count += g.batch_count;
    }
    const double inv = 1.0 / static_cast<double>(grads.size());
    for (double& v : out.values) v *= inv;
    return out;
}

ModelParams apply_update(const ModelParams& model, const GradientVector& grad, double lr) {
    if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
    if (grad.values.size() != model.values.size()) throw ShapeError("gradient length does not match model");
    if (grad.source_version != model.version) {
        std::ostringstream os;
        os << "stale gradient: source_version " << grad.source_version << " != model version " << model.version;
        throw StalenessError(os.str());
    }
    ModelParams next = model;
    for (std::size_t i = 0; i < next.values.size(); ++i) {
        next.values[i] = model.values[i] - lr * grad.values[i];
    }
    next.version = model.version + 1;
    if (!all_finite(next.values)) throw NumericError("model parameters non-finite after update");
    return next;
}

Evaluation evaluate(const ModelParams& model, const std::vector<Batch>& dataset) {
    if (dataset.empty()) throw ValidationError("cannot evaluate on an empty dataset");
    if (model.values.size() != model.arch.param_count()) {
        throw ShapeError("model values length does not match architecture");
    }
    const auto layers = layer_views(model.arch, model.values);
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    std::int64_t total = 0;
    for (const Batch& batch : dataset) {
        check_batch_against_arch(model.arch, batch);
        for (std::size_t rix = 0; rix < batch.rows(); ++rix) {
            std::span<const double> x(batch.features.data() + rix * static_cast<std::size_t>(batch.feature_dim),
                                      static_cast<std::size_t>(batch.feature_dim));
            const std::vector<double> logits = forward_sample(layers, x, nullptr);
            loss_sum += softmax_cross_entropy(logits, batch.labels[rix], nullptr);
            const auto argmax = std::max_element(logits.begin(), logits.end()) - logits.begin();
            if (argmax == batch.labels[rix]) ++correct;
            ++total;
        }
    }
    Evaluation ev;
    ev.loss = LossValue{loss_sum / static_cast<double>(total), total};
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return ev;
}

namespace detail {

double batch_loss(const Architecture& arch, std::span<const double> params, const Batch& batch) {
    check_batch_against_arch(arch, batch);
    const auto layers = layer_views(arch, params);
    double loss_sum = 0.0;
    for (std::size_t rix = 0; rix < batch.rows(); ++rix) {
        std::span<const double> x(batch.features.data() + rix * static_cast<std::size_t>(batch.feature_dim),
                                  static_cast<std::size_t>(batch.feature_dim));
        const std::vector<double> logits = forward_sample(layers, x, nullptr);
        loss_sum += softmax_cross_entropy(logits, batch.labels[rix], nullptr);
    }
    return loss_sum / static_cast<double>(batch.rows());
}

}  // namespace detail

}  // namespace p2pfaas
