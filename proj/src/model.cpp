#include "fedquant/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedquant/errors.hpp"

namespace fedquant {

ModelSpec ModelSpec::mlp(const std::vector<std::uint32_t>& widths) {
    if (widths.size() < 2) {
        throw input_error("ModelSpec::mlp: need at least input and output widths");
    }
    ModelSpec spec;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const bool head = (i + 2 == widths.size());
        spec.layers.push_back(
            {widths[i], widths[i + 1], head ? Activation::identity : Activation::relu});
    }
    spec.validate();
    return spec;
}

std::vector<std::size_t> ModelSpec::layer_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(layers.size());
    for (const auto& l : layers) {
        dims.push_back(static_cast<std::size_t>(l.inputs) * l.outputs + l.outputs);
    }
    return dims;
}

std::size_t ModelSpec::total_dim() const {
    const auto dims = layer_dims();
    return std::accumulate(dims.begin(), dims.end(), std::size_t{0});
}

std::uint32_t ModelSpec::input_width() const {
    return layers.empty() ? 0 : layers.front().inputs;
}

std::uint32_t ModelSpec::class_count() const {
    return layers.empty() ? 0 : layers.back().outputs;
}

void ModelSpec::validate() const {
    if (layers.empty()) {
        throw input_error("ModelSpec::validate: no layers");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].inputs == 0 || layers[i].outputs == 0) {
            throw input_error("ModelSpec::validate: zero layer width");
        }
        if (i > 0 && layers[i].inputs != layers[i - 1].outputs) {
            throw input_error("ModelSpec::validate: adjacent layer widths do not chain");
        }
    }
}

namespace {

void check_shapes(const ModelSpec& spec, const Parameters& params, const char* where) {
    const auto dims = spec.layer_dims();
    if (params.per_layer.size() != dims.size()) {
        throw input_error(std::string(where) + ": layer count mismatch");
    }
    for (std::size_t l = 0; l < dims.size(); ++l) {
        if (params.per_layer[l].size() != dims[l]) {
            throw input_error(std::string(where) + ": layer size mismatch");
        }
    }
}

// Forward pass for one sample; activations returned per layer (post-act).
// Everything internal runs in double; parameters stay f32.
struct Workspace {
    std::vector<std::vector<double>> acts; // acts[0] = input
    std::vector<std::vector<double>> zs;   // pre-activation per layer
    std::vector<double> probs;
    std::vector<std::vector<double>> deltas;
};

void forward(const ModelSpec& spec, const Parameters& params, const float* x, Workspace& ws) {
    const std::size_t L = spec.layer_count();
    ws.acts.resize(L + 1);
    ws.zs.resize(L);
    ws.acts[0].assign(x, x + spec.input_width());
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = spec.layers[l];
        const auto& w = params.per_layer[l];
        const auto& in = ws.acts[l];
        auto& z = ws.zs[l];
        z.assign(layer.outputs, 0.0);
        for (std::uint32_t o = 0; o < layer.outputs; ++o) {
            double acc = static_cast<double>(w[static_cast<std::size_t>(layer.outputs) * layer.inputs + o]);
            const float* wrow = w.data() + static_cast<std::size_t>(o) * layer.inputs;
            for (std::uint32_t i = 0; i < layer.inputs; ++i) {
                acc += static_cast<double>(wrow[i]) * in[i];
            }
            z[o] = acc;
        }
        auto& out = ws.acts[l + 1];
        out.resize(layer.outputs);
        if (layer.activation == Activation::relu) {
            for (std::uint32_t o = 0; o < layer.outputs; ++o) {
                out[o] = z[o] > 0.0 ? z[o] : 0.0;
            }
        } else {
            out = z;
        }
    }
}

// Softmax cross-entropy on the final activations; fills ws.probs.
double sample_loss(const std::vector<double>& logits, std::int32_t label, Workspace& ws) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    ws.probs.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        ws.probs[i] = std::exp(logits[i] - m);
        sum += ws.probs[i];
    }
    for (auto& p : ws.probs) {
        p /= sum;
    }
    return -(logits[static_cast<std::size_t>(label)] - m - std::log(sum));
}

void backward(const ModelSpec& spec, const Parameters& params, std::int32_t label, Workspace& ws,
              std::vector<std::vector<double>>& grad_acc) {
    const std::size_t L = spec.layer_count();
    ws.deltas.resize(L);
    // dL/dlogits = softmax - onehot.
    auto& top = ws.deltas[L - 1];
    top = ws.probs;
    top[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t l = L; l-- > 0;) {
        const auto& layer = spec.layers[l];
        const auto& w = params.per_layer[l];
        const auto& delta = ws.deltas[l];
        const auto& in = ws.acts[l];
        auto& g = grad_acc[l];
        for (std::uint32_t o = 0; o < layer.outputs; ++o) {
            const double d = delta[o];
            double* grow = g.data() + static_cast<std::size_t>(o) * layer.inputs;
            for (std::uint32_t i = 0; i < layer.inputs; ++i) {
                grow[i] += d * in[i];
            }
            g[static_cast<std::size_t>(layer.outputs) * layer.inputs + o] += d;
        }
        if (l > 0) {
            auto& prev = ws.deltas[l - 1];
            prev.assign(layer.inputs, 0.0);
            for (std::uint32_t o = 0; o < layer.outputs; ++o) {
                const double d = delta[o];
                const float* wrow = w.data() + static_cast<std::size_t>(o) * layer.inputs;
                for (std::uint32_t i = 0; i < layer.inputs; ++i) {
                    prev[i] += static_cast<double>(wrow[i]) * d;
                }
            }
            if (spec.layers[l - 1].activation == Activation::relu) {
                // relu' at z <= 0 is 0 (convention at the kink).
                const auto& z = ws.zs[l - 1];
                for (std::uint32_t i = 0; i < layer.inputs; ++i) {
                    if (z[i] <= 0.0) {
                        prev[i] = 0.0;
                    }
                }
            }
        }
    }
}

std::pair<double, Update> loss_and_grad_indices(const ModelSpec& spec, const Parameters& params,
                                                const Dataset& data,
                                                const std::vector<std::uint32_t>& idx) {
    if (idx.empty()) {
        throw input_error("loss_and_grad: empty batch");
    }
    if (data.feature_dim != spec.input_width()) {
        throw input_error("loss_and_grad: feature_dim does not match model input width");
    }
    const auto dims = spec.layer_dims();
    std::vector<std::vector<double>> grad_acc(dims.size());
    for (std::size_t l = 0; l < dims.size(); ++l) {
        grad_acc[l].assign(dims[l], 0.0);
    }
    Workspace ws;
    double loss_sum = 0.0;
    for (std::uint32_t i : idx) {
        forward(spec, params, data.row(i), ws);
        loss_sum += sample_loss(ws.acts.back(), data.labels[i], ws);
        backward(spec, params, data.labels[i], ws, grad_acc);
    }
    const double inv = 1.0 / static_cast<double>(idx.size());
    Update grad;
    grad.per_layer.resize(dims.size());
    for (std::size_t l = 0; l < dims.size(); ++l) {
        grad.per_layer[l].resize(dims[l]);
        for (std::size_t j = 0; j < dims[l]; ++j) {
            grad.per_layer[l][j] = static_cast<float>(grad_acc[l][j] * inv);
        }
    }
    return {loss_sum * inv, std::move(grad)};
}

} // namespace

Parameters init_model(const ModelSpec& spec, RandomStream rng) {
    spec.validate();
    Parameters params;
    params.per_layer.reserve(spec.layer_count());
    for (const auto& layer : spec.layers) {
        const double limit =
            std::sqrt(6.0 / (static_cast<double>(layer.inputs) + static_cast<double>(layer.outputs)));
        std::vector<float> flat(static_cast<std::size_t>(layer.inputs) * layer.outputs +
                                layer.outputs);
        const std::size_t weight_count = static_cast<std::size_t>(layer.inputs) * layer.outputs;
        for (std::size_t j = 0; j < weight_count; ++j) {
            flat[j] = static_cast<float>((2.0 * rng.next_unit() - 1.0) * limit);
        }
        // Biases stay zero.
        params.per_layer.push_back(std::move(flat));
    }
    return params;
}

std::pair<double, Update> loss_and_grad(const ModelSpec& spec, const Parameters& params,
                                        const Dataset& batch) {
    check_shapes(spec, params, "loss_and_grad");
    std::vector<std::uint32_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), 0u);
    return loss_and_grad_indices(spec, params, batch, idx);
}

Parameters local_train(const ModelSpec& spec, const Parameters& start, const Dataset& data,
                       const LocalTrainConfig& cfg) {
    check_shapes(spec, start, "local_train");
    if (data.size() == 0) {
        throw input_error("local_train: empty dataset");
    }
    if (cfg.epochs == 0) {
        throw input_error("local_train: epochs must be positive");
    }
    if (cfg.batch_size == 0) {
        throw input_error("local_train: batch_size must be positive");
    }
    if (cfg.learning_rate < 0.0) {
        throw input_error("local_train: learning_rate must be non-negative");
    }
    Parameters params = start;
    if (cfg.learning_rate == 0.0) {
        return params; // zero step, bitwise no-op
    }
    RandomStream rng = cfg.rng;
    std::vector<std::uint32_t> perm(data.size());
    for (std::uint32_t e = 0; e < cfg.epochs; ++e) {
        std::iota(perm.begin(), perm.end(), 0u);
        rng.shuffle(perm);
        for (std::size_t pos = 0; pos < perm.size(); pos += cfg.batch_size) {
            const std::size_t end = std::min(pos + cfg.batch_size, perm.size());
            std::vector<std::uint32_t> batch(perm.begin() + pos, perm.begin() + end);
            std::sort(batch.begin(), batch.end());
            auto [loss, grad] = loss_and_grad_indices(spec, params, data, batch);
            (void)loss;
            params = apply_update(params, grad, -cfg.learning_rate);
        }
    }
    return params;
}

Update compute_update(const Parameters& local, const Parameters& global) {
    if (local.per_layer.size() != global.per_layer.size()) {
        throw input_error("compute_update: layer count mismatch");
    }
    Update out;
    out.per_layer.resize(local.per_layer.size());
    for (std::size_t l = 0; l < local.per_layer.size(); ++l) {
        if (local.per_layer[l].size() != global.per_layer[l].size()) {
            throw input_error("compute_update: layer size mismatch");
        }
        out.per_layer[l].resize(local.per_layer[l].size());
        for (std::size_t j = 0; j < local.per_layer[l].size(); ++j) {
            out.per_layer[l][j] = local.per_layer[l][j] - global.per_layer[l][j];
        }
    }
    return out;
}

Parameters apply_update(const Parameters& params, const Update& update, double scale) {
    if (params.per_layer.size() != update.per_layer.size()) {
        throw input_error("apply_update: layer count mismatch");
    }
    Parameters out = params;
    if (scale == 0.0) {
        return out;
    }
    for (std::size_t l = 0; l < out.per_layer.size(); ++l) {
        if (update.per_layer[l].size() != out.per_layer[l].size()) {
            throw input_error("apply_update: layer size mismatch");
        }
        for (std::size_t j = 0; j < out.per_layer[l].size(); ++j) {
            out.per_layer[l][j] = static_cast<float>(
                static_cast<double>(out.per_layer[l][j]) +
                scale * static_cast<double>(update.per_layer[l][j]));
        }
    }
    return out;
}

EvalResult evaluate(const ModelSpec& spec, const Parameters& params, const Dataset& data) {
    check_shapes(spec, params, "evaluate");
    if (data.size() == 0) {
        throw input_error("evaluate: empty dataset");
    }
    Workspace ws;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::uint32_t i = 0; i < data.size(); ++i) {
        forward(spec, params, data.row(i), ws);
        const auto& logits = ws.acts.back();
        loss_sum += sample_loss(logits, data.labels[i], ws);
        const std::size_t pred = static_cast<std::size_t>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == static_cast<std::size_t>(data.labels[i])) {
            ++correct;
        }
    }
    return {loss_sum / static_cast<double>(data.size()),
            static_cast<double>(correct) / static_cast<double>(data.size())};
}

} // namespace fedquant
