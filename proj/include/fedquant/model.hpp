#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedquant/data.hpp"
#include "fedquant/rng.hpp"

namespace fedquant {

enum class Activation : std::uint8_t { relu, identity };

struct LayerSpec {
    std::uint32_t inputs = 0;
    std::uint32_t outputs = 0;
    Activation activation = Activation::relu;
};

// Dense feed-forward network. Layer l's parameters are one flat float
// vector: outputs*inputs weights row-major (weight[o][i] at o*inputs + i)
// followed by outputs biases. The head layer is identity; softmax lives in
// the cross-entropy loss, so predictions are argmax over logits.
struct ModelSpec {
    std::vector<LayerSpec> layers;

    // widths = [input, hidden..., output]; hidden layers get relu.
    static ModelSpec mlp(const std::vector<std::uint32_t>& widths);

    std::size_t layer_count() const { return layers.size(); }
    std::vector<std::size_t> layer_dims() const;
    std::size_t total_dim() const;
    std::uint32_t input_width() const;
    std::uint32_t class_count() const;
    void validate() const;
};

struct Parameters {
    std::vector<std::vector<float>> per_layer;
};

struct Update {
    std::vector<std::vector<float>> per_layer;
};

struct LocalTrainConfig {
    std::uint32_t epochs = 1;
    double learning_rate = 0.01;
    std::uint32_t batch_size = 32;
    RandomStream rng{0};
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
Parameters init_model(const ModelSpec& spec, RandomStream rng);

// Mean cross-entropy over the batch and its gradient. Accumulation is in
// double and in sample order, so a full-dataset batch is a deterministic
// function of the dataset alone.
std::pair<double, Update> loss_and_grad(const ModelSpec& spec, const Parameters& params,
                                        const Dataset& batch);

// Plain SGD: `epochs` passes, one fresh shuffle per epoch from cfg.rng,
// last partial batch kept. Batch membership comes from the shuffle; within
// a batch samples are visited in index order, which keeps a single
// full-size batch identical to loss_and_grad on the whole dataset.
Parameters local_train(const ModelSpec& spec, const Parameters& start, const Dataset& data,
                       const LocalTrainConfig& cfg);

// local - global, per layer.
Update compute_update(const Parameters& local, const Parameters& global);

// params + scale * update, rounded once per coordinate (double accumulate).
// scale == 0 returns the input unchanged (preserves signed zeros).
Parameters apply_update(const Parameters& params, const Update& update, double scale);

// Mean cross-entropy loss and argmax accuracy (ties resolve to the lowest
// class index).
EvalResult evaluate(const ModelSpec& spec, const Parameters& params, const Dataset& data);

} // namespace fedquant
