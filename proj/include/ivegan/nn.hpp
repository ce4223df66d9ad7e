#pragma once

#include <span>
#include <vector>

#include "ivegan/autodiff.hpp"
#include "ivegan/rng.hpp"
#include "ivegan/tensor.hpp"

namespace ivegan {

enum class Act { Tanh, LRelu, Linear, Sigmoid };

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Act act = Act::Linear;
    double slope = 0.2;  // LReLU only
};

struct Layer {
    Tensor weight;  // in_dim x out_dim
    Tensor bias;    // out_dim
    Act act = Act::Linear;
    double slope = 0.2;
};

struct Network {
    std::vector<Layer> layers;

    std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
    std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().weight.cols(); }
    std::size_t n_params() const;
};

// He (normal, std sqrt(2/fan_in)) for LReLU layers, Xavier (uniform,
// +-sqrt(6/(fan_in+fan_out))) otherwise; biases zero.
Network init_network(std::span<const LayerSpec> spec, Rng& rng);

// Trainable tape leaves for every parameter, in layer order W0,b0,W1,b1,...
struct TapeBinding {
    std::vector<NodeId> params;
};

TapeBinding bind_params(const Network& net, Tape& tape, bool trainable);
NodeId forward(const Network& net, const TapeBinding& binding, Tape& tape, NodeId input);

// Inference-only forward, no tape.
Tensor forward(const Network& net, const Tensor& input);

struct AdamConfig {
    double alpha = 2e-4;
    double beta1 = 0.7;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    long t = 0;
    std::vector<Tensor> m;  // aligned with W0,b0,W1,b1,...
    std::vector<Tensor> v;

    static AdamState init(const Network& net, AdamConfig cfg);
};

// Bias-corrected Adam update, in place. `grads` aligned as in TapeBinding.
void adam_step(Network& net, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace ivegan
