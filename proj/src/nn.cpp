#include "ivegan/nn.hpp"

#include <cmath>

namespace ivegan {

std::size_t Network::n_params() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

Network init_network(std::span<const LayerSpec> spec, Rng& rng) {
    if (spec.empty()) throw ValueError("init_network: empty layer spec");
    Network net;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const LayerSpec& s = spec[i];
        if (s.in_dim < 1 || s.out_dim < 1) throw ShapeError("init_network: dims must be >= 1");
        if (i > 0 && spec[i - 1].out_dim != s.in_dim) {
            throw ShapeError("init_network: layer " + std::to_string(i) + " in_dim " +
                             std::to_string(s.in_dim) + " does not chain with previous out_dim " +
                             std::to_string(spec[i - 1].out_dim));
        }
        std::vector<double> w(s.in_dim * s.out_dim);
        if (s.act == Act::LRelu) {
            const double std_dev = std::sqrt(2.0 / static_cast<double>(s.in_dim));
            for (double& x : w) x = std_dev * rng.normal();
        } else {
            const double bound = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
            for (double& x : w) x = rng.uniform(-bound, bound);
        }
        net.layers.push_back({Tensor::matrix(s.in_dim, s.out_dim, std::move(w)),
                              Tensor::zeros({s.out_dim}), s.act, s.slope});
    }
    return net;
}

TapeBinding bind_params(const Network& net, Tape& tape, bool trainable) {
    TapeBinding b;
    for (const Layer& l : net.layers) {
        b.params.push_back(tape.leaf(l.weight, trainable));
        b.params.push_back(tape.leaf(l.bias, trainable));
    }
    return b;
}

NodeId forward(const Network& net, const TapeBinding& binding, Tape& tape, NodeId input) {
    if (binding.params.size() != 2 * net.layers.size()) {
        throw ShapeError("forward: binding does not match network");
    }
    NodeId x = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        x = tape.add_bias(tape.matmul(x, binding.params[2 * i]), binding.params[2 * i + 1]);
        switch (net.layers[i].act) {
            case Act::Tanh: x = tape.tanh_act(x); break;
            case Act::LRelu: x = tape.lrelu(x, net.layers[i].slope); break;
            case Act::Sigmoid: x = tape.sigmoid(x); break;
            case Act::Linear: break;
        }
    }
    return x;
}

Tensor forward(const Network& net, const Tensor& input) {
    Tensor x = input;
    for (const Layer& l : net.layers) {
        x = add_bias_vals(matmul_vals(x, l.weight), l.bias);
        switch (l.act) {
            case Act::Tanh:
                x = map_vals(x, [](double v) { return fast_tanh(v); });
                break;
            case Act::LRelu: {
                std::vector<double> out(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) {
                    out[i] = x[i] >= 0.0 ? x[i] : l.slope * x[i];
                }
                x = Tensor(x.shape(), std::move(out));
                break;
            }
            case Act::Sigmoid:
                x = map_vals(x, [](double v) {
                    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
                });
                break;
            case Act::Linear:
                break;
        }
    }
    return x;
}

AdamState AdamState::init(const Network& net, AdamConfig cfg) {
    AdamState s;
    s.cfg = cfg;
    for (const Layer& l : net.layers) {
        s.m.push_back(Tensor::zeros(l.weight.shape()));
        s.m.push_back(Tensor::zeros(l.bias.shape()));
        s.v.push_back(Tensor::zeros(l.weight.shape()));
        s.v.push_back(Tensor::zeros(l.bias.shape()));
    }
    return s;
}

void adam_step(Network& net, const std::vector<Tensor>& grads, AdamState& state) {
    if (grads.size() != 2 * net.layers.size() || state.m.size() != grads.size()) {
        throw ShapeError("adam_step: gradient list does not match network");
    }
    state.t += 1;
    const AdamConfig& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < grads.size(); ++p) {
        Tensor& param = (p % 2 == 0) ? net.layers[p / 2].weight : net.layers[p / 2].bias;
        const Tensor& g = grads[p];
        if (!g.same_shape(param)) {
            throw ShapeError("adam_step: gradient shape " + g.shape_str() +
                             " does not match parameter " + param.shape_str());
        }
        std::vector<double> nm(g.size()), nv(g.size()), np(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            nm[i] = c.beta1 * state.m[p][i] + (1.0 - c.beta1) * g[i];
            nv[i] = c.beta2 * state.v[p][i] + (1.0 - c.beta2) * g[i] * g[i];
            const double mhat = nm[i] / bc1;
            const double vhat = nv[i] / bc2;
            np[i] = param[i] - c.alpha * mhat / (std::sqrt(vhat) + c.eps);
        }
        state.m[p] = Tensor(g.shape(), std::move(nm));
        state.v[p] = Tensor(g.shape(), std::move(nv));
        param = Tensor(param.shape(), std::move(np));
    }
}

}  // namespace ivegan
