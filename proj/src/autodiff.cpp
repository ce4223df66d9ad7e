#include "ivegan/autodiff.hpp"

#include <cmath>

namespace ivegan {

namespace {

double tanh_d(double x) { return fast_tanh(x); }

// Overflow-safe log(1 + exp(x)).
double softplus_d(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid_d(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

NodeId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

void Tape::check_id(NodeId id, const char* who) const {
    if (id >= nodes_.size()) throw ValueError(std::string(who) + ": node not on tape");
}

NodeId Tape::leaf(Tensor value, bool trainable) {
    return push({Op::Leaf, 0, 0, 0.0, std::move(value), trainable});
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    check_id(a, "matmul");
    check_id(b, "matmul");
    return push({Op::MatMul, a, b, 0.0, matmul_vals(nodes_[a].value, nodes_[b].value), false});
}

NodeId Tape::add_bias(NodeId a, NodeId bias) {
    check_id(a, "add_bias");
    check_id(bias, "add_bias");
    return push({Op::AddBias, a, bias, 0.0, add_bias_vals(nodes_[a].value, nodes_[bias].value),
                 false});
}

NodeId Tape::concat(NodeId a, NodeId b) {
    check_id(a, "concat");
    check_id(b, "concat");
    return push({Op::Concat, a, b, 0.0, concat_cols(nodes_[a].value, nodes_[b].value), false});
}

NodeId Tape::tanh_act(NodeId a) {
    check_id(a, "tanh_act");
    return push({Op::Tanh, a, 0, 0.0, map_vals(nodes_[a].value, tanh_d), false});
}

NodeId Tape::lrelu(NodeId a, double slope) {
    check_id(a, "lrelu");
    if (!(slope > 0.0 && slope < 1.0)) {
        throw ValueError("lrelu: slope must be in (0,1), got " + std::to_string(slope));
    }
    const Tensor& x = nodes_[a].value;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
    return push({Op::LRelu, a, 0, slope, Tensor(x.shape(), std::move(out)), false});
}

NodeId Tape::sigmoid(NodeId a) {
    check_id(a, "sigmoid");
    return push({Op::Sigmoid, a, 0, 0.0, map_vals(nodes_[a].value, sigmoid_d), false});
}

NodeId Tape::softplus(NodeId a) {
    check_id(a, "softplus");
    return push({Op::Softplus, a, 0, 0.0, map_vals(nodes_[a].value, softplus_d), false});
}

NodeId Tape::mean_all(NodeId a) {
    check_id(a, "mean_all");
    return push({Op::MeanAll, a, 0, 0.0, Tensor::scalar(mean_all_val(nodes_[a].value)), false});
}

NodeId Tape::add(NodeId a, NodeId b) {
    check_id(a, "add");
    check_id(b, "add");
    return push({Op::Add, a, b, 0.0, add_vals(nodes_[a].value, nodes_[b].value), false});
}

NodeId Tape::scale(NodeId a, double s) {
    check_id(a, "scale");
    return push({Op::Scale, a, 0, s, scale_vals(nodes_[a].value, s), false});
}

const Tensor& Tape::value(NodeId id) const {
    check_id(id, "value");
    return nodes_[id].value;
}

Gradients Tape::backward(NodeId loss) const {
    check_id(loss, "backward");
    if (!nodes_[loss].value.is_scalar()) {
        throw ShapeError("backward: loss must be scalar, got shape " +
                         nodes_[loss].value.shape_str());
    }

    // Only nodes that lead back to a trainable leaf need a gradient;
    // pruning the rest skips whole subgraphs (e.g. the frozen players).
    std::vector<char> need(nodes_.size(), 0);
    for (NodeId id = 0; id <= loss; ++id) {
        const Node& n = nodes_[id];
        if (n.op == Op::Leaf) {
            need[id] = n.trainable;
        } else {
            const bool binary = n.op == Op::MatMul || n.op == Op::AddBias ||
                                n.op == Op::Concat || n.op == Op::Add;
            need[id] = need[n.a] || (binary && need[n.b]);
        }
    }

    // Flat gradient buffers per node; allocated on first touch.
    std::vector<std::vector<double>> grad(nodes_.size());
    auto touch = [&](NodeId id) -> std::vector<double>& {
        if (grad[id].empty() && nodes_[id].value.size() > 0) {
            grad[id].assign(nodes_[id].value.size(), 0.0);
        }
        return grad[id];
    };
    touch(loss).assign(1, 1.0);

    auto as_tensor = [&](NodeId id) {
        return Tensor(nodes_[id].value.shape(), grad[id]);
    };

    for (NodeId id = loss + 1; id-- > 0;) {
        if (grad[id].empty() || !need[id]) continue;  // not reached, or prunable
        const Node& n = nodes_[id];
        const std::vector<double>& g = grad[id];
        const bool na = n.op != Op::Leaf && need[n.a];
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul: {
                const Tensor gt = as_tensor(id);
                if (na) {
                    const Tensor da = matmul_vals(gt, nodes_[n.b].value, false, true);
                    auto& ga = touch(n.a);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += da[i];
                }
                if (need[n.b]) {
                    const Tensor db = matmul_vals(nodes_[n.a].value, gt, true, false);
                    auto& gb = touch(n.b);
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += db[i];
                }
                break;
            }
            case Op::AddBias: {
                if (na) {
                    auto& ga = touch(n.a);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
                }
                if (need[n.b]) {
                    auto& gb = touch(n.b);
                    const std::size_t w = nodes_[n.b].value.size();
                    for (std::size_t r = 0; r < g.size() / w; ++r) {
                        const double* row = g.data() + r * w;
                        for (std::size_t c = 0; c < w; ++c) gb[c] += row[c];
                    }
                }
                break;
            }
            case Op::Concat: {
                const std::size_t p = nodes_[n.a].value.cols();
                const std::size_t q = nodes_[n.b].value.cols();
                auto& ga = touch(n.a);
                auto& gb = touch(n.b);
                for (std::size_t r = 0; r < nodes_[n.a].value.rows(); ++r) {
                    if (na)
                        for (std::size_t c = 0; c < p; ++c) ga[r * p + c] += g[r * (p + q) + c];
                    if (need[n.b])
                        for (std::size_t c = 0; c < q; ++c)
                            gb[r * q + c] += g[r * (p + q) + p + c];
                }
                break;
            }
            case Op::Tanh: {
                auto& ga = touch(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double y = n.value[i];
                    ga[i] += g[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::LRelu: {
                auto& ga = touch(n.a);
                const Tensor& x = nodes_[n.a].value;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    ga[i] += g[i] * (x[i] >= 0.0 ? 1.0 : n.param);
                }
                break;
            }
            case Op::Sigmoid: {
                auto& ga = touch(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double y = n.value[i];
                    ga[i] += g[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::Softplus: {
                auto& ga = touch(n.a);
                const Tensor& x = nodes_[n.a].value;
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * sigmoid_d(x[i]);
                break;
            }
            case Op::MeanAll: {
                auto& ga = touch(n.a);
                const double s = g[0] / static_cast<double>(ga.size());
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s;
                break;
            }
            case Op::Add: {
                if (na) {
                    auto& ga = touch(n.a);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
                }
                if (need[n.b]) {
                    auto& gb = touch(n.b);
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i];
                }
                break;
            }
            case Op::Scale: {
                auto& ga = touch(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * n.param;
                break;
            }
        }
    }

    Gradients out;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (nodes_[id].op == Op::Leaf && nodes_[id].trainable) {
            out.by_leaf.emplace(id, grad[id].empty() ? Tensor::zeros(nodes_[id].value.shape())
                                                     : as_tensor(id));
        }
    }
    return out;
}

}  // namespace ivegan
