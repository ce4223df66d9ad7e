#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "ivegan/tensor.hpp"

namespace ivegan {

using NodeId = std::size_t;

enum class Op {
    Leaf,
    MatMul,
    AddBias,
    Concat,
    Tanh,
    LRelu,
    Sigmoid,
    Softplus,
    MeanAll,
    Add,
    Scale,
};

// Reverse-mode gradients keyed by leaf node id.
struct Gradients {
    std::unordered_map<NodeId, Tensor> by_leaf;

    const Tensor& at(NodeId id) const {
        auto it = by_leaf.find(id);
        if (it == by_leaf.end()) throw ValueError("Gradients: no entry for node");
        return it->second;
    }
};

// Define-by-run tape. Forward values are computed eagerly as ops are
// recorded; backward() replays the records in reverse. Single-threaded.
class Tape {
public:
    NodeId leaf(Tensor value, bool trainable = false);

    NodeId matmul(NodeId a, NodeId b);
    NodeId add_bias(NodeId a, NodeId bias);
    NodeId concat(NodeId a, NodeId b);
    NodeId tanh_act(NodeId a);
    NodeId lrelu(NodeId a, double slope);
    NodeId sigmoid(NodeId a);
    NodeId softplus(NodeId a);
    NodeId mean_all(NodeId a);
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, double s);

    const Tensor& value(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }

    // Exact gradients of a scalar loss for every trainable leaf (zeros for
    // leaves not reachable from the loss). Deterministic accumulation order.
    Gradients backward(NodeId loss) const;

private:
    struct Node {
        Op op;
        NodeId a = 0;
        NodeId b = 0;
        double param = 0.0;
        Tensor value;
        bool trainable = false;
    };

    NodeId push(Node n);
    void check_id(NodeId id, const char* who) const;

    std::vector<Node> nodes_;
};

}  // namespace ivegan
