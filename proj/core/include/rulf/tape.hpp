#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rulf/tensor.hpp"

namespace rulf {

enum class Activation { Linear, Relu };

struct ValueRef {
    std::size_t index;
};

// Records a forward computation and replays it in reverse for gradients.
// Values are per-sample (no batch axis); a batch is an outer loop.
// Gradient accumulation order is fixed by node creation order, so repeated
// runs over the same graph produce bit-identical gradients.
class Tape {
public:
    // Leaf holding its own value (e.g. the input window).
    ValueRef input(Tensor value);
    // Leaf borrowing an external value (e.g. model weights). The referenced
    // tensor must outlive the tape.
    ValueRef param(const Tensor& external);

    const Tensor& value(ValueRef ref) const;
    // Gradient of the last backward() root w.r.t. this node. Empty tensor if
    // the node did not participate.
    const Tensor& grad(ValueRef ref) const;

    // x:{L,Cin} w:{K,Cin,Cout} b:{Cout} -> {L-K+1,Cout}, valid padding, stride 1.
    ValueRef conv1d(ValueRef x, ValueRef w, ValueRef b, Activation act);
    // x:{H,W,Cin} w:{KH,KW,Cin,Cout} b:{Cout} -> {H-KH+1,W-KW+1,Cout}.
    ValueRef conv2d(ValueRef x, ValueRef w, ValueRef b, Activation act);
    // x:{T,D} w:{D,4U} u:{U,4U} b:{4U} -> {T,U}; gate blocks ordered i,f,g,o;
    // initial hidden and cell state are zero; all steps are returned.
    ValueRef lstm(ValueRef x, ValueRef w, ValueRef u, ValueRef b);
    // h:{T,U} -> {T,U}; scores = scale * h h^T, softmax over each row,
    // output = weights * h. No parameters.
    ValueRef dot_attention(ValueRef h, double scale = 1.0);
    // m:{H,W,1} -> {H,W,1}; exp-normalises over all cells.
    ValueRef spatial_softmax(ValueRef m);
    // f:{H,W,C} * w:{H,W,1} -> {H,W,C}, w broadcast over channels.
    ValueRef broadcast_multiply(ValueRef f, ValueRef w);
    // x:{D} w:{D,units} b:{units} -> {units}.
    ValueRef dense(ValueRef x, ValueRef w, ValueRef b);
    ValueRef flatten(ValueRef x);
    ValueRef relu(ValueRef x);

    // Propagates seed (same shape as root) back to every contributing node.
    void backward(ValueRef root, const Tensor& seed);
    // Scalar convenience: seed = 1.
    void backward(ValueRef root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* borrowed = nullptr;
        Tensor aux; // op cache (lstm gates, attention weights)
        std::vector<std::size_t> parents;
        std::function<void(Tape&, std::size_t)> back;
        bool is_leaf = false;

        const Tensor& val() const { return borrowed ? *borrowed : owned; }
    };

    std::size_t push(Node node);
    Tensor& grad_buffer(std::size_t idx, const std::vector<std::size_t>& shape);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

// Root-mean-square error over paired predictions and targets.
double rmse(const std::vector<double>& predictions, const std::vector<double>& targets);

} // namespace rulf
