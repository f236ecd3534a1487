#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mlgcn/graph.hpp"
#include "mlgcn/tensor.hpp"

namespace mlgcn {

// Handle to a value recorded on a Tape.
struct Var {
    std::size_t id = 0;
};

// Reverse-mode tape over Tensor-valued operations. Nodes are appended in
// evaluation order, so replaying them backwards is a valid topological
// order. Gradients for trainable parameters are accumulated into a
// per-tape buffer indexed like the model's parameter list, which keeps
// concurrent tapes over one model independent.
//
// Sparse operators and assignments passed to the ops are referenced, not
// copied; they must outlive the tape.
class Tape {
public:
    explicit Tape(std::size_t parameter_count = 0) : param_grads_(parameter_count) {}

    Var constant(Tensor value);
    // Leaf for trainable parameter `index`; its gradient lands in
    // parameter_gradients()[index].
    Var parameter(std::size_t index, const Tensor& value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    // z + 1 b^T for a 1 x C bias row.
    Var add_bias(Var z, Var bias);
    // A z for a sparse operator.
    Var neighbor(Var z, const WeightedAdjacency& a);
    Var relu(Var z);
    Var reduce_sum(Var z, const AssignmentMatrix& s);
    Var reduce_mean(Var z, const AssignmentMatrix& s);
    Var prolong(Var z, const AssignmentMatrix& s);
    Var concat(Var a, Var b);
    // Column means, 1 x C.
    Var mean_rows(Var z);
    // Mean of squared differences against a constant target of equal shape.
    Var mse(Var prediction, const Tensor& target);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(out)/d(out) = 1 for a 1 x 1 output and propagates backwards.
    void backward(Var out);

    const std::vector<Tensor>& parameter_gradients() const { return param_grads_; }
    std::vector<Tensor> take_parameter_gradients() { return std::move(param_grads_); }

    // Bit pattern of every ReLU unit's on/off state so far, used by the
    // gradient checker to detect finite-difference steps across a kink.
    const std::vector<bool>& relu_pattern() const { return relu_pattern_; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, std::size_t)> backward;
        std::optional<std::size_t> param;
    };

    Var push(Tensor value, std::function<void(Tape&, std::size_t)> backward);
    void accumulate(std::size_t id, const Tensor& g);
    Tensor& grad_of(std::size_t id);

    std::vector<Node> nodes_;
    std::vector<Tensor> param_grads_;
    std::vector<bool> relu_pattern_;
};

}  // namespace mlgcn
