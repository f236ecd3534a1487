#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlgcn/autodiff.hpp"
#include "mlgcn/graph.hpp"
#include "mlgcn/tensor.hpp"

namespace mlgcn {

enum class Activation { relu, identity };

const char* to_string(Activation a);
Activation parse_activation(const std::string& name);

// Two-weight graph convolution parameters: independent self and neighbor
// channel mixings plus a bias row.
struct LayerParams {
    Tensor self_weights;      // C_in x C_out
    Tensor neighbor_weights;  // C_in x C_out
    Tensor bias;              // 1 x C_out
};

// Parameter indices of a convolution inside a model's parameter list.
struct ConvIndices {
    std::size_t self_weights = 0;
    std::size_t neighbor_weights = 0;
    std::size_t bias = 0;
};

struct DenseIndices {
    std::size_t weights = 0;
    std::size_t bias = 0;
};

Var apply_activation(Tape& tape, Var z, Activation a);

// Z' = a(Z Theta_self + A Z Theta_neigh + 1 b^T) on the tape.
Var graph_convolution(Tape& tape, Var z, const WeightedAdjacency& adjacency, Var self_weights,
                      Var neighbor_weights, Var bias, Activation activation);
// a(x W + b) on the tape.
Var dense(Tape& tape, Var x, Var weights, Var bias, Activation activation);

// Eager forms of the same operations.
Tensor graph_convolution(const Tensor& z, const WeightedAdjacency& adjacency, const LayerParams& p,
                         Activation activation);
Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias, Activation activation);
Tensor global_mean_pool(const Tensor& z);
double mse_loss(std::span<const double> prediction, std::span<const double> target);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::size_t step = 0;
};

OptimizerState make_optimizer_state(const std::vector<Tensor>& params);

// One bias-corrected Adam step in place. Throws InputError on shape
// mismatch or a non-positive learning rate.
void adam_update(std::vector<Tensor>& params, const std::vector<Tensor>& grads, OptimizerState& state,
                 double learning_rate, const AdamConfig& config = {});

// Loss evaluation used by the gradient checker. Records the forward pass on
// `tape` and returns the scalar loss node.
using LossFunction = std::function<Var(Tape& tape, const std::vector<Tensor>& params)>;

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_parameter = 0;
    std::size_t worst_entry = 0;
    std::size_t checked_entries = 0;
    // Entries where the step had to be shrunk because a ReLU switched state.
    std::size_t kink_adjusted = 0;
};

// Compares reverse-mode gradients with central differences entry by entry.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
// When a +-h probe flips any ReLU unit the step is divided by ten (down to
// 1e-10) so the difference never straddles a kink. A unit still flipping at
// 1e-10 lies exactly on its kink; the derivative is then taken one-sided, with
// step h, from a side on which every unit keeps its recorded state, which is
// the subgradient the tape propagates. Throws NumericalError on a
// non-finite loss and InputError for h outside [1e-8, 1e-4].
GradCheckResult grad_check(const LossFunction& loss, std::vector<Tensor> params, double h);

}  // namespace mlgcn
