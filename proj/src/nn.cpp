#include "mlgcn/nn.hpp"

#include <algorithm>
#include <cmath>

#include "mlgcn/error.hpp"

namespace mlgcn {

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw InputError("unknown activation '" + name + "'");
}

Var apply_activation(Tape& tape, Var z, Activation a) {
    return a == Activation::relu ? tape.relu(z) : z;
}

Var graph_convolution(Tape& tape, Var z, const WeightedAdjacency& adjacency, Var self_weights,
                      Var neighbor_weights, Var bias, Activation activation) {
    const Tensor& zv = tape.value(z);
    const Tensor& ws = tape.value(self_weights);
    const Tensor& wn = tape.value(neighbor_weights);
    if (ws.rows() != zv.cols() || !wn.same_shape(ws)) {
        throw InputError("graph convolution: weights are " + std::to_string(ws.rows()) + "x" +
                         std::to_string(ws.cols()) + " for " + std::to_string(zv.cols()) + " input channels");
    }
    const Var self_term = tape.matmul(z, self_weights);
    const Var neigh_term = tape.matmul(tape.neighbor(z, adjacency), neighbor_weights);
    return apply_activation(tape, tape.add_bias(tape.add(self_term, neigh_term), bias), activation);
}

Var dense(Tape& tape, Var x, Var weights, Var bias, Activation activation) {
    if (tape.value(weights).rows() != tape.value(x).cols()) throw InputError("dense: shape mismatch");
    return apply_activation(tape, tape.add_bias(tape.matmul(x, weights), bias), activation);
}

Tensor graph_convolution(const Tensor& z, const WeightedAdjacency& adjacency, const LayerParams& p,
                         Activation activation) {
    Tape tape;
    const Var out = graph_convolution(tape, tape.constant(z), adjacency, tape.constant(p.self_weights),
                                      tape.constant(p.neighbor_weights), tape.constant(p.bias), activation);
    return tape.value(out);
}

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias, Activation activation) {
    Tape tape;
    const Var out = dense(tape, tape.constant(x), tape.constant(weights), tape.constant(bias), activation);
    return tape.value(out);
}

Tensor global_mean_pool(const Tensor& z) {
    Tape tape;
    return tape.value(tape.mean_rows(tape.constant(z)));
}

double mse_loss(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size()) throw InputError("mse_loss: length mismatch");
    Tape tape;
    const Var p = tape.constant(Tensor::column(prediction));
    return tape.value(tape.mse(p, Tensor::column(target)))(0, 0);
}

OptimizerState make_optimizer_state(const std::vector<Tensor>& params) {
    OptimizerState s;
    for (const Tensor& p : params) {
        s.first_moment.emplace_back(p.rows(), p.cols());
        s.second_moment.emplace_back(p.rows(), p.cols());
    }
    return s;
}

void adam_update(std::vector<Tensor>& params, const std::vector<Tensor>& grads, OptimizerState& state,
                 double learning_rate, const AdamConfig& config) {
    if (!(learning_rate > 0.0)) throw InputError("adam: learning rate must be positive");
    if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
        throw InputError("adam: parameter, gradient and state counts differ");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k].values();
        const auto& g = grads[k].values();
        auto& m = state.first_moment[k].values();
        auto& v = state.second_moment[k].values();
        if (g.size() != p.size()) throw InputError("adam: gradient shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

GradCheckResult grad_check(const LossFunction& loss, std::vector<Tensor> params, double h) {
    if (!(h >= 1e-8 && h <= 1e-4)) throw InputError("grad_check: h must lie in [1e-8, 1e-4]");

    struct Probe {
        double loss;
        std::vector<bool> pattern;
    };
    auto evaluate = [&](const std::vector<Tensor>& p) {
        Tape tape(p.size());
        const Var l = loss(tape, p);
        const double v = tape.value(l)(0, 0);
        if (!std::isfinite(v)) throw NumericalError("grad_check: non-finite loss");
        return Probe{v, tape.relu_pattern()};
    };

    Tape tape(params.size());
    const Var l = loss(tape, params);
    const double base_loss = tape.value(l)(0, 0);
    if (!std::isfinite(base_loss)) throw NumericalError("grad_check: non-finite loss");
    const std::vector<bool> base_pattern = tape.relu_pattern();
    tape.backward(l);
    const std::vector<Tensor>& analytic = tape.parameter_gradients();

    GradCheckResult result;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            const double original = params[k].values()[i];
            double step = h;
            double numeric = 0.0;
            bool adjusted = false;
            bool straddles = false;
            for (;;) {
                params[k].values()[i] = original + step;
                const Probe plus = evaluate(params);
                params[k].values()[i] = original - step;
                const Probe minus = evaluate(params);
                params[k].values()[i] = original;
                numeric = (plus.loss - minus.loss) / (2.0 * step);
                straddles = plus.pattern != base_pattern || minus.pattern != base_pattern;
                if (!straddles || step <= 1e-10) break;
                step /= 10.0;
                adjusted = true;
            }
            if (straddles) {
                // A unit sits exactly on its kink. Take the one-sided second
                // order difference from a side that keeps the recorded pattern.
                for (const double dir : {1.0, -1.0}) {
                    params[k].values()[i] = original + dir * h;
                    const Probe one = evaluate(params);
                    params[k].values()[i] = original + dir * 2.0 * h;
                    const Probe two = evaluate(params);
                    params[k].values()[i] = original;
                    if (one.pattern != base_pattern || two.pattern != base_pattern) continue;
                    numeric = dir * (-3.0 * base_loss + 4.0 * one.loss - two.loss) / (2.0 * h);
                    break;
                }
            }
            const double a = analytic[k].empty() ? 0.0 : analytic[k].values()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
            const double err = std::abs(a - numeric) / denom;
            if (adjusted) ++result.kink_adjusted;
            ++result.checked_entries;
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst_parameter = k;
                result.worst_entry = i;
            }
        }
    }
    return result;
}

}  // namespace mlgcn
