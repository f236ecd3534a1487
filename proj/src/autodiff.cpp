#include "mlgcn/autodiff.hpp"

#include <string>

#include "mlgcn/error.hpp"

namespace mlgcn {

Var Tape::push(Tensor value, std::function<void(Tape&, std::size_t)> backward) {
    nodes_.push_back(Node{std::move(value), Tensor(), std::move(backward), std::nullopt});
    return Var{nodes_.size() - 1};
}

Tensor& Tape::grad_of(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
    Tensor& dst = grad_of(id);
    auto& d = dst.values();
    const auto& s = g.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::parameter(std::size_t index, const Tensor& value) {
    if (index >= param_grads_.size()) throw InputError("parameter index out of range for this tape");
    Var v = push(value, nullptr);
    nodes_[v.id].param = index;
    return v;
}

Var Tape::matmul(Var a, Var b) {
    return push(mlgcn::matmul(value(a), value(b)), [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        t.accumulate(a.id, matmul_nt(g, t.value(b)));
        t.accumulate(b.id, matmul_tn(t.value(a), g));
    });
}

Var Tape::add(Var a, Var b) {
    if (!value(a).same_shape(value(b))) throw InputError("add: shape mismatch");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += value(b).values()[i];
    return push(std::move(out), [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        t.accumulate(a.id, g);
        t.accumulate(b.id, g);
    });
}

Var Tape::add_bias(Var z, Var bias) {
    const Tensor& b = value(bias);
    if (b.rows() != 1 || b.cols() != value(z).cols()) throw InputError("add_bias: bias must be 1 x channels");
    Tensor out = value(z);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < out.cols(); ++c) row[c] += b(0, c);
    }
    return push(std::move(out), [z, bias](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        t.accumulate(z.id, g);
        Tensor gb(1, g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
        t.accumulate(bias.id, gb);
    });
}

Var Tape::neighbor(Var z, const WeightedAdjacency& a) {
    if (a.node_count() != value(z).rows()) {
        throw InputError("graph convolution: adjacency has " + std::to_string(a.node_count()) + " nodes, data has " +
                         std::to_string(value(z).rows()) + " rows");
    }
    const WeightedAdjacency* op = &a;
    return push(a.apply(value(z)), [z, op](Tape& t, std::size_t self) {
        t.accumulate(z.id, op->apply_transpose(t.nodes_[self].grad));
    });
}

Var Tape::relu(Var z) {
    Tensor out = value(z);
    for (double& v : out.values()) {
        const bool on = v > 0.0;
        relu_pattern_.push_back(on);
        if (!on) v = 0.0;
    }
    return push(std::move(out), [z](Tape& t, std::size_t self) {
        Tensor g = t.nodes_[self].grad;
        const auto& in = t.value(z).values();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!(in[i] > 0.0)) g.values()[i] = 0.0;
        t.accumulate(z.id, g);
    });
}

Var Tape::reduce_sum(Var z, const AssignmentMatrix& s) {
    const AssignmentMatrix* sp = &s;
    return push(mlgcn::reduce_sum(value(z), s), [z, sp](Tape& t, std::size_t self) {
        t.accumulate(z.id, mlgcn::prolong(t.nodes_[self].grad, *sp));
    });
}

Var Tape::reduce_mean(Var z, const AssignmentMatrix& s) {
    const AssignmentMatrix* sp = &s;
    return push(mlgcn::reduce_mean(value(z), s), [z, sp](Tape& t, std::size_t self) {
        Tensor g = t.nodes_[self].grad;
        for (std::size_t k = 0; k < g.rows(); ++k) {
            const double inv = 1.0 / static_cast<double>(sp->cluster_sizes()[k]);
            for (double& v : g.row(k)) v *= inv;
        }
        t.accumulate(z.id, mlgcn::prolong(g, *sp));
    });
}

Var Tape::prolong(Var z, const AssignmentMatrix& s) {
    const AssignmentMatrix* sp = &s;
    return push(mlgcn::prolong(value(z), s), [z, sp](Tape& t, std::size_t self) {
        t.accumulate(z.id, mlgcn::reduce_sum(t.nodes_[self].grad, *sp));
    });
}

Var Tape::concat(Var a, Var b) {
    const std::size_t ca = value(a).cols();
    return push(hconcat(value(a), value(b)), [a, b, ca](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        Tensor ga(g.rows(), ca), gb(g.rows(), g.cols() - ca);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < ca; ++c) ga(r, c) = g(r, c);
            for (std::size_t c = ca; c < g.cols(); ++c) gb(r, c - ca) = g(r, c);
        }
        t.accumulate(a.id, ga);
        t.accumulate(b.id, gb);
    });
}

Var Tape::mean_rows(Var z) {
    const Tensor& in = value(z);
    if (in.rows() == 0) throw InputError("mean pool over zero rows");
    Tensor out(1, in.cols());
    for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t c = 0; c < in.cols(); ++c) out(0, c) += in(r, c);
    const double inv = 1.0 / static_cast<double>(in.rows());
    for (double& v : out.values()) v *= inv;
    return push(std::move(out), [z, inv](Tape& t, std::size_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& src = t.value(z);
        Tensor gz(src.rows(), src.cols());
        for (std::size_t r = 0; r < gz.rows(); ++r)
            for (std::size_t c = 0; c < gz.cols(); ++c) gz(r, c) = g(0, c) * inv;
        t.accumulate(z.id, gz);
    });
}

Var Tape::mse(Var prediction, const Tensor& target) {
    const Tensor& p = value(prediction);
    if (!p.same_shape(target)) throw InputError("mse: prediction and target shapes differ");
    if (p.size() == 0) throw InputError("mse: empty input");
    const double inv = 1.0 / static_cast<double>(p.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p.values()[i] - target.values()[i];
        loss += d * d;
    }
    return push(Tensor(1, 1, loss * inv), [prediction, target, inv](Tape& t, std::size_t self) {
        const double g = t.nodes_[self].grad(0, 0);
        const Tensor& p = t.value(prediction);
        Tensor gp(p.rows(), p.cols());
        for (std::size_t i = 0; i < p.size(); ++i)
            gp.values()[i] = 2.0 * inv * g * (p.values()[i] - target.values()[i]);
        t.accumulate(prediction.id, gp);
    });
}

void Tape::backward(Var out) {
    if (value(out).rows() != 1 || value(out).cols() != 1) throw InputError("backward needs a scalar output");
    for (auto& n : nodes_) n.grad = Tensor();
    for (auto& g : param_grads_) g = Tensor();
    grad_of(out.id)(0, 0) = 1.0;
    for (std::size_t id = out.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.grad.empty()) continue;
        if (n.backward) n.backward(*this, id);
        if (n.param) {
            Tensor& dst = param_grads_[*n.param];
            if (dst.empty()) {
                dst = n.grad;
            } else {
                for (std::size_t i = 0; i < dst.size(); ++i) dst.values()[i] += n.grad.values()[i];
            }
        }
    }
    // Parameters that did not reach the output get explicit zero gradients.
    for (const auto& n : nodes_) {
        if (n.param && param_grads_[*n.param].empty())
            param_grads_[*n.param] = Tensor(n.value.rows(), n.value.cols());
    }
}

}  // namespace mlgcn
