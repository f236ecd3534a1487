#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "mlgcn/autodiff.hpp"
#include "mlgcn/error.hpp"
#include "mlgcn/nn.hpp"

using namespace mlgcn;
using namespace mlgcn::testing;

namespace {

WeightedAdjacency path3() { return WeightedAdjacency::from_graph(SparseGraph(3, {{0, 1}, {1, 2}})); }

LayerParams zero_params(std::size_t in, std::size_t out) { return {Tensor(in, out), Tensor(in, out), Tensor(1, out)}; }

// conv -> reduce_mean -> concat -> conv -> prolong -> conv -> pool -> dense -> mse
struct SmallNet {
    SparseGraph graph;
    AssignmentMatrix assignment;
    WeightedAdjacency mesh, cluster;
    Tensor features;
    Tensor target = Tensor::from_rows({{0.3}});
    Activation act = Activation::relu;

    Var operator()(Tape& t, const std::vector<Tensor>& p) const {
        std::vector<Var> v;
        for (std::size_t i = 0; i < p.size(); ++i) v.push_back(t.parameter(i, p[i]));
        const Var x = t.constant(features);
        const Var z1 = graph_convolution(t, x, mesh, v[0], v[1], v[2], act);
        const Var r = t.concat(t.reduce_mean(z1, assignment), t.reduce_sum(t.constant(features), assignment));
        const Var z2 = graph_convolution(t, r, cluster, v[3], v[4], v[5], act);
        const Var back = t.concat(t.prolong(z2, assignment), z1);
        const Var z3 = graph_convolution(t, back, mesh, v[6], v[7], v[8], act);
        const Var out = dense(t, t.mean_rows(z3), v[9], v[10], Activation::identity);
        return t.mse(out, target);
    }
};

SmallNet make_net(std::mt19937_64& rng) {
    auto [g, s] = random_clustered_graph(rng, 12, 4);
    SmallNet net{g, s, WeightedAdjacency::from_graph(g),
                 WeightedAdjacency::from_coarse(coarsen_adjacency(g, s, CoarseNorm::row)),
                 random_tensor(g.node_count(), 2, rng, 0.0, 1.0)};
    return net;
}

std::vector<Tensor> net_params(std::mt19937_64& rng) {
    return {random_tensor(2, 3, rng), random_tensor(2, 3, rng), random_tensor(1, 3, rng, -0.1, 0.1),
            random_tensor(5, 2, rng), random_tensor(5, 2, rng), random_tensor(1, 2, rng, -0.1, 0.1),
            random_tensor(5, 2, rng), random_tensor(5, 2, rng), random_tensor(1, 2, rng, -0.1, 0.1),
            random_tensor(2, 1, rng), random_tensor(1, 1, rng)};
}

}  // namespace

TEST_CASE("graph convolution examples") {
    const WeightedAdjacency a = path3();
    const Tensor z = Tensor::column(std::vector<double>{1, 2, 3});
    SUBCASE("identity self weights") {
        LayerParams p = zero_params(1, 1);
        p.self_weights(0, 0) = 1;
        CHECK(graph_convolution(z, a, p, Activation::identity).values() == z.values());
    }
    SUBCASE("neighbor sums") {
        LayerParams p = zero_params(1, 1);
        p.neighbor_weights(0, 0) = 1;
        CHECK(graph_convolution(z, a, p, Activation::identity).values() == std::vector<double>{2, 4, 2});
    }
    SUBCASE("saturated ReLU") {
        LayerParams p = zero_params(1, 1);
        p.self_weights(0, 0) = 0.01;
        p.neighbor_weights(0, 0) = 0.01;
        p.bias(0, 0) = -10;
        CHECK(graph_convolution(z, a, p, Activation::relu).values() == std::vector<double>{0, 0, 0});
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(graph_convolution(z, a, zero_params(2, 1), Activation::identity), InputError);
    }
}

TEST_CASE("dense, pooling and loss examples") {
    const Tensor x = Tensor::from_rows({{1, -2}});
    CHECK(dense(x, Tensor::identity(2), Tensor(1, 2), Activation::identity).values() == x.values());
    CHECK(dense(Tensor::from_rows({{3}}), Tensor::from_rows({{2}}), Tensor::from_rows({{1}}), Activation::identity)
              .values() == std::vector<double>{7});
    CHECK(dense(Tensor::from_rows({{-1}}), Tensor::from_rows({{1}}), Tensor(1, 1), Activation::relu).values() ==
          std::vector<double>{0});
    CHECK_THROWS_AS(dense(x, Tensor(3, 1), Tensor(1, 1), Activation::identity), InputError);

    CHECK(global_mean_pool(Tensor::from_rows({{1}, {3}})).values() == std::vector<double>{2});
    CHECK(global_mean_pool(Tensor::from_rows({{4, 5}, {4, 5}})).values() == std::vector<double>{4, 5});
    CHECK(global_mean_pool(Tensor::from_rows({{7, 8}})).values() == std::vector<double>{7, 8});
    CHECK_THROWS_AS(global_mean_pool(Tensor(0, 2)), InputError);

    const std::vector<double> a{1, 3}, zeros{0, 0}, one{1}, zero{0}, three{1, 2, 3};
    CHECK(mse_loss(a, a) == 0.0);
    CHECK(mse_loss(one, zero) == 1.0);
    CHECK(mse_loss(a, zeros) == 5.0);
    CHECK_THROWS_AS(mse_loss(a, three), InputError);
    CHECK(parse_activation(to_string(Activation::identity)) == Activation::identity);
    CHECK_THROWS_AS(parse_activation("tanh"), InputError);
}

TEST_CASE("adam") {
    std::vector<Tensor> params{Tensor::from_rows({{0.5, -0.25}})};
    SUBCASE("zero gradient leaves parameters unchanged") {
        OptimizerState s = make_optimizer_state(params);
        adam_update(params, {Tensor(1, 2)}, s, 0.001);
        CHECK(params[0].values() == std::vector<double>{0.5, -0.25});
        CHECK(s.step == 1);
    }
    SUBCASE("first step with unit gradient") {
        OptimizerState s = make_optimizer_state(params);
        adam_update(params, {Tensor(1, 2, 1.0)}, s, 0.001);
        CHECK(params[0](0, 0) - 0.5 == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));
        CHECK(params[0](0, 1) + 0.25 == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));
    }
    SUBCASE("first step moves against the gradient sign") {
        OptimizerState s = make_optimizer_state(params);
        const std::vector<double> before = params[0].values();
        adam_update(params, {Tensor::from_rows({{3e-4, -20}})}, s, 0.001);
        CHECK(params[0](0, 0) < before[0]);
        CHECK(params[0](0, 1) > before[1]);
    }
    SUBCASE("invalid arguments") {
        OptimizerState s = make_optimizer_state(params);
        CHECK_THROWS_AS(adam_update(params, {Tensor(1, 2)}, s, 0.0), InputError);
        CHECK_THROWS_AS(adam_update(params, {Tensor(2, 2)}, s, 0.001), InputError);
    }
}

TEST_CASE("tape gradients match finite differences") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const SmallNet net = make_net(rng);
        const GradCheckResult r = grad_check(net, net_params(rng), 1e-6);
        CHECK(r.max_relative_error < 1e-5);
        CHECK(r.checked_entries == 6 + 6 + 3 + 10 + 10 + 2 + 10 + 10 + 2 + 2 + 1);
    }
}

TEST_CASE("linear network gradients are exact up to rounding") {
    // The loss is quadratic along every single parameter, so central differences have no
    // truncation error; what remains is rounding, which shrinks as h grows.
    std::mt19937_64 rng(7);
    SmallNet net = make_net(rng);
    net.act = Activation::identity;
    const auto params = net_params(rng);
    const double coarse = grad_check(net, params, 1e-4).max_relative_error;
    const double fine = grad_check(net, params, 1e-6).max_relative_error;
    CHECK(coarse < 1e-9);
    CHECK(fine > coarse);
}

TEST_CASE("grad check edge cases") {
    const LossFunction constant = [](Tape& t, const std::vector<Tensor>&) {
        return t.mse(t.constant(Tensor::from_rows({{1}})), Tensor::from_rows({{0}}));
    };
    const GradCheckResult r = grad_check(constant, {}, 1e-6);
    CHECK(r.max_relative_error == 0.0);
    CHECK(r.checked_entries == 0);
    CHECK_THROWS_AS(grad_check(constant, {}, 1e-3), InputError);
    CHECK_THROWS_AS(grad_check(constant, {}, 1e-9), InputError);
    const LossFunction blowup = [](Tape& t, const std::vector<Tensor>& p) {
        const Var w = t.parameter(0, p[0]);
        return t.mse(t.matmul(w, t.constant(Tensor::from_rows({{1e300}}))), Tensor::from_rows({{0}}));
    };
    CHECK_THROWS_AS(grad_check(blowup, {Tensor::from_rows({{1e10}})}, 1e-6), NumericalError);
}

TEST_CASE("convolution is permutation equivariant and pooling invariant") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const auto [g, s] = random_clustered_graph(rng);
        const std::size_t n = g.node_count();
        const auto perm = random_permutation(n, rng);  // new i holds old perm[i]
        std::vector<std::size_t> inverse(n);
        for (std::size_t i = 0; i < n; ++i) inverse[perm[i]] = i;
        std::vector<std::pair<std::size_t, std::size_t>> moved;
        for (auto [a, b] : g.edges()) moved.emplace_back(inverse[a], inverse[b]);
        const WeightedAdjacency a = WeightedAdjacency::from_graph(g);
        const WeightedAdjacency pa = WeightedAdjacency::from_graph(SparseGraph(n, moved));
        const Tensor z = random_tensor(n, 2, rng);
        Tensor pz(n, 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < 2; ++c) pz(i, c) = z(perm[i], c);
        const LayerParams p{random_tensor(2, 3, rng), random_tensor(2, 3, rng), random_tensor(1, 3, rng)};
        const Tensor out = graph_convolution(z, a, p, Activation::relu);
        const Tensor pout = graph_convolution(pz, pa, p, Activation::relu);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(pout(i, c) - out(perm[i], c)) <= 1e-12);
        CHECK(max_abs_diff(global_mean_pool(pout), global_mean_pool(out)) <= 1e-12);
    }
}

TEST_CASE("cluster-uniform convolution equivalence") {
    std::mt19937_64 rng(909);
    for (int trial = 0; trial < 100; ++trial) {
        const auto [g, s] = random_clustered_graph(rng);
        const Tensor zs = random_tensor(s.cluster_count(), 2, rng);
        const LayerParams p{random_tensor(2, 3, rng), random_tensor(2, 3, rng), random_tensor(1, 3, rng)};
        const Tensor fine = reduce_mean(
            graph_convolution(prolong(zs, s), WeightedAdjacency::from_graph(g), p, Activation::identity), s);
        std::vector<double> inv;
        for (auto n : s.cluster_sizes()) inv.push_back(1.0 / static_cast<double>(n));
        const WeightedAdjacency coarse =
            WeightedAdjacency::from_coarse(coarsen_adjacency(g, s, CoarseNorm::raw)).scale_rows(inv);
        const Tensor reduced = graph_convolution(zs, coarse, p, Activation::identity);
        CHECK(max_abs_diff(fine, reduced) <= 1e-12);
    }
}

TEST_CASE("tape records relu pattern and zero-fills unreached gradients") {
    Tape t(2);
    const Var w = t.parameter(0, Tensor::from_rows({{1, -1}}));
    t.parameter(1, Tensor::from_rows({{5}}));
    const Var out = t.mean_rows(t.relu(w));
    const Var loss = t.mse(out, Tensor::from_rows({{0, 0}}));
    t.backward(loss);
    CHECK(t.relu_pattern() == std::vector<bool>{true, false});
    const auto& g = t.parameter_gradients();
    CHECK(g[0].values() == std::vector<double>{1, 0});
    CHECK(g[1].values() == std::vector<double>{0});
}
