#pragma once

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "mlgcn/graph.hpp"
#include "mlgcn/mesh.hpp"

namespace mlgcn::testing {

inline constexpr double kPi = std::numbers::pi;

inline Microstructure homogeneous(double phi, std::size_t n = 4) {
    return grid_microstructure(n, n, [phi](const Vec2&) { return std::pair<std::size_t, double>{0, phi}; });
}

// x < 0.5 is phi = 0, the rest phi = pi/2; the grid conforms to the interface.
inline Microstructure series_laminate(std::size_t n = 4) {
    return grid_microstructure(n, n, [](const Vec2& c) {
        return c.x < 0.5 ? std::pair<std::size_t, double>{0, 0.0} : std::pair<std::size_t, double>{1, kPi / 2};
    });
}

inline Microstructure parallel_laminate(std::size_t n = 4) {
    return grid_microstructure(n, n, [](const Vec2& c) {
        return c.y < 0.5 ? std::pair<std::size_t, double>{0, 0.0} : std::pair<std::size_t, double>{1, kPi / 2};
    });
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

// Random connected graph with every cluster populated.
struct RandomClusteredGraph {
    SparseGraph graph;
    AssignmentMatrix assignment;
};

inline RandomClusteredGraph random_clustered_graph(std::mt19937_64& rng, std::size_t max_nodes = 20,
                                                   std::size_t max_clusters = 5) {
    std::uniform_int_distribution<std::size_t> nodes_dist(2, max_nodes);
    const std::size_t n = nodes_dist(rng);
    std::uniform_int_distribution<std::size_t> clusters_dist(1, std::min(max_clusters, n));
    const std::size_t k = clusters_dist(rng);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> parent(0, i - 1);
        edges.emplace_back(parent(rng), i);
    }
    std::uniform_int_distribution<std::size_t> any(0, n - 1);
    for (std::size_t e = 0; e < n / 2; ++e) {
        const std::size_t a = any(rng), b = any(rng);
        if (a != b) edges.emplace_back(a, b);
    }
    std::vector<std::size_t> cluster(n);
    const auto order = random_permutation(n, rng);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    for (std::size_t i = 0; i < n; ++i) cluster[order[i]] = i < k ? i : pick(rng);
    return {SparseGraph(n, edges), build_assignment(cluster, k)};
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(rows, cols);
    for (double& v : t.values()) v = u(rng);
    return t;
}

// Relabels elements by `perm` (new position i holds old element perm[i]).
inline Microstructure permute_elements(const Microstructure& m, const std::vector<std::size_t>& perm) {
    Microstructure out = m;
    for (std::size_t i = 0; i < perm.size(); ++i) out.elements[i] = m.elements[perm[i]];
    return out;
}

// Renames cluster c to relabel[c].
inline Microstructure relabel_clusters(const Microstructure& m, const std::vector<std::size_t>& relabel) {
    Microstructure out = m;
    for (auto& e : out.elements) e.cluster = relabel[e.cluster];
    return out;
}

}  // namespace mlgcn::testing
