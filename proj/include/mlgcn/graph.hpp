#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mlgcn/mesh.hpp"
#include "mlgcn/tensor.hpp"

namespace mlgcn {

// Binary symmetric adjacency without self pairs. Neighbor lists are sorted.
class SparseGraph {
public:
    SparseGraph() = default;
    // Throws InputError on self pairs or out-of-range indices; duplicate pairs
    // (in either orientation) are merged.
    SparseGraph(std::size_t node_count, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

    std::size_t node_count() const { return neighbors_.size(); }
    std::size_t edge_count() const { return edge_count_; }
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
    bool has_edge(std::size_t i, std::size_t j) const;
    // Each undirected edge once, as (min, max).
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

private:
    std::vector<std::vector<std::size_t>> neighbors_;
    std::size_t edge_count_ = 0;
};

// One-hot cell-to-cluster map S with one row per cell and one column per
// cluster. Reduction applies S^T, prolongation applies S.
class AssignmentMatrix {
public:
    AssignmentMatrix() = default;

    std::size_t cell_count() const { return cell_cluster_.size(); }
    std::size_t cluster_count() const { return sizes_.size(); }
    std::size_t cluster_of(std::size_t cell) const { return cell_cluster_[cell]; }
    const std::vector<std::size_t>& cell_cluster() const { return cell_cluster_; }
    // N_I, the diagonal of S^T S.
    const std::vector<std::size_t>& cluster_sizes() const { return sizes_; }
    // Dense N_cells x N_clusters form, for tests and small diagnostics.
    Tensor dense() const;

private:
    friend AssignmentMatrix build_assignment(std::vector<std::size_t>, std::size_t);
    std::vector<std::size_t> cell_cluster_;
    std::vector<std::size_t> sizes_;
};

// Throws InputError on an out-of-range index or an empty cluster.
AssignmentMatrix build_assignment(std::vector<std::size_t> cell_cluster, std::size_t n_clusters);

enum class ChannelKind { extensive, intensive };

struct Channel {
    std::string name;
    ChannelKind kind = ChannelKind::intensive;
};

using FeatureSchema = std::vector<Channel>;

struct FeatureMatrix {
    Tensor values;
    FeatureSchema schema;

    // Throws InputError when the schema length differs from the channel
    // count or a value is not finite.
    void check() const;
    std::size_t channel_index(const std::string& name) const;
};

// S^T Z: per-cluster column sums.
Tensor reduce_sum(const Tensor& z, const AssignmentMatrix& s);
// diag(N_I)^-1 S^T Z: per-cluster column means.
Tensor reduce_mean(const Tensor& z, const AssignmentMatrix& s);
// S Z*: each cell receives its cluster's row.
Tensor prolong(const Tensor& z_star, const AssignmentMatrix& s);

// Extensive channels are summed per cluster, intensive ones averaged.
FeatureMatrix reduce(const FeatureMatrix& f, const AssignmentMatrix& s);
FeatureMatrix prolong(const FeatureMatrix& f_star, const AssignmentMatrix& s);

// Facet adjacency of a triangle mesh: elements are neighbors when they share
// an edge. Throws StructuralError if any edge is shared by more than two
// elements.
SparseGraph mesh_to_adjacency(const Microstructure& m);

enum class CoarseNorm { raw, row, binary };

const char* to_string(CoarseNorm norm);
CoarseNorm parse_coarse_norm(const std::string& name);

// Cluster-level adjacency derived from S^T A S.
//
// raw:    weights are S^T A S itself. The diagonal holds twice the number of
//         intra-cluster edges, off-diagonals count cross-cluster edges.
// row:    off-diagonal rows divided by their off-diagonal sum; the diagonal is
//         set to 1 and stands for the separate self channel.
// binary: off-diagonals mapped to {0, 1}; diagonal 1 as for row.
struct CoarseGraph {
    std::size_t cluster_count = 0;
    Tensor weights;
    CoarseNorm norm = CoarseNorm::raw;
};

CoarseGraph coarsen_adjacency(const SparseGraph& a, const AssignmentMatrix& s, CoarseNorm norm);

// Sparse weighted operator used as the neighbor term of a graph convolution.
class WeightedAdjacency {
public:
    WeightedAdjacency() = default;
    // Binary neighbor matrix A_1 of a mesh graph.
    static WeightedAdjacency from_graph(const SparseGraph& g);
    // Neighbor weights of a coarse graph. For raw normalization every entry,
    // diagonal included, takes part; for row and binary the diagonal is the
    // self channel and is left out.
    static WeightedAdjacency from_coarse(const CoarseGraph& g);
    static WeightedAdjacency from_dense(const Tensor& w);

    std::size_t node_count() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    std::size_t nonzero_count() const { return cols_.size(); }

    // A Z and A^T Z.
    Tensor apply(const Tensor& z) const;
    Tensor apply_transpose(const Tensor& z) const;
    // Scales row i by factors[i].
    WeightedAdjacency scale_rows(const std::vector<double>& factors) const;
    Tensor dense() const;

private:
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> cols_;
    std::vector<double> weights_;
};

}  // namespace mlgcn
