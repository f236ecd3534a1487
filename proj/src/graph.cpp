#include "mlgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mlgcn/error.hpp"

namespace mlgcn {

SparseGraph::SparseGraph(std::size_t node_count,
                         const std::vector<std::pair<std::size_t, std::size_t>>& edges)
    : neighbors_(node_count) {
    for (const auto& [i, j] : edges) {
        if (i >= node_count || j >= node_count) throw InputError("edge index out of range");
        if (i == j) throw InputError("self pair in adjacency");
        neighbors_[i].push_back(j);
        neighbors_[j].push_back(i);
    }
    for (auto& nb : neighbors_) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        edge_count_ += nb.size();
    }
    edge_count_ /= 2;
}

bool SparseGraph::has_edge(std::size_t i, std::size_t j) const {
    const auto& nb = neighbors_[i];
    return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<std::pair<std::size_t, std::size_t>> SparseGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < neighbors_.size(); ++i)
        for (std::size_t j : neighbors_[i])
            if (i < j) out.emplace_back(i, j);
    return out;
}

AssignmentMatrix build_assignment(std::vector<std::size_t> cell_cluster, std::size_t n_clusters) {
    AssignmentMatrix s;
    s.sizes_.assign(n_clusters, 0);
    for (std::size_t i = 0; i < cell_cluster.size(); ++i) {
        if (cell_cluster[i] >= n_clusters) {
            throw InputError("cell " + std::to_string(i) + " assigned to cluster " +
                             std::to_string(cell_cluster[i]) + " of " + std::to_string(n_clusters));
        }
        ++s.sizes_[cell_cluster[i]];
    }
    for (std::size_t k = 0; k < n_clusters; ++k) {
        if (s.sizes_[k] == 0) throw InputError("cluster " + std::to_string(k) + " is empty");
    }
    s.cell_cluster_ = std::move(cell_cluster);
    return s;
}

Tensor AssignmentMatrix::dense() const {
    Tensor t(cell_count(), cluster_count());
    for (std::size_t i = 0; i < cell_count(); ++i) t(i, cell_cluster_[i]) = 1.0;
    return t;
}

void FeatureMatrix::check() const {
    if (schema.size() != values.cols()) {
        throw InputError("feature schema has " + std::to_string(schema.size()) + " channels, values have " +
                         std::to_string(values.cols()));
    }
    if (!values.all_finite()) throw InputError("feature matrix contains non-finite values");
}

std::size_t FeatureMatrix::channel_index(const std::string& name) const {
    for (std::size_t c = 0; c < schema.size(); ++c)
        if (schema[c].name == name) return c;
    throw InputError("feature channel '" + name + "' not present");
}

Tensor reduce_sum(const Tensor& z, const AssignmentMatrix& s) {
    if (z.rows() != s.cell_count()) {
        throw InputError("reduce: " + std::to_string(z.rows()) + " rows for " +
                         std::to_string(s.cell_count()) + " cells");
    }
    Tensor out(s.cluster_count(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto o = out.row(s.cluster_of(i));
        auto r = z.row(i);
        for (std::size_t c = 0; c < z.cols(); ++c) o[c] += r[c];
    }
    return out;
}

Tensor reduce_mean(const Tensor& z, const AssignmentMatrix& s) {
    Tensor out = reduce_sum(z, s);
    for (std::size_t k = 0; k < out.rows(); ++k) {
        const double inv = 1.0 / static_cast<double>(s.cluster_sizes()[k]);
        for (double& v : out.row(k)) v *= inv;
    }
    return out;
}

Tensor prolong(const Tensor& z_star, const AssignmentMatrix& s) {
    if (z_star.rows() != s.cluster_count()) {
        throw InputError("prolong: " + std::to_string(z_star.rows()) + " rows for " +
                         std::to_string(s.cluster_count()) + " clusters");
    }
    Tensor out(s.cell_count(), z_star.cols());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto src = z_star.row(s.cluster_of(i));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

FeatureMatrix reduce(const FeatureMatrix& f, const AssignmentMatrix& s) {
    f.check();
    const Tensor sums = reduce_sum(f.values, s);
    FeatureMatrix out{sums, f.schema};
    for (std::size_t c = 0; c < f.schema.size(); ++c) {
        if (f.schema[c].kind != ChannelKind::intensive) continue;
        for (std::size_t k = 0; k < out.values.rows(); ++k)
            out.values(k, c) /= static_cast<double>(s.cluster_sizes()[k]);
    }
    return out;
}

FeatureMatrix prolong(const FeatureMatrix& f_star, const AssignmentMatrix& s) {
    f_star.check();
    return {prolong(f_star.values, s), f_star.schema};
}

SparseGraph mesh_to_adjacency(const Microstructure& m) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_owners;
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        const auto& v = m.elements[e].vertices;
        for (int k = 0; k < 3; ++k) {
            edge_owners[std::minmax(v[k], v[(k + 1) % 3])].push_back(e);
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& [edge, owners] : edge_owners) {
        if (owners.size() > 2) {
            throw StructuralError("mesh edge (" + std::to_string(edge.first) + ", " +
                                  std::to_string(edge.second) + ") shared by " +
                                  std::to_string(owners.size()) + " elements");
        }
        if (owners.size() == 2) edges.emplace_back(owners[0], owners[1]);
    }
    return SparseGraph(m.elements.size(), edges);
}

const char* to_string(CoarseNorm norm) {
    switch (norm) {
        case CoarseNorm::raw: return "raw";
        case CoarseNorm::row: return "row";
        case CoarseNorm::binary: return "binary";
    }
    return "?";
}

CoarseNorm parse_coarse_norm(const std::string& name) {
    if (name == "raw") return CoarseNorm::raw;
    if (name == "row") return CoarseNorm::row;
    if (name == "binary") return CoarseNorm::binary;
    throw InputError("unknown coarse normalization '" + name + "'");
}

CoarseGraph coarsen_adjacency(const SparseGraph& a, const AssignmentMatrix& s, CoarseNorm norm) {
    if (a.node_count() != s.cell_count()) {
        throw InputError("coarsen_adjacency: graph has " + std::to_string(a.node_count()) +
                         " nodes, assignment has " + std::to_string(s.cell_count()) + " cells");
    }
    const std::size_t n = s.cluster_count();
    CoarseGraph g{n, Tensor(n, n), norm};
    for (std::size_t i = 0; i < a.node_count(); ++i) {
        const std::size_t ki = s.cluster_of(i);
        for (std::size_t j : a.neighbors(i)) g.weights(ki, s.cluster_of(j)) += 1.0;
    }
    if (norm == CoarseNorm::raw) return g;

    for (std::size_t k = 0; k < n; ++k) {
        double off = 0.0;
        for (std::size_t l = 0; l < n; ++l)
            if (l != k) off += g.weights(k, l);
        for (std::size_t l = 0; l < n; ++l) {
            double& w = g.weights(k, l);
            if (l == k) {
                w = 1.0;
            } else if (norm == CoarseNorm::binary) {
                w = w > 0.0 ? 1.0 : 0.0;
            } else if (off > 0.0) {
                w /= off;
            }
        }
    }
    return g;
}

WeightedAdjacency WeightedAdjacency::from_graph(const SparseGraph& g) {
    WeightedAdjacency w;
    w.row_ptr_.reserve(g.node_count() + 1);
    w.row_ptr_.push_back(0);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        for (std::size_t j : g.neighbors(i)) {
            w.cols_.push_back(j);
            w.weights_.push_back(1.0);
        }
        w.row_ptr_.push_back(w.cols_.size());
    }
    return w;
}

WeightedAdjacency WeightedAdjacency::from_coarse(const CoarseGraph& g) {
    Tensor w = g.weights;
    if (g.norm != CoarseNorm::raw) {
        for (std::size_t k = 0; k < g.cluster_count; ++k) w(k, k) = 0.0;
    }
    return from_dense(w);
}

WeightedAdjacency WeightedAdjacency::from_dense(const Tensor& dense) {
    if (dense.rows() != dense.cols()) throw InputError("adjacency must be square");
    WeightedAdjacency w;
    w.row_ptr_.push_back(0);
    for (std::size_t i = 0; i < dense.rows(); ++i) {
        for (std::size_t j = 0; j < dense.cols(); ++j) {
            if (dense(i, j) != 0.0) {
                w.cols_.push_back(j);
                w.weights_.push_back(dense(i, j));
            }
        }
        w.row_ptr_.push_back(w.cols_.size());
    }
    return w;
}

Tensor WeightedAdjacency::apply(const Tensor& z) const {
    if (z.rows() != node_count()) throw InputError("adjacency apply: row mismatch");
    Tensor out(z.rows(), z.cols());
    for (std::size_t i = 0; i < node_count(); ++i) {
        auto o = out.row(i);
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            const double w = weights_[p];
            auto src = z.row(cols_[p]);
            for (std::size_t c = 0; c < z.cols(); ++c) o[c] += w * src[c];
        }
    }
    return out;
}

Tensor WeightedAdjacency::apply_transpose(const Tensor& z) const {
    if (z.rows() != node_count()) throw InputError("adjacency apply_transpose: row mismatch");
    Tensor out(z.rows(), z.cols());
    for (std::size_t i = 0; i < node_count(); ++i) {
        auto src = z.row(i);
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            const double w = weights_[p];
            auto o = out.row(cols_[p]);
            for (std::size_t c = 0; c < z.cols(); ++c) o[c] += w * src[c];
        }
    }
    return out;
}

WeightedAdjacency WeightedAdjacency::scale_rows(const std::vector<double>& factors) const {
    if (factors.size() != node_count()) throw InputError("scale_rows: factor count mismatch");
    WeightedAdjacency out = *this;
    for (std::size_t i = 0; i < node_count(); ++i)
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) out.weights_[p] *= factors[i];
    return out;
}

Tensor WeightedAdjacency::dense() const {
    Tensor t(node_count(), node_count());
    for (std::size_t i = 0; i < node_count(); ++i)
        for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) t(i, cols_[p]) = weights_[p];
    return t;
}

}  // namespace mlgcn
