#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlgcn/autodiff.hpp"
#include "mlgcn/graph.hpp"
#include "mlgcn/mesh.hpp"
#include "mlgcn/nn.hpp"

namespace mlgcn {

enum class Variant { original, full, reduced, down, vee };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);

struct ModelSpec {
    Variant variant = Variant::reduced;
    std::size_t filters = 16;   // width of mesh-level (featurization) convolutions
    std::size_t features = 3;   // width of the last convolution, i.e. pooled features
    std::size_t conv = 2;
    std::size_t dense = 2;      // head layers, the linear mixing layer included
    Activation activation = Activation::relu;

    void validate() const;
};

// Model inputs derived from one microstructure. Built once per sample; the
// sparse operators are referenced by tapes during forward passes.
struct GraphSample {
    SparseGraph graph;
    AssignmentMatrix assignment;
    WeightedAdjacency mesh_adjacency;    // binary A_1
    WeightedAdjacency cluster_row;       // row-normalized coarse neighbors
    WeightedAdjacency cluster_binary;    // binary coarse neighbors
    FeatureMatrix mesh_features;         // orientation (intensive), volume (extensive)
    FeatureMatrix cluster_features;      // reduce(mesh_features)
    std::optional<double> label;
    bool normalized = false;
};

// Default input schema: orientation and element volume.
FeatureSchema default_input_schema();

GraphSample prepare_sample(const Microstructure& m);

enum class Level { mesh, cluster };

struct TraceLayer {
    std::string name;
    Level level = Level::mesh;
    Tensor output;  // nodes at `level` x channels
};

struct ForwardTrace {
    std::vector<TraceLayer> layers;
    Tensor features;  // pooled global features F_a, 1 x N_features
    double prediction = 0.0;
};

struct ConvLayer {
    std::string name;
    Level level = Level::mesh;
    std::size_t in = 0;
    std::size_t out = 0;
    ConvIndices params;
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation activation = Activation::identity;
    DenseIndices params;
};

class Model {
public:
    const ModelSpec& spec() const { return spec_; }
    const FeatureSchema& input_schema() const { return schema_; }
    const std::vector<ConvLayer>& conv_layers() const { return conv_; }
    const std::vector<DenseLayer>& dense_layers() const { return dense_; }

    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    const std::vector<std::string>& parameter_names() const { return names_; }
    // Total number of trainable scalars.
    std::size_t scalar_parameter_count() const;
    std::size_t layer_count(Level level) const;

    struct Recorded {
        Var prediction;
        Var features;
        std::vector<Var> layers;  // aligned with conv_layers()
    };

    // Records a forward pass over `params` (shaped like parameters()).
    // Throws InputError if the sample is not normalized or does not match
    // the input schema.
    Recorded record(Tape& tape, const GraphSample& sample, const std::vector<Tensor>& params) const;

private:
    friend Model build_model(const ModelSpec& spec, const FeatureSchema& input_schema);
    std::size_t add_parameter(std::string name, std::size_t rows, std::size_t cols);
    ConvLayer add_conv(std::string name, Level level, std::size_t in, std::size_t out);
    DenseLayer add_dense(std::string name, std::size_t in, std::size_t out, Activation a);

    ModelSpec spec_;
    FeatureSchema schema_;
    std::vector<ConvLayer> conv_;
    std::vector<DenseLayer> dense_;
    std::vector<Tensor> params_;
    std::vector<std::string> names_;
};

// Wires a variant with all parameters zero. Throws InputError for an invalid
// spec or a schema without orientation (intensive) and volume (extensive).
Model build_model(const ModelSpec& spec, const FeatureSchema& input_schema);

// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
void initialize_parameters(Model& model, std::uint64_t seed);

ForwardTrace forward(const Model& model, const GraphSample& sample);
double predict(const Model& model, const GraphSample& sample);

// Squared-error loss of one sample against its label, recorded on `tape`.
Var sample_loss(Tape& tape, const Model& model, const GraphSample& sample, const std::vector<Tensor>& params);

// Reverse-mode versus central-difference gradients of the sample loss.
GradCheckResult grad_check(const Model& model, const GraphSample& sample, double h);

// Binary checkpoint, little-endian:
//   "MLGCNCKP" | u8 format version | u8 variant | u8 activation
//   | u32 filters, features, conv, dense
//   | u32 channel count, per channel: u32 name length, name bytes, u8 kind
//   | u32 tensor count, per tensor: u32 rows, u32 cols
//   | all tensor values as f64 in order
void write_checkpoint(const std::filesystem::path& path, const Model& model);
Model read_checkpoint(const std::filesystem::path& path);

}  // namespace mlgcn
