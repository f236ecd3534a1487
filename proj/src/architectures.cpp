#include "mlgcn/architectures.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "mlgcn/error.hpp"

namespace mlgcn {

namespace {

constexpr char kCheckpointMagic[8] = {'M', 'L', 'G', 'C', 'N', 'C', 'K', 'P'};
constexpr std::uint8_t kCheckpointVersion = 1;

const std::string kOrientation = "orientation";
const std::string kVolume = "volume";

}  // namespace

const char* to_string(Variant v) {
    switch (v) {
        case Variant::original: return "original";
        case Variant::full: return "full";
        case Variant::reduced: return "reduced";
        case Variant::down: return "down";
        case Variant::vee: return "vee";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    if (name == "original" || name == "oGCNN") return Variant::original;
    if (name == "full" || name == "fGCNN") return Variant::full;
    if (name == "reduced" || name == "rGCNN") return Variant::reduced;
    if (name == "down" || name == "dGCNN") return Variant::down;
    if (name == "vee" || name == "vGCNN") return Variant::vee;
    throw InputError("unknown model variant '" + name + "'");
}

void ModelSpec::validate() const {
    if (filters == 0 || features == 0 || conv == 0 || dense == 0) {
        throw InputError("model filters, features, conv and dense counts must all be at least 1");
    }
}

FeatureSchema default_input_schema() {
    return {{kOrientation, ChannelKind::intensive}, {kVolume, ChannelKind::extensive}};
}

GraphSample prepare_sample(const Microstructure& m) {
    GraphSample s;
    s.graph = mesh_to_adjacency(m);
    std::vector<std::size_t> cells(m.elements.size());
    Tensor features(m.elements.size(), 2);
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
        cells[i] = m.elements[i].cluster;
        features(i, 0) = wrap_orientation(m.elements[i].orientation);
        features(i, 1) = m.elements[i].area;
    }
    s.assignment = build_assignment(std::move(cells), m.cluster_count);
    s.mesh_adjacency = WeightedAdjacency::from_graph(s.graph);
    s.cluster_row = WeightedAdjacency::from_coarse(coarsen_adjacency(s.graph, s.assignment, CoarseNorm::row));
    s.cluster_binary =
        WeightedAdjacency::from_coarse(coarsen_adjacency(s.graph, s.assignment, CoarseNorm::binary));
    s.mesh_features = FeatureMatrix{std::move(features), default_input_schema()};
    s.mesh_features.check();
    s.cluster_features = reduce(s.mesh_features, s.assignment);
    s.label = m.label;
    return s;
}

std::size_t Model::add_parameter(std::string name, std::size_t rows, std::size_t cols) {
    params_.emplace_back(rows, cols);
    names_.push_back(std::move(name));
    return params_.size() - 1;
}

ConvLayer Model::add_conv(std::string name, Level level, std::size_t in, std::size_t out) {
    ConvLayer layer{name, level, in, out, {}};
    layer.params.self_weights = add_parameter(name + ".self", in, out);
    layer.params.neighbor_weights = add_parameter(name + ".neighbor", in, out);
    layer.params.bias = add_parameter(name + ".bias", 1, out);
    conv_.push_back(layer);
    return layer;
}

DenseLayer Model::add_dense(std::string name, std::size_t in, std::size_t out, Activation a) {
    DenseLayer layer{in, out, a, {}};
    layer.params.weights = add_parameter(name + ".weights", in, out);
    layer.params.bias = add_parameter(name + ".bias", 1, out);
    dense_.push_back(layer);
    return layer;
}

std::size_t Model::scalar_parameter_count() const {
    std::size_t n = 0;
    for (const Tensor& p : params_) n += p.size();
    return n;
}

std::size_t Model::layer_count(Level level) const {
    std::size_t n = 0;
    for (const auto& c : conv_)
        if (c.level == level) ++n;
    return n;
}

Model build_model(const ModelSpec& spec, const FeatureSchema& input_schema) {
    spec.validate();
    bool has_orientation = false, has_volume = false;
    for (const Channel& c : input_schema) {
        if (c.name == kOrientation && c.kind == ChannelKind::intensive) has_orientation = true;
        if (c.name == kVolume && c.kind == ChannelKind::extensive) has_volume = true;
    }
    if (!has_orientation || !has_volume) {
        throw InputError("input schema must provide an intensive 'orientation' and an extensive 'volume' channel");
    }

    Model m;
    m.spec_ = spec;
    m.schema_ = input_schema;
    const std::size_t in = input_schema.size();
    const std::size_t C = spec.filters;
    const std::size_t F = spec.features;
    const std::size_t n = spec.conv;
    auto width = [&](std::size_t layer) { return layer + 1 == n ? F : C; };

    switch (spec.variant) {
        case Variant::original: {
            std::size_t c_in = in;
            for (std::size_t l = 0; l < n; ++l) {
                m.add_conv("cluster_conv" + std::to_string(l), Level::cluster, c_in, width(l));
                c_in = width(l);
            }
            break;
        }
        case Variant::full: {
            std::size_t c_in = in;
            for (std::size_t l = 0; l < n; ++l) {
                m.add_conv("mesh_conv" + std::to_string(l), Level::mesh, c_in, width(l));
                c_in = width(l);
            }
            break;
        }
        case Variant::reduced: {
            m.add_conv("featurize", Level::mesh, in, C);
            std::size_t c_in = C + 1;
            for (std::size_t l = 0; l < n; ++l) {
                m.add_conv("cluster_conv" + std::to_string(l), Level::cluster, c_in, F);
                c_in = F;
            }
            break;
        }
        case Variant::down: {
            std::size_t mesh_in = in;
            std::size_t cluster_state = 1;
            for (std::size_t l = 0; l < n; ++l) {
                m.add_conv("mesh_conv" + std::to_string(l), Level::mesh, mesh_in, C);
                m.add_conv("cluster_conv" + std::to_string(l), Level::cluster, C + cluster_state, F);
                mesh_in = C;
                cluster_state = F;
            }
            break;
        }
        case Variant::vee: {
            m.add_conv("mesh_conv_in", Level::mesh, in, C);
            std::size_t c_in = C + 1;
            for (std::size_t l = 0; l < n; ++l) {
                m.add_conv("cluster_conv" + std::to_string(l), Level::cluster, c_in, C);
                c_in = C;
            }
            m.add_conv("mesh_conv_out", Level::mesh, 2 * C, F);
            break;
        }
    }

    if (spec.dense == 1) {
        m.add_dense("dense0", F, 1, Activation::identity);
    } else {
        m.add_dense("dense0", F, F, Activation::identity);
        for (std::size_t l = 1; l + 1 < spec.dense; ++l) m.add_dense("dense" + std::to_string(l), F, F, spec.activation);
        m.add_dense("dense" + std::to_string(spec.dense - 1), F, 1, Activation::identity);
    }
    return m;
}

void initialize_parameters(Model& model, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto glorot = [&](Tensor& w) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : w.values()) v = dist(rng);
    };
    auto& p = model.parameters();
    for (const auto& c : model.conv_layers()) {
        glorot(p[c.params.self_weights]);
        glorot(p[c.params.neighbor_weights]);
        p[c.params.bias].fill(0.0);
    }
    for (const auto& d : model.dense_layers()) {
        glorot(p[d.params.weights]);
        p[d.params.bias].fill(0.0);
    }
}

Model::Recorded Model::record(Tape& tape, const GraphSample& sample, const std::vector<Tensor>& params) const {
    if (!sample.normalized) throw InputError("forward: sample features have not been normalized");
    if (sample.mesh_features.schema.size() != schema_.size() ||
        sample.mesh_features.values.rows() != sample.assignment.cell_count()) {
        throw InputError("forward: sample features do not match the model's input schema");
    }
    if (params.size() != params_.size()) throw InputError("forward: parameter list does not match the model");

    Recorded rec;
    std::size_t next = 0;
    auto conv = [&](Var z) {
        const ConvLayer& layer = conv_.at(next++);
        const WeightedAdjacency& adj = layer.level == Level::mesh ? sample.mesh_adjacency
                                       : spec_.variant == Variant::original ? sample.cluster_binary
                                                                            : sample.cluster_row;
        const Var out = graph_convolution(tape, z, adj, tape.parameter(layer.params.self_weights, params[layer.params.self_weights]),
                                          tape.parameter(layer.params.neighbor_weights, params[layer.params.neighbor_weights]),
                                          tape.parameter(layer.params.bias, params[layer.params.bias]), spec_.activation);
        rec.layers.push_back(out);
        return out;
    };

    const Var mesh_in = tape.constant(sample.mesh_features.values);
    const std::size_t volume = sample.cluster_features.channel_index(kVolume);
    Tensor volumes(sample.assignment.cluster_count(), 1);
    for (std::size_t k = 0; k < volumes.rows(); ++k) volumes(k, 0) = sample.cluster_features.values(k, volume);
    const Var cluster_volume = tape.constant(std::move(volumes));

    Var pooled{};
    switch (spec_.variant) {
        case Variant::original: {
            Var z = tape.constant(sample.cluster_features.values);
            for (std::size_t l = 0; l < spec_.conv; ++l) z = conv(z);
            pooled = tape.mean_rows(z);
            break;
        }
        case Variant::full: {
            Var z = mesh_in;
            for (std::size_t l = 0; l < spec_.conv; ++l) z = conv(z);
            pooled = tape.mean_rows(z);
            break;
        }
        case Variant::reduced: {
            const Var featurized = conv(mesh_in);
            Var z = tape.concat(tape.reduce_mean(featurized, sample.assignment), cluster_volume);
            for (std::size_t l = 0; l < spec_.conv; ++l) z = conv(z);
            pooled = tape.mean_rows(z);
            break;
        }
        case Variant::down: {
            Var mesh = mesh_in;
            Var cluster = cluster_volume;
            for (std::size_t l = 0; l < spec_.conv; ++l) {
                mesh = conv(mesh);
                cluster = conv(tape.concat(tape.reduce_mean(mesh, sample.assignment), cluster));
            }
            pooled = tape.mean_rows(cluster);
            break;
        }
        case Variant::vee: {
            const Var mesh = conv(mesh_in);
            Var cluster = tape.concat(tape.reduce_mean(mesh, sample.assignment), cluster_volume);
            for (std::size_t l = 0; l < spec_.conv; ++l) cluster = conv(cluster);
            const Var up = tape.concat(tape.prolong(cluster, sample.assignment), mesh);
            pooled = tape.mean_rows(conv(up));
            break;
        }
    }
    rec.features = pooled;

    Var x = pooled;
    for (const DenseLayer& d : dense_) {
        x = dense(tape, x, tape.parameter(d.params.weights, params[d.params.weights]),
                  tape.parameter(d.params.bias, params[d.params.bias]), d.activation);
    }
    rec.prediction = x;
    return rec;
}

ForwardTrace forward(const Model& model, const GraphSample& sample) {
    Tape tape(model.parameters().size());
    const auto rec = model.record(tape, sample, model.parameters());
    ForwardTrace trace;
    for (std::size_t l = 0; l < rec.layers.size(); ++l) {
        const ConvLayer& layer = model.conv_layers()[l];
        trace.layers.push_back({layer.name, layer.level, tape.value(rec.layers[l])});
    }
    trace.features = tape.value(rec.features);
    trace.prediction = tape.value(rec.prediction)(0, 0);
    return trace;
}

double predict(const Model& model, const GraphSample& sample) {
    Tape tape(model.parameters().size());
    return tape.value(model.record(tape, sample, model.parameters()).prediction)(0, 0);
}

Var sample_loss(Tape& tape, const Model& model, const GraphSample& sample, const std::vector<Tensor>& params) {
    if (!sample.label) throw InputError("sample has no label");
    const auto rec = model.record(tape, sample, params);
    return tape.mse(rec.prediction, Tensor(1, 1, *sample.label));
}

GradCheckResult grad_check(const Model& model, const GraphSample& sample, double h) {
    return grad_check(
        [&](Tape& tape, const std::vector<Tensor>& p) { return sample_loss(tape, model, sample, p); },
        model.parameters(), h);
}

namespace {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 4);
    }
    void f64(double v) {
        const auto u = std::bit_cast<std::uint64_t>(v);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
        bytes(b, 8);
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}
    void bytes(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (!in_) throw InputError(source_ + ": truncated checkpoint");
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return std::bit_cast<double>(u);
    }
    [[noreturn]] void fail(const std::string& what) const { throw InputError(source_ + ": " + what); }

private:
    std::istream& in_;
    std::string source_;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    Writer w(out);
    const ModelSpec& s = model.spec();
    w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
    w.u8(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(s.variant));
    w.u8(static_cast<std::uint8_t>(s.activation));
    w.u32(static_cast<std::uint32_t>(s.filters));
    w.u32(static_cast<std::uint32_t>(s.features));
    w.u32(static_cast<std::uint32_t>(s.conv));
    w.u32(static_cast<std::uint32_t>(s.dense));
    w.u32(static_cast<std::uint32_t>(model.input_schema().size()));
    for (const Channel& c : model.input_schema()) {
        w.u32(static_cast<std::uint32_t>(c.name.size()));
        w.bytes(c.name.data(), c.name.size());
        w.u8(static_cast<std::uint8_t>(c.kind));
    }
    const auto& params = model.parameters();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const Tensor& p : params) {
        w.u32(static_cast<std::uint32_t>(p.rows()));
        w.u32(static_cast<std::uint32_t>(p.cols()));
    }
    for (const Tensor& p : params)
        for (double v : p.values()) w.f64(v);
    if (!out) throw IoError("failed writing " + path.string());
}

Model read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Reader r(in, path.string());
    char magic[8];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) r.fail("not a model checkpoint");
    if (r.u8() != kCheckpointVersion) r.fail("unsupported checkpoint version");
    ModelSpec spec;
    const std::uint8_t variant = r.u8();
    const std::uint8_t activation = r.u8();
    if (variant > static_cast<std::uint8_t>(Variant::vee)) r.fail("unknown variant tag");
    if (activation > static_cast<std::uint8_t>(Activation::identity)) r.fail("unknown activation tag");
    spec.variant = static_cast<Variant>(variant);
    spec.activation = static_cast<Activation>(activation);
    spec.filters = r.u32();
    spec.features = r.u32();
    spec.conv = r.u32();
    spec.dense = r.u32();
    FeatureSchema schema(r.u32());
    for (Channel& c : schema) {
        c.name.resize(r.u32());
        r.bytes(c.name.data(), c.name.size());
        const std::uint8_t kind = r.u8();
        if (kind > static_cast<std::uint8_t>(ChannelKind::intensive)) r.fail("unknown channel kind");
        c.kind = static_cast<ChannelKind>(kind);
    }
    Model model = build_model(spec, schema);
    auto& params = model.parameters();
    if (r.u32() != params.size()) r.fail("tensor count does not match the model layout");
    for (const Tensor& p : params) {
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        if (rows != p.rows() || cols != p.cols()) r.fail("tensor shape does not match the model layout");
    }
    for (Tensor& p : params)
        for (double& v : p.values()) v = r.f64();
    return model;
}

}  // namespace mlgcn
