#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlgcn/architectures.hpp"
#include "mlgcn/mesh.hpp"

namespace mlgcn {

// Pearson correlation of every pooled feature F_a with the labels across an
// ensemble; nullopt flags a degenerate (constant) feature. Throws InputError
// for fewer than two traces or a label count mismatch.
std::vector<std::optional<double>> feature_output_correlation(std::span<const ForwardTrace> traces,
                                                              std::span<const double> labels);

struct LayerActivation {
    std::string layer;
    std::vector<double> fraction;  // per filter, share of samples with any output above threshold
};

// A filter is active on a sample when any |output| exceeds `threshold`
// (strictly nonzero output for the default 0).
std::vector<LayerActivation> filter_activation_stats(std::span<const ForwardTrace> traces, double threshold = 0.0);

// Whitespace-separated table with a header line of column names.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(const std::filesystem::path& path);

// Per-element field values of every traced layer; cluster-level layers are
// broadcast to their elements. Columns: element orientation <layer>_f<a>...
Table element_fields(const Microstructure& m, const GraphSample& sample, const ForwardTrace& trace);

// Filter map of the last convolution: one row (element, filter, phi, output)
// per element and filter.
Table filter_map(const Microstructure& m, const GraphSample& sample, const ForwardTrace& trace);

// SVG rendering of a per-element field: one filled polygon per element with a
// linear color map over the field range and a legend.
std::string render_field_svg(const Microstructure& m, std::span<const double> values, const std::string& title);

struct ExportSummary {
    std::vector<std::filesystem::path> files;
    std::size_t filter_map_rows = 0;
};

// Writes filter_map.txt, fields.txt and one SVG per field column into
// out_dir. Throws IoError when the directory or a file cannot be written.
ExportSummary export_artifacts(const Microstructure& m, const GraphSample& sample, const ForwardTrace& trace,
                               const std::filesystem::path& out_dir);

}  // namespace mlgcn
