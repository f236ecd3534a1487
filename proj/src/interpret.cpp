#include "mlgcn/interpret.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlgcn/baselines.hpp"
#include "mlgcn/dataset_io.hpp"
#include "mlgcn/error.hpp"
#include "mlgcn/graph.hpp"

namespace mlgcn {

std::vector<std::optional<double>> feature_output_correlation(std::span<const ForwardTrace> traces,
                                                              std::span<const double> labels) {
    if (traces.empty()) throw InputError("feature correlation over an empty ensemble");
    if (traces.size() < 2) throw InputError("feature correlation needs at least two samples");
    if (labels.size() != traces.size()) throw InputError("feature correlation: label count mismatch");
    const std::size_t n_features = traces.front().features.cols();
    std::vector<std::optional<double>> rho;
    for (std::size_t a = 0; a < n_features; ++a) {
        std::vector<double> series;
        series.reserve(traces.size());
        for (const auto& t : traces) series.push_back(t.features(0, a));
        rho.push_back(pearson(series, labels));
    }
    return rho;
}

std::vector<LayerActivation> filter_activation_stats(std::span<const ForwardTrace> traces, double threshold) {
    if (traces.empty()) throw InputError("activation statistics over an empty ensemble");
    std::vector<LayerActivation> stats;
    for (const auto& layer : traces.front().layers) stats.push_back({layer.name, std::vector<double>(layer.output.cols(), 0.0)});
    for (const auto& trace : traces) {
        if (trace.layers.size() != stats.size()) throw InputError("activation statistics: traces differ in layout");
        for (std::size_t l = 0; l < stats.size(); ++l) {
            const Tensor& z = trace.layers[l].output;
            for (std::size_t f = 0; f < z.cols(); ++f) {
                bool active = false;
                for (std::size_t i = 0; i < z.rows() && !active; ++i) active = std::abs(z(i, f)) > threshold;
                if (active) stats[l].fraction[f] += 1.0;
            }
        }
    }
    for (auto& s : stats)
        for (double& f : s.fraction) f /= static_cast<double>(traces.size());
    return stats;
}

void write_table(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t c = 0; c < table.header.size(); ++c) out << (c ? " " : "") << table.header[c];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << format_real(row[c]);
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": missing header");
    {
        std::istringstream ss(line);
        std::string name;
        while (ss >> name) t.header.push_back(name);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<double> row;
        double v;
        while (ss >> v) row.push_back(v);
        if (row.size() != t.header.size()) throw InputError(path.string() + ": row width differs from header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

namespace {

// Layer output at element level.
Tensor element_level(const GraphSample& sample, const TraceLayer& layer) {
    return layer.level == Level::mesh ? layer.output : prolong(layer.output, sample.assignment);
}

std::array<double, 3> colormap(double t) {
    // Blue -> white -> red.
    t = std::clamp(t, 0.0, 1.0);
    if (t < 0.5) {
        const double s = t / 0.5;
        return {0.23 + s * (0.97 - 0.23), 0.30 + s * (0.97 - 0.30), 0.75 + s * (0.97 - 0.75)};
    }
    const double s = (t - 0.5) / 0.5;
    return {0.97 + s * (0.71 - 0.97), 0.97 + s * (0.02 - 0.97), 0.97 + s * (0.15 - 0.97)};
}

std::string hex_color(const std::array<double, 3>& rgb) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(rgb[0] * 255)),
                  static_cast<int>(std::lround(rgb[1] * 255)), static_cast<int>(std::lround(rgb[2] * 255)));
    return buf;
}

}  // namespace

Table element_fields(const Microstructure& m, const GraphSample& sample, const ForwardTrace& trace) {
    Table t;
    t.header = {"element", "orientation"};
    std::vector<Tensor> fields;
    for (const auto& layer : trace.layers) {
        fields.push_back(element_level(sample, layer));
        for (std::size_t f = 0; f < layer.output.cols(); ++f) t.header.push_back(layer.name + "_f" + std::to_string(f));
    }
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        std::vector<double> row{static_cast<double>(e), m.elements[e].orientation};
        for (const Tensor& z : fields)
            for (std::size_t f = 0; f < z.cols(); ++f) row.push_back(z(e, f));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table filter_map(const Microstructure& m, const GraphSample& sample, const ForwardTrace& trace) {
    if (trace.layers.empty()) throw InputError("filter map: trace has no convolution layers");
    const Tensor z = element_level(sample, trace.layers.back());
    if (z.rows() != m.elements.size()) throw InputError("filter map: trace does not match the sample");
    Table t;
    t.header = {"element", "filter", "phi", "output"};
    for (std::size_t e = 0; e < m.elements.size(); ++e)
        for (std::size_t f = 0; f < z.cols(); ++f)
            t.rows.push_back({static_cast<double>(e), static_cast<double>(f), m.elements[e].orientation, z(e, f)});
    return t;
}

std::string render_field_svg(const Microstructure& m, std::span<const double> values, const std::string& title) {
    if (values.size() != m.elements.size()) throw InputError("render: one value per element required");
    constexpr double size = 400.0, margin = 20.0, legend_x = 440.0;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    const double range = hi - lo;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"540\" height=\"470\" viewBox=\"0 0 540 470\">\n";
    svg << "<title>" << title << "</title>\n";
    svg << "<defs><linearGradient id=\"cmap\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
    for (int s = 0; s <= 10; ++s) {
        svg << "<stop offset=\"" << s / 10.0 << "\" stop-color=\"" << hex_color(colormap(s / 10.0)) << "\"/>\n";
    }
    svg << "</linearGradient></defs>\n<g stroke=\"#404040\" stroke-width=\"0.3\">\n";
    for (std::size_t e = 0; e < m.elements.size(); ++e) {
        const double t = range > 0.0 ? (values[e] - lo) / range : 0.5;
        svg << "<polygon points=\"";
        for (int k = 0; k < 3; ++k) {
            const Vec2& p = m.vertices[m.elements[e].vertices[k]];
            svg << (k ? " " : "") << margin + p.x * size << ',' << margin + (1.0 - p.y) * size;
        }
        svg << "\" fill=\"" << hex_color(colormap(t)) << "\"/>\n";
    }
    svg << "</g>\n";
    svg << "<rect x=\"" << legend_x << "\" y=\"" << margin << "\" width=\"20\" height=\"" << size
        << "\" fill=\"url(#cmap)\" stroke=\"#404040\"/>\n";
    svg << "<text x=\"" << legend_x + 25 << "\" y=\"" << margin + 10 << "\" font-size=\"11\">" << format_real(hi) << "</text>\n";
    svg << "<text x=\"" << legend_x + 25 << "\" y=\"" << margin + size << "\" font-size=\"11\">" << format_real(lo) << "</text>\n";
    svg << "<text x=\"" << margin << "\" y=\"" << margin + size + 30 << "\" font-size=\"13\">" << title << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

ExportSummary export_artifacts(const Microstructure& m, const GraphSample& sample, const ForwardTrace& trace,
                               const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

    ExportSummary summary;
    const Table map = filter_map(m, sample, trace);
    write_table(out_dir / "filter_map.txt", map);
    summary.files.push_back(out_dir / "filter_map.txt");
    summary.filter_map_rows = map.rows.size();

    const Table fields = element_fields(m, sample, trace);
    write_table(out_dir / "fields.txt", fields);
    summary.files.push_back(out_dir / "fields.txt");

    for (std::size_t c = 1; c < fields.header.size(); ++c) {
        std::vector<double> column;
        column.reserve(fields.rows.size());
        for (const auto& row : fields.rows) column.push_back(row[c]);
        const auto path = out_dir / (fields.header[c] + ".svg");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        out << render_field_svg(m, column, fields.header[c]);
        if (!out) throw IoError("failed writing " + path.string());
        summary.files.push_back(path);
    }
    return summary;
}

}  // namespace mlgcn
