#include "mlgcn/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mlgcn/error.hpp"

namespace mlgcn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
    throw InputError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_real(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (ec != std::errc()) throw InputError("cannot format real");
    return std::string(buf, ptr);
}

void write_sample(std::ostream& out, const Microstructure& m) {
    out << m.vertices.size() << ' ' << m.elements.size() << ' ' << m.cluster_count << '\n';
    for (const Vec2& p : m.vertices) out << format_real(p.x) << ' ' << format_real(p.y) << '\n';
    for (const Element& e : m.elements) {
        out << e.vertices[0] << ' ' << e.vertices[1] << ' ' << e.vertices[2] << ' ' << e.cluster << ' '
            << format_real(e.orientation) << ' ' << format_real(e.area) << '\n';
    }
    if (m.label) out << "label " << format_real(*m.label) << '\n';
}

Microstructure read_sample(std::istream& in, const std::string& source) {
    Microstructure m;
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!trim(line).empty()) return true;
        }
        return false;
    };

    if (!next_line()) parse_fail(source, lineno, "empty sample file");
    std::size_t nv = 0, ne = 0, nc = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> nv >> ne >> nc)) parse_fail(source, lineno, "expected 'nv ne nc'");
    }
    m.cluster_count = nc;
    m.vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        if (!next_line()) parse_fail(source, lineno, "unexpected end of file in vertex block");
        std::istringstream ss(line);
        Vec2 p;
        if (!(ss >> p.x >> p.y)) parse_fail(source, lineno, "expected 'x y'");
        m.vertices.push_back(p);
    }
    m.elements.reserve(ne);
    for (std::size_t i = 0; i < ne; ++i) {
        if (!next_line()) parse_fail(source, lineno, "unexpected end of file in element block");
        std::istringstream ss(line);
        Element e;
        if (!(ss >> e.vertices[0] >> e.vertices[1] >> e.vertices[2] >> e.cluster >> e.orientation >> e.area)) {
            parse_fail(source, lineno, "expected 'v0 v1 v2 cluster_id orientation area'");
        }
        for (std::size_t v : e.vertices)
            if (v >= nv) parse_fail(source, lineno, "vertex index " + std::to_string(v) + " out of range");
        if (e.cluster >= nc) parse_fail(source, lineno, "cluster index " + std::to_string(e.cluster) + " out of range");
        m.elements.push_back(e);
    }
    if (next_line()) {
        std::istringstream ss(line);
        std::string key;
        double kappa = 0.0;
        if (!(ss >> key >> kappa) || key != "label") parse_fail(source, lineno, "expected 'label kappa_eff'");
        m.label = kappa;
        if (next_line()) parse_fail(source, lineno, "trailing content after label");
    }
    return m;
}

void write_sample_file(const std::filesystem::path& path, const Microstructure& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_sample(out, m);
    if (!out) throw IoError("failed writing " + path.string());
}

Microstructure read_sample_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_sample(in, path.string());
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "[config]\n";
    for (const auto& [k, v] : manifest.config) out << k << " = " << v << '\n';
    out << "[samples]\n";
    for (const auto& e : manifest.entries) {
        out << e.path << ' ' << e.element_count << ' ' << e.cluster_count << ' ' << (e.labeled ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Manifest m;
    enum class Section { none, config, samples } section = Section::none;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t == "[config]") {
            section = Section::config;
        } else if (t == "[samples]") {
            section = Section::samples;
        } else if (section == Section::config) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) parse_fail(path.string(), lineno, "expected 'key = value'");
            m.config.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } else if (section == Section::samples) {
            std::istringstream ss(t);
            ManifestEntry e;
            int labeled = 0;
            if (!(ss >> e.path >> e.element_count >> e.cluster_count >> labeled)) {
                parse_fail(path.string(), lineno, "expected 'path ne nc labeled'");
            }
            e.labeled = labeled != 0;
            m.entries.push_back(e);
        } else {
            parse_fail(path.string(), lineno, "content outside of a section");
        }
    }
    return m;
}

Dataset load_dataset(const std::filesystem::path& directory) {
    Dataset d;
    d.directory = directory;
    d.manifest = read_manifest(directory / "manifest.txt");
    d.samples.reserve(d.manifest.entries.size());
    for (const auto& e : d.manifest.entries) d.samples.push_back(read_sample_file(directory / e.path));
    return d;
}

void save_dataset(const Dataset& dataset) {
    Manifest manifest = dataset.manifest;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        write_sample_file(dataset.directory / manifest.entries[i].path, dataset.samples[i]);
        manifest.entries[i].labeled = dataset.samples[i].label.has_value();
    }
    write_manifest(dataset.directory / "manifest.txt", manifest);
}

}  // namespace mlgcn
