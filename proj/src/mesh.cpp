#include "mlgcn/mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "mlgcn/error.hpp"

namespace mlgcn {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Vec2 centroid(const Microstructure& m, const Element& e) {
    const Vec2& a = m.vertices[e.vertices[0]];
    const Vec2& b = m.vertices[e.vertices[1]];
    const Vec2& c = m.vertices[e.vertices[2]];
    return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

void update_areas(Microstructure& m) {
    for (auto& e : m.elements) {
        e.area = signed_area(m.vertices[e.vertices[0]], m.vertices[e.vertices[1]],
                             m.vertices[e.vertices[2]]);
    }
}

void validate(const Microstructure& m, double area_tolerance) {
    if (m.elements.empty()) throw StructuralError("microstructure has no elements");
    if (m.cluster_count == 0) throw StructuralError("microstructure has no clusters");

    std::vector<std::optional<double>> cluster_orientation(m.cluster_count);
    double total = 0.0;
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
        const Element& e = m.elements[i];
        for (std::size_t v : e.vertices) {
            if (v >= m.vertices.size()) {
                throw StructuralError("element " + std::to_string(i) + " references vertex " +
                                      std::to_string(v) + " out of range");
            }
        }
        if (!(e.area > 0.0)) {
            throw StructuralError("element " + std::to_string(i) + " has non-positive area");
        }
        if (e.cluster >= m.cluster_count) {
            throw StructuralError("element " + std::to_string(i) + " has cluster id out of range");
        }
        auto& phi = cluster_orientation[e.cluster];
        if (!phi) {
            phi = e.orientation;
        } else if (*phi != e.orientation) {
            throw StructuralError("orientation varies inside cluster " + std::to_string(e.cluster));
        }
        total += e.area;
    }
    for (std::size_t k = 0; k < m.cluster_count; ++k) {
        if (!cluster_orientation[k]) {
            throw StructuralError("cluster " + std::to_string(k) + " has no elements");
        }
    }
    if (std::abs(total - 1.0) > area_tolerance) {
        throw StructuralError("element areas sum to " + std::to_string(total) + ", expected 1");
    }
}

Microstructure grid_microstructure(
    std::size_t nx, std::size_t ny,
    const std::function<std::pair<std::size_t, double>(const Vec2&)>& region) {
    if (nx == 0 || ny == 0) throw InputError("grid dimensions must be positive");
    Microstructure m;
    m.vertices.reserve((nx + 1) * (ny + 1));
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            m.vertices.push_back({static_cast<double>(i) / static_cast<double>(nx),
                                  static_cast<double>(j) / static_cast<double>(ny)});
        }
    }
    auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
    std::size_t max_cluster = 0;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::array<std::array<std::size_t, 3>, 2> tris{{
                {id(i, j), id(i + 1, j), id(i + 1, j + 1)},
                {id(i, j), id(i + 1, j + 1), id(i, j + 1)},
            }};
            for (const auto& t : tris) {
                Element e;
                e.vertices = t;
                e.area = signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
                const auto [cluster, phi] = region(centroid(m, e));
                e.cluster = cluster;
                e.orientation = phi;
                max_cluster = std::max(max_cluster, cluster);
                m.elements.push_back(e);
            }
        }
    }
    m.cluster_count = max_cluster + 1;
    return m;
}

Microstructure refine_uniform(const Microstructure& m) {
    Microstructure out;
    out.vertices = m.vertices;
    out.cluster_count = m.cluster_count;
    out.label = m.label;
    out.elements.reserve(4 * m.elements.size());

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
    auto mid = [&](std::size_t a, std::size_t b) {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const Vec2& pa = m.vertices[a];
        const Vec2& pb = m.vertices[b];
        out.vertices.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
        const std::size_t idx = out.vertices.size() - 1;
        midpoint.emplace(key, idx);
        return idx;
    };

    for (const Element& e : m.elements) {
        const auto [a, b, c] = e.vertices;
        const std::size_t ab = mid(a, b);
        const std::size_t bc = mid(b, c);
        const std::size_t ca = mid(c, a);
        const std::array<std::array<std::size_t, 3>, 4> children{{
            {a, ab, ca}, {ab, b, bc}, {ca, bc, c}, {ab, bc, ca},
        }};
        for (const auto& t : children) {
            Element child = e;
            child.vertices = t;
            child.area = signed_area(out.vertices[t[0]], out.vertices[t[1]], out.vertices[t[2]]);
            out.elements.push_back(child);
        }
    }
    return out;
}

double wrap_orientation(double phi) {
    constexpr double pi = std::numbers::pi;
    double r = std::fmod(phi, pi);
    if (r < 0.0) r += pi;
    return r >= pi ? 0.0 : r;
}

}  // namespace mlgcn
