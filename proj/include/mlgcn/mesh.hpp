#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace mlgcn {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// One linear triangle of a polycrystal sample. `cluster` is the crystal the
// element belongs to and `orientation` that crystal's angle in [0, pi).
struct Element {
    std::array<std::size_t, 3> vertices{};
    std::size_t cluster = 0;
    double orientation = 0.0;
    double area = 0.0;
};

// A triangulated sample of the unit square. Elements are grouped into
// `cluster_count` crystals; `label` holds the effective conductivity once the
// sample has been solved.
struct Microstructure {
    std::vector<Vec2> vertices;
    std::vector<Element> elements;
    std::size_t cluster_count = 0;
    std::optional<double> label;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t element_count() const { return elements.size(); }
};

// Signed area of the triangle (a, b, c); positive for counter-clockwise order.
double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

// Checks index ranges, positive areas that sum to one, cluster coverage and
// per-cluster constant orientation. Throws StructuralError on violation.
void validate(const Microstructure& m, double area_tolerance = 1e-12);

// Recomputes every element area from its vertex coordinates.
void update_areas(Microstructure& m);

// Structured nx-by-ny grid of the unit square, each cell split into two
// counter-clockwise triangles. `region` maps an element centroid to a
// (cluster, orientation) pair; clusters must come out contiguous from zero.
Microstructure grid_microstructure(
    std::size_t nx, std::size_t ny,
    const std::function<std::pair<std::size_t, double>(const Vec2&)>& region);

// Splits every triangle into four through its edge midpoints. Shared edges
// share their midpoint so a conforming mesh stays conforming.
Microstructure refine_uniform(const Microstructure& m);

Vec2 centroid(const Microstructure& m, const Element& e);

// Representative of phi modulo pi in [0, pi).
double wrap_orientation(double phi);

}  // namespace mlgcn
