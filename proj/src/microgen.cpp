#include "mlgcn/microgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "mlgcn/dataset_io.hpp"
#include "mlgcn/error.hpp"

namespace mlgcn {

namespace {

constexpr double kMergeTolerance = 1e-10;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Keeps the part of a convex polygon where dot(p - origin, normal) <= 0.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& origin, const Vec2& normal) {
    auto side = [&](const Vec2& p) { return (p.x - origin.x) * normal.x + (p.y - origin.y) * normal.y; };
    std::vector<Vec2> out;
    out.reserve(poly.size() + 1);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        const double da = side(a);
        const double db = side(b);
        if (da <= 0.0) out.push_back(a);
        if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
            const double t = da / (da - db);
            out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        }
    }
    return out;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        const double cross = p.x * q.y - q.x * p.y;
        a += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

bool seeds_degenerate(const std::vector<Vec2>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (distance(pts[i], pts[j]) < 1e-9) return true;
    return false;
}

// Merges polygon corners into a shared vertex list and splits polygon edges
// at any foreign vertex lying on them, so neighboring cells share edges.
std::vector<std::vector<std::size_t>> weld_cells(const std::vector<std::vector<Vec2>>& cells,
                                                 std::vector<Vec2>& vertices) {
    std::vector<std::vector<std::size_t>> indexed;
    for (const auto& cell : cells) {
        std::vector<std::size_t> ids;
        for (const Vec2& p : cell) {
            std::size_t id = vertices.size();
            for (std::size_t v = 0; v < vertices.size(); ++v) {
                if (distance(vertices[v], p) < kMergeTolerance) {
                    id = v;
                    break;
                }
            }
            if (id == vertices.size()) vertices.push_back(p);
            if (ids.empty() || ids.back() != id) ids.push_back(id);
        }
        while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
        indexed.push_back(std::move(ids));
    }

    for (auto& ids : indexed) {
        std::vector<std::size_t> split;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const std::size_t a = ids[i];
            const std::size_t b = ids[(i + 1) % ids.size()];
            split.push_back(a);
            const Vec2& pa = vertices[a];
            const Vec2& pb = vertices[b];
            const double len = distance(pa, pb);
            std::vector<std::pair<double, std::size_t>> on_edge;
            for (std::size_t v = 0; v < vertices.size(); ++v) {
                if (v == a || v == b) continue;
                const Vec2& p = vertices[v];
                const double t = ((p.x - pa.x) * (pb.x - pa.x) + (p.y - pa.y) * (pb.y - pa.y)) / (len * len);
                if (t <= 0.0 || t >= 1.0) continue;
                const Vec2 foot{pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)};
                if (distance(foot, p) < kMergeTolerance) on_edge.emplace_back(t, v);
            }
            std::sort(on_edge.begin(), on_edge.end());
            for (const auto& [t, v] : on_edge) split.push_back(v);
        }
        ids = std::move(split);
    }
    return indexed;
}

}  // namespace

SeedSet latin_hypercube(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("latin_hypercube: n must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> px(n), py(n);
    std::iota(px.begin(), px.end(), 0);
    std::iota(py.begin(), py.end(), 0);
    std::shuffle(px.begin(), px.end(), rng);
    std::shuffle(py.begin(), py.end(), rng);
    SeedSet s;
    s.rng_seed = seed;
    s.points.reserve(n);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.points.push_back({(static_cast<double>(px[i]) + unit(rng)) * w,
                            (static_cast<double>(py[i]) + unit(rng)) * w});
    }
    return s;
}

std::vector<std::vector<Vec2>> clipped_voronoi_cells(const std::vector<Vec2>& points) {
    std::vector<std::vector<Vec2>> cells;
    cells.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<Vec2> poly{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
        const Vec2& si = points[i];
        for (std::size_t j = 0; j < points.size() && !poly.empty(); ++j) {
            if (j == i) continue;
            const Vec2& sj = points[j];
            poly = clip_half_plane(poly, {0.5 * (si.x + sj.x), 0.5 * (si.y + sj.y)},
                                   {sj.x - si.x, sj.y - si.y});
        }
        cells.push_back(std::move(poly));
    }
    return cells;
}

Microstructure generate_microstructure(std::size_t n_seeds, ElementRange target, std::uint64_t seed) {
    if (n_seeds == 0) throw InputError("generate_microstructure: n_seeds must be at least 1");
    if (target.min > target.max) throw InputError("generate_microstructure: empty target element range");

    SeedSet seeds = latin_hypercube(n_seeds, seed);
    for (std::uint64_t attempt = 1; seeds_degenerate(seeds.points); ++attempt) {
        seeds = latin_hypercube(n_seeds, splitmix64(seed + attempt));
    }

    std::mt19937_64 rng(splitmix64(seed ^ 0x6f7269656e74ULL));
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::vector<double> orientation(n_seeds);
    for (double& phi : orientation) phi = angle(rng);

    Microstructure m;
    m.cluster_count = n_seeds;
    const auto cells = clipped_voronoi_cells(seeds.points);
    const auto indexed = weld_cells(cells, m.vertices);
    for (std::size_t k = 0; k < indexed.size(); ++k) {
        const auto& ids = indexed[k];
        std::vector<Vec2> poly;
        for (std::size_t id : ids) poly.push_back(m.vertices[id]);
        m.vertices.push_back(polygon_centroid(poly));
        const std::size_t apex = m.vertices.size() - 1;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            Element e;
            e.vertices = {apex, ids[i], ids[(i + 1) % ids.size()]};
            e.cluster = k;
            e.orientation = orientation[k];
            m.elements.push_back(e);
        }
    }
    update_areas(m);

    while (m.elements.size() < target.min) m = refine_uniform(m);
    if (m.elements.size() > target.max) {
        throw InputError("generate_microstructure: element count " + std::to_string(m.elements.size()) +
                         " overshoots target range [" + std::to_string(target.min) + ", " +
                         std::to_string(target.max) + "]");
    }
    return m;
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed270b2f1e5c3dULL));
}

Microstructure generate_sample(const GeneratorConfig& config, std::uint64_t seed, std::uint64_t index) {
    if (config.min_seeds == 0 || config.min_seeds > config.max_seeds) {
        throw InputError("generator seed-count range is empty");
    }
    const std::uint64_t s = sample_seed(seed, index);
    std::mt19937_64 rng(s);
    std::uniform_int_distribution<std::size_t> count(config.min_seeds, config.max_seeds);
    const std::size_t n = count(rng);
    return generate_microstructure(n, config.target, splitmix64(s));
}

Manifest generate_dataset(std::size_t count, const GeneratorConfig& config, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

    Manifest manifest;
    manifest.config = {
        {"count", std::to_string(count)},
        {"seed", std::to_string(seed)},
        {"min_seeds", std::to_string(config.min_seeds)},
        {"max_seeds", std::to_string(config.max_seeds)},
        {"target_min", std::to_string(config.target.min)},
        {"target_max", std::to_string(config.target.max)},
    };
    for (std::size_t i = 0; i < count; ++i) {
        const Microstructure m = generate_sample(config, seed, i);
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%05zu.txt", i);
        write_sample_file(out_dir / name, m);
        manifest.entries.push_back({name, m.element_count(), m.cluster_count, false});
    }
    write_manifest(out_dir / "manifest.txt", manifest);
    return manifest;
}

}  // namespace mlgcn
