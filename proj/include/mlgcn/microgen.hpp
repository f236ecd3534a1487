#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mlgcn/mesh.hpp"

namespace mlgcn {

// Latin-hypercube design in the unit square: for n points, every column
// stratum [i/n, (i+1)/n) and every row stratum holds exactly one point.
struct SeedSet {
    std::vector<Vec2> points;
    std::uint64_t rng_seed = 0;
};

SeedSet latin_hypercube(std::size_t n, std::uint64_t seed);

struct ElementRange {
    std::size_t min = 1;
    std::size_t max = 1000000;
};

// Voronoi polycrystal: the Latin-hypercube seeds' Voronoi cells clipped to the
// unit square are the crystals. Each cell is fan-triangulated from its area
// centroid and the whole mesh is refined 4:1 until the element count reaches
// target.min. Orientations are drawn per crystal from U(0, pi).
//
// Throws InputError for n_seeds == 0 or when the first refinement level
// reaching target.min already exceeds target.max.
Microstructure generate_microstructure(std::size_t n_seeds, ElementRange target, std::uint64_t seed);

// Clipped Voronoi cells of `points` as counter-clockwise polygons, one per
// point, in point order.
std::vector<std::vector<Vec2>> clipped_voronoi_cells(const std::vector<Vec2>& points);

struct GeneratorConfig {
    std::size_t min_seeds = 14;
    std::size_t max_seeds = 18;
    ElementRange target{150, 1000};
};

struct ManifestEntry {
    std::string path;  // relative to the manifest's directory
    std::size_t element_count = 0;
    std::size_t cluster_count = 0;
    bool labeled = false;
};

struct Manifest {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<ManifestEntry> entries;
};

// Seed for sample `index` of a dataset generated with `seed`; independent of
// how many samples are generated or in which order.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

// The `index`-th sample of a dataset: crystal count uniform on
// [config.min_seeds, config.max_seeds], then generate_microstructure.
Microstructure generate_sample(const GeneratorConfig& config, std::uint64_t seed, std::uint64_t index);

// Writes `count` sample files and manifest.txt into out_dir (created if
// missing). Throws IoError naming the path on failure.
Manifest generate_dataset(std::size_t count, const GeneratorConfig& config, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

}  // namespace mlgcn
