#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlgcn/mesh.hpp"
#include "mlgcn/microgen.hpp"

namespace mlgcn {

// Shortest round-tripping text for a double, at most 17 significant digits.
std::string format_real(double v);

// Sample file layout (UTF-8 text):
//   nv ne nc
//   x y                                        (nv lines)
//   v0 v1 v2 cluster_id orientation area       (ne lines)
//   label kappa_eff                            (optional)
void write_sample(std::ostream& out, const Microstructure& m);
Microstructure read_sample(std::istream& in, const std::string& source = "<stream>");

void write_sample_file(const std::filesystem::path& path, const Microstructure& m);
Microstructure read_sample_file(const std::filesystem::path& path);

// manifest.txt layout:
//   [config]
//   key = value                                (one per line)
//   [samples]
//   path ne nc labeled                         (labeled is 0 or 1)
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// A dataset directory: the manifest plus all samples, loaded in manifest order.
struct Dataset {
    std::filesystem::path directory;
    Manifest manifest;
    std::vector<Microstructure> samples;
};

Dataset load_dataset(const std::filesystem::path& directory);
// Rewrites every sample file and the manifest's labeled flags.
void save_dataset(const Dataset& dataset);

}  // namespace mlgcn
