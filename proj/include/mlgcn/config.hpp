#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mlgcn/architectures.hpp"
#include "mlgcn/microgen.hpp"
#include "mlgcn/train.hpp"

namespace mlgcn {

// Every setting of a command-line run. Config files use flat
// `key = value` lines with the keys listed by RunConfig::keys(); '#' starts
// a comment. Unknown keys are rejected.
struct RunConfig {
    std::size_t count = 8;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    std::filesystem::path dataset;
    std::filesystem::path run;
    std::size_t sample = 0;
    GeneratorConfig generator;
    ModelSpec model{Variant::reduced, 2, 3, 2, 2, Activation::relu};
    TrainConfig train;

    static const std::vector<std::string>& keys();

    // Throws InputError for an unknown key or an unparsable value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> snapshot() const;

    void load_file(const std::filesystem::path& path);
};

}  // namespace mlgcn
