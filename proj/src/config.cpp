#include "mlgcn/config.hpp"

#include <charconv>
#include <fstream>

#include "mlgcn/dataset_io.hpp"
#include "mlgcn/error.hpp"

namespace mlgcn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw InputError("invalid integer for '" + key + "': '" + value + "'");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw InputError("invalid number for '" + key + "': '" + value + "'");
    }
    return out;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = {
        "count",    "seed",       "out",        "dataset",    "run",        "sample",
        "min_seeds", "max_seeds", "target_min", "target_max", "variant",    "filters",
        "features", "conv",       "dense",      "activation", "lr",         "batch",
        "patience", "max_epochs", "train_ratio", "test_ratio", "validation_ratio", "split_seed",
    };
    return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "count") count = parse_integer<std::size_t>(key, value);
    else if (key == "seed") {
        seed = parse_integer<std::uint64_t>(key, value);
        train.init_seed = seed;
        train.shuffle_seed = seed + 1;
    }
    else if (key == "out") out = value;
    else if (key == "dataset") dataset = value;
    else if (key == "run") run = value;
    else if (key == "sample") sample = parse_integer<std::size_t>(key, value);
    else if (key == "min_seeds") generator.min_seeds = parse_integer<std::size_t>(key, value);
    else if (key == "max_seeds") generator.max_seeds = parse_integer<std::size_t>(key, value);
    else if (key == "target_min") generator.target.min = parse_integer<std::size_t>(key, value);
    else if (key == "target_max") generator.target.max = parse_integer<std::size_t>(key, value);
    else if (key == "variant") model.variant = parse_variant(value);
    else if (key == "filters") model.filters = parse_integer<std::size_t>(key, value);
    else if (key == "features") model.features = parse_integer<std::size_t>(key, value);
    else if (key == "conv") model.conv = parse_integer<std::size_t>(key, value);
    else if (key == "dense") model.dense = parse_integer<std::size_t>(key, value);
    else if (key == "activation") model.activation = parse_activation(value);
    else if (key == "lr") train.learning_rate = parse_double(key, value);
    else if (key == "batch") train.batch_size = parse_integer<std::size_t>(key, value);
    else if (key == "patience") train.patience = parse_integer<std::size_t>(key, value);
    else if (key == "max_epochs") train.max_epochs = parse_integer<std::size_t>(key, value);
    else if (key == "train_ratio") train.ratios.train = parse_double(key, value);
    else if (key == "test_ratio") train.ratios.test = parse_double(key, value);
    else if (key == "validation_ratio") train.ratios.validation = parse_double(key, value);
    else if (key == "split_seed") train.split_seed = parse_integer<std::uint64_t>(key, value);
    else throw InputError("unknown configuration key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
    if (key == "count") return std::to_string(count);
    if (key == "seed") return std::to_string(seed);
    if (key == "out") return out.string();
    if (key == "dataset") return dataset.string();
    if (key == "run") return run.string();
    if (key == "sample") return std::to_string(sample);
    if (key == "min_seeds") return std::to_string(generator.min_seeds);
    if (key == "max_seeds") return std::to_string(generator.max_seeds);
    if (key == "target_min") return std::to_string(generator.target.min);
    if (key == "target_max") return std::to_string(generator.target.max);
    if (key == "variant") return to_string(model.variant);
    if (key == "filters") return std::to_string(model.filters);
    if (key == "features") return std::to_string(model.features);
    if (key == "conv") return std::to_string(model.conv);
    if (key == "dense") return std::to_string(model.dense);
    if (key == "activation") return to_string(model.activation);
    if (key == "lr") return format_real(train.learning_rate);
    if (key == "batch") return std::to_string(train.batch_size);
    if (key == "patience") return std::to_string(train.patience);
    if (key == "max_epochs") return std::to_string(train.max_epochs);
    if (key == "train_ratio") return format_real(train.ratios.train);
    if (key == "test_ratio") return format_real(train.ratios.test);
    if (key == "validation_ratio") return format_real(train.ratios.validation);
    if (key == "split_seed") return std::to_string(train.split_seed);
    throw InputError("unknown configuration key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::snapshot() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : keys()) out.emplace_back(k, get(k));
    return out;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

}  // namespace mlgcn
