#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlgcn/cli.hpp"
#include "mlgcn/config.hpp"
#include "mlgcn/error.hpp"

using namespace mlgcn;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mlgcn");
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const char* name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("run config keys, defaults and overrides") {
    RunConfig c;
    for (const auto& key : RunConfig::keys()) {
        if (key != "out" && key != "dataset" && key != "run") CHECK_FALSE(c.get(key).empty());
    }
    CHECK(c.get("variant") == "reduced");
    CHECK(c.get("filters") == "2");
    CHECK(c.get("lr") == "0.001");
    CHECK(c.get("batch") == "32");
    CHECK(c.get("patience") == "100");
    CHECK(c.get("max_epochs") == "1000");
    c.set("filters", "7");
    CHECK(c.model.filters == 7);
    CHECK_THROWS_AS(c.set("colour", "blue"), InputError);
    CHECK_THROWS_AS(c.set("filters", "many"), InputError);
    CHECK_THROWS_AS(c.set("variant", "magic"), InputError);

    RunConfig copy;
    for (const auto& [k, v] : c.snapshot()) copy.set(k, v);
    CHECK(copy.snapshot() == c.snapshot());
}

TEST_CASE("usage errors") {
    const Result unknown = cli({"frobnicate"});
    CHECK(unknown.code != 0);
    CHECK(unknown.err.find("Usage") != std::string::npos);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"generate", "--bogus", "1"}).code == kExitUsage);
    CHECK(cli({"generate", "--count", "3"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitSuccess);
}

TEST_CASE("missing files name the path") {
    const Result r = cli({"solve", "--dataset", "/nonexistent/mlgcn_data"});
    CHECK(r.code == kExitIo);
    CHECK(r.err.find("/nonexistent/mlgcn_data") != std::string::npos);
    const Result c = cli({"generate", "--config", "/nonexistent/run.cfg"});
    CHECK(c.code == kExitIo);
    CHECK(c.err.find("/nonexistent/run.cfg") != std::string::npos);
}

TEST_CASE("generate writes samples and manifest deterministically") {
    const auto dir = scratch("mlgcn_test_cli_generate");
    REQUIRE(cli({"generate", "--count", "8", "--seed", "7", "--out", (dir / "d").string()}).code == 0);
    REQUIRE(cli({"generate", "--count", "8", "--seed", "7", "--out", (dir / "e").string()}).code == 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "d")) {
        ++files;
        CHECK(slurp(entry.path()) == slurp(dir / "e" / entry.path().filename()));
    }
    CHECK(files == 9);
    CHECK(fs::exists(dir / "d" / "manifest.txt"));
    fs::remove_all(dir);
}

TEST_CASE("config file values are overridden by flags") {
    const auto dir = scratch("mlgcn_test_cli_config");
    {
        std::ofstream cfg(dir / "gen.cfg");
        cfg << "# small dataset\ncount = 2\nseed = 3\n";
    }
    REQUIRE(cli({"generate", "--config", (dir / "gen.cfg").string(), "--count", "12", "--out", (dir / "d").string()})
                .code == 0);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir / "d")) ++files;
    CHECK(files == 13);
    {
        std::ofstream bad(dir / "bad.cfg");
        bad << "colour = blue\n";
    }
    CHECK(cli({"generate", "--config", (dir / "bad.cfg").string(), "--out", (dir / "x").string()}).code ==
          kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("pipeline subcommands") {
    const auto dir = scratch("mlgcn_test_cli_pipeline");
    const std::string data = (dir / "data").string();
    REQUIRE(cli({"generate", "--count", "20", "--seed", "4", "--out", data}).code == 0);

    const Result unlabeled = cli({"baseline", "--dataset", data});
    CHECK(unlabeled.code == kExitUsage);
    CHECK(unlabeled.err.find("solve") != std::string::npos);

    REQUIRE(cli({"solve", "--dataset", data}).code == 0);
    const std::string labeled = slurp(dir / "data" / "manifest.txt");
    REQUIRE(cli({"solve", "--dataset", data}).code == 0);
    CHECK(slurp(dir / "data" / "manifest.txt") == labeled);

    const Result table = cli({"baseline", "--dataset", data});
    REQUIRE(table.code == 0);
    CHECK(table.out.starts_with("sample kappa_eff arithmetic harmonic hill mean_orientation\n"));
    CHECK(std::count(table.out.begin(), table.out.end(), '\n') == 21);

    const std::vector<std::string> train = {"train",   "--dataset",  data, "--variant", "reduced", "--filters", "2",
                                            "--features", "3",     "--max-epochs", "5", "--seed", "9"};
    auto with_out = [&](std::vector<std::string> args, const fs::path& out) {
        args.push_back("--out");
        args.push_back(out.string());
        return args;
    };
    REQUIRE(cli(with_out(train, dir / "run1")).code == 0);
    REQUIRE(cli(with_out(train, dir / "run2")).code == 0);
    for (const char* f : {"checkpoint.bin", "epochs.txt", "metrics.txt", "normalization.txt"})
        CHECK(slurp(dir / "run1" / f) == slurp(dir / "run2" / f));

    // The config snapshot alone reproduces the run.
    REQUIRE(cli({"train", "--config", (dir / "run1" / "config.txt").string(), "--out", (dir / "run3").string()})
                .code == 0);
    CHECK(slurp(dir / "run1" / "checkpoint.bin") == slurp(dir / "run3" / "checkpoint.bin"));

    const Result eval = cli({"evaluate", "--dataset", data, "--run", (dir / "run1").string()});
    REQUIRE(eval.code == 0);
    CHECK(eval.out.find("harmonic_rmse") != std::string::npos);
    REQUIRE(cli({"evaluate", "--dataset", data, "--run", (dir / "run2").string()}).code == 0);
    CHECK(slurp(dir / "run1" / "evaluation.txt") == slurp(dir / "run2" / "evaluation.txt"));

    const Result interp =
        cli({"interpret", "--dataset", data, "--run", (dir / "run1").string(), "--out", (dir / "art").string()});
    REQUIRE(interp.code == 0);
    CHECK(fs::exists(dir / "art" / "interpretation.txt"));
    CHECK(fs::exists(dir / "art" / "filter_map.txt"));
    CHECK(fs::exists(dir / "art" / "orientation.svg"));
    CHECK(cli({"interpret", "--dataset", data, "--run", (dir / "run1").string(), "--out", (dir / "art").string(),
               "--sample", "99"})
              .code == kExitUsage);
    fs::remove_all(dir);
}
