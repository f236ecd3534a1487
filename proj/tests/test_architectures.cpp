#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "model_fixtures.hpp"
#include "mlgcn/error.hpp"

using namespace mlgcn;
using namespace mlgcn::testing;

namespace {

ModelSpec spec_of(Variant v, std::size_t filters = 2, std::size_t features = 3) {
    return ModelSpec{v, filters, features, 2, 2, Activation::relu};
}

GraphSample prepared(const Microstructure& m, const NormalizationStats& stats) {
    GraphSample s = prepare_sample(m);
    stats.apply(s);
    return s;
}

}  // namespace

TEST_CASE("reduced model parameter count") {
    const Model m = build_model(spec_of(Variant::reduced), default_input_schema());
    // featurization 2*2*2+2, two cluster convolutions (3*3)*2+3, head 3*3+3 and 3*1+1
    CHECK(m.scalar_parameter_count() == 10 + 21 + 21 + 12 + 4);
    CHECK(m.layer_count(Level::mesh) == 1);
    CHECK(m.layer_count(Level::cluster) == 2);
}

TEST_CASE("variant wiring by level") {
    CHECK(build_model(spec_of(Variant::original), default_input_schema()).layer_count(Level::mesh) == 0);
    CHECK(build_model(spec_of(Variant::full), default_input_schema()).layer_count(Level::cluster) == 0);
    const Model vee = build_model(spec_of(Variant::vee), default_input_schema());
    CHECK(vee.layer_count(Level::mesh) == 2);
    CHECK(vee.layer_count(Level::cluster) == 2);
    const Model down = build_model(spec_of(Variant::down), default_input_schema());
    CHECK(down.layer_count(Level::mesh) == 2);
    CHECK(down.layer_count(Level::cluster) == 2);
    for (Variant v : kAllVariants) {
        const Model m = build_model(spec_of(v), default_input_schema());
        CHECK(m.dense_layers().size() == 2);
        CHECK(m.dense_layers().front().activation == Activation::identity);
        CHECK(m.dense_layers().back().out == 1);
        CHECK(parse_variant(to_string(v)) == v);
    }
    CHECK(parse_variant("rGCNN") == Variant::reduced);
    CHECK_THROWS_AS(parse_variant("magic"), InputError);
}

TEST_CASE("invalid specs and schemas") {
    ModelSpec bad = spec_of(Variant::full);
    bad.filters = 0;
    CHECK_THROWS_AS(build_model(bad, default_input_schema()), InputError);
    bad = spec_of(Variant::full);
    bad.dense = 0;
    CHECK_THROWS_AS(build_model(bad, default_input_schema()), InputError);
    const FeatureSchema no_volume{{"orientation", ChannelKind::intensive}};
    CHECK_THROWS_AS(build_model(spec_of(Variant::reduced), no_volume), InputError);
}

TEST_CASE("zero parameters propagate the final bias") {
    const auto samples = prepare_normalized(make_samples(2, 3, false));
    for (Variant v : kAllVariants) {
        Model m = build_model(spec_of(v), default_input_schema());
        CHECK(predict(m, samples[0]) == 0.0);
        m.parameters()[m.dense_layers().back().params.bias](0, 0) = 0.37;
        CHECK(predict(m, samples[1]) == 0.37);
    }
}

TEST_CASE("forward trace is complete") {
    const auto ms = make_samples(1, 4, false);
    const auto samples = prepare_normalized(ms);
    for (Variant v : kAllVariants) {
        const Model m = random_model(spec_of(v, 2, 3), 1);
        const ForwardTrace t = forward(m, samples[0]);
        REQUIRE(t.layers.size() == m.conv_layers().size());
        for (std::size_t i = 0; i < t.layers.size(); ++i) {
            const auto& layer = m.conv_layers()[i];
            CHECK(t.layers[i].name == layer.name);
            CHECK(t.layers[i].output.rows() ==
                  (layer.level == Level::mesh ? ms[0].element_count() : ms[0].cluster_count));
            CHECK(t.layers[i].output.cols() == layer.out);
        }
        CHECK(t.features.rows() == 1);
        CHECK(t.features.cols() == 3);
        CHECK(t.prediction == predict(m, samples[0]));
    }
}

TEST_CASE("unnormalized inputs are rejected") {
    const GraphSample raw = prepare_sample(make_samples(1, 5, false)[0]);
    const Model m = build_model(spec_of(Variant::reduced), default_input_schema());
    CHECK_THROWS_AS(predict(m, raw), InputError);
}

TEST_CASE("predictions are invariant to element order, cluster names and orientation period") {
    NormalizationStats stats;
    const auto ms = make_samples(6, 6, false);
    prepare_normalized(ms, &stats);
    std::mt19937_64 rng(12);
    for (Variant v : kAllVariants) {
        const Model model = random_model(spec_of(v, 3, 3), 2);
        for (const auto& m : ms) {
            const double base = predict(model, prepared(m, stats));
            const auto perm = random_permutation(m.element_count(), rng);
            CHECK(std::abs(predict(model, prepared(permute_elements(m, perm), stats)) - base) <= 1e-12);
            const auto relabel = random_permutation(m.cluster_count, rng);
            CHECK(std::abs(predict(model, prepared(relabel_clusters(m, relabel), stats)) - base) <= 1e-12);
            Microstructure shifted = m;
            for (auto& e : shifted.elements) e.orientation += kPi;
            CHECK(std::abs(predict(model, prepared(shifted, stats)) - base) <= 1e-12);
        }
    }
}

TEST_CASE("model gradients match finite differences") {
    const auto samples = prepare_normalized(make_samples(3, 7));
    for (Variant v : kAllVariants) {
        const Model m = random_model(spec_of(v, 2, 3), 3);
        const GradCheckResult r = grad_check(m, samples[1], 1e-6);
        CHECK(r.max_relative_error < 1e-5);
        CHECK(r.checked_entries == m.scalar_parameter_count());
    }
}

TEST_CASE("checkpoint round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "mlgcn_test_checkpoint";
    std::filesystem::create_directories(dir);
    const auto samples = prepare_normalized(make_samples(1, 8, false));
    for (Variant v : kAllVariants) {
        const Model m = random_model(spec_of(v, 3, 2), 4);
        write_checkpoint(dir / "model.bin", m);
        const Model r = read_checkpoint(dir / "model.bin");
        CHECK(r.spec().variant == v);
        CHECK(r.spec().filters == 3);
        CHECK(r.spec().features == 2);
        REQUIRE(r.parameters().size() == m.parameters().size());
        for (std::size_t i = 0; i < m.parameters().size(); ++i)
            CHECK(r.parameters()[i].values() == m.parameters()[i].values());
        CHECK(predict(r, samples[0]) == predict(m, samples[0]));
    }
    {
        std::ofstream bad(dir / "bad.bin", std::ios::binary);
        bad << "NOTACKPT";
    }
    CHECK_THROWS_AS(read_checkpoint(dir / "bad.bin"), InputError);
    CHECK_THROWS_AS(read_checkpoint(dir / "missing.bin"), IoError);
    std::filesystem::remove_all(dir);
}
