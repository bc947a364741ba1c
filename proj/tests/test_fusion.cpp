#include <doctest.h>

#include <cmath>

#include "corrnet/fusion.hpp"
#include "corrnet/rng.hpp"

#include "testutil.hpp"

using namespace corrnet;

TEST_CASE("fuse_baseline") {
    SUBCASE("avg is idempotent") {
        Vector u = {1.0, -2.0, 0.5};
        CHECK(fuse_baseline(u, u, FusionStrategy::avg) == u);
    }
    SUBCASE("multiply by ones is the identity") {
        Vector u = {1.5, -0.25, 3.0};
        CHECK(fuse_baseline(u, Vector(3, 1.0), FusionStrategy::multiply) == u);
    }
    SUBCASE("elementwise max") {
        CHECK(fuse_baseline({1, 5}, {4, 2}, FusionStrategy::max) == Vector{4, 5});
    }
    SUBCASE("1000 random pairs match the elementwise reference exactly") {
        Rng rng(6);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 1 + rng.index(12);
            auto u = testutil::random_vector(n, rng, -5.0, 5.0);
            auto v = testutil::random_vector(n, rng, -5.0, 5.0);
            Vector sum = fuse_baseline(u, v, FusionStrategy::sum);
            Vector avg = fuse_baseline(u, v, FusionStrategy::avg);
            Vector mx = fuse_baseline(u, v, FusionStrategy::max);
            Vector mul = fuse_baseline(u, v, FusionStrategy::multiply);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(sum[i] == u[i] + v[i]);
                CHECK(avg[i] == (u[i] + v[i]) * 0.5);
                CHECK(mx[i] == (u[i] > v[i] ? u[i] : v[i]));
                CHECK(mul[i] == u[i] * v[i]);
            }
        }
    }
    SUBCASE("dimension mismatch and non-baseline strategy rejected") {
        CHECK_THROWS_AS(fuse_baseline({1.0}, {1.0, 2.0}, FusionStrategy::sum),
                        DimensionError);
        CHECK_THROWS_AS(fuse_baseline({1.0}, {1.0}, FusionStrategy::corrnet), ConfigError);
    }
}

TEST_CASE("fuse_corrnet") {
    Rng rng(8);
    SUBCASE("zero head logits with unit stream weight is softmax(u+v)") {
        auto u = testutil::random_vector(5, rng);
        auto v = testutil::random_vector(5, rng);
        Vector expected(5);
        for (std::size_t i = 0; i < 5; ++i) expected[i] = u[i] + v[i];
        CHECK(fuse_corrnet(Vector(5, 0.0), u, v, 1.0, 1.0) == softmax(expected));
    }
    SUBCASE("zero stream weight is softmax(Z)") {
        auto z = testutil::random_vector(4, rng);
        auto u = testutil::random_vector(4, rng);
        auto v = testutil::random_vector(4, rng);
        CHECK(fuse_corrnet(z, u, v, 0.0, 1.0) == softmax(z));
    }
    SUBCASE("argmax is invariant to constant shifts of all three vectors") {
        for (int trial = 0; trial < 20; ++trial) {
            auto z = testutil::random_vector(6, rng);
            auto u = testutil::random_vector(6, rng);
            auto v = testutil::random_vector(6, rng);
            const std::size_t base = argmax(fuse_corrnet(z, u, v, 1.0, 1.0));
            Vector z2 = z, u2 = u, v2 = v;
            for (double& e : z2) e += 11.0;
            for (double& e : u2) e -= 4.5;
            for (double& e : v2) e += 0.25;
            CHECK(argmax(fuse_corrnet(z2, u2, v2, 1.0, 1.0)) == base);
        }
    }
}

TEST_CASE("shannon_gate") {
    Rng rng(9);
    FusionConfig config;

    SUBCASE("th = 0 always excludes the head") {
        config.th = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            auto z = testutil::random_vector(5, rng);
            auto u = testutil::random_vector(5, rng);
            auto v = testutil::random_vector(5, rng);
            FusionDecision d = shannon_gate(z, u, v, config);
            CHECK_FALSE(d.corrnet_included);
            double total = 0.0;
            for (double e : d.fused_probs) total += e;
            CHECK(std::abs(total - 1.0) < 1e-12);
        }
    }

    SUBCASE("th = log2 B includes it whenever the fusion is not exactly uniform") {
        const std::size_t b = 8;
        config.th = std::log2(static_cast<double>(b));
        for (int trial = 0; trial < 50; ++trial) {
            auto z = testutil::random_vector(b, rng);
            auto u = testutil::random_vector(b, rng);
            auto v = testutil::random_vector(b, rng);
            FusionDecision d = shannon_gate(z, u, v, config);
            CHECK(d.corrnet_included);
        }
        // exactly uniform fused distribution sits at the bound and is excluded
        FusionDecision d = shannon_gate(Vector(b, 0.0), Vector(b, 0.0), Vector(b, 0.0), config);
        CHECK_FALSE(d.corrnet_included);
    }

    SUBCASE("the min-subtraction in the gate entropy is a no-op") {
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t b = 2 + rng.index(9);
            auto z = testutil::random_vector(b, rng, -6.0, 6.0);
            auto u = testutil::random_vector(b, rng, -6.0, 6.0);
            auto v = testutil::random_vector(b, rng, -6.0, 6.0);
            const double with_norm = gate_entropy(z, u, v, config);
            Vector plain(b);
            for (std::size_t i = 0; i < b; ++i) plain[i] = z[i] + u[i] + v[i];
            const double without_norm = shannon_entropy(softmax(plain));
            CHECK(std::abs(with_norm - without_norm) < 1e-12);
            const double th = rng.uniform(0.0, std::log2(static_cast<double>(b)));
            FusionConfig c = config;
            c.th = th;
            CHECK(shannon_gate(z, u, v, c).corrnet_included == (without_norm < th));
        }
    }

    SUBCASE("gate decision invariant to per-vector constant shifts") {
        config.th = 1.3;
        for (int trial = 0; trial < 50; ++trial) {
            auto z = testutil::random_vector(5, rng);
            auto u = testutil::random_vector(5, rng);
            auto v = testutil::random_vector(5, rng);
            FusionDecision base = shannon_gate(z, u, v, config);
            Vector z2 = z;
            for (double& e : z2) e += 40.0;
            Vector u2 = u;
            for (double& e : u2) e -= 13.0;
            FusionDecision shifted = shannon_gate(z2, u2, v, config);
            CHECK(base.corrnet_included == shifted.corrnet_included);
            CHECK(std::abs(base.gate_entropy - shifted.gate_entropy) < 1e-9);
        }
    }
}

namespace {

// Tiny gate scenario around the diagonal-cell probe head: "lo" clips need the
// head (stream sum votes wrong, combined entropy low), "hi" clips need it
// gone (head votes wrong, combined entropy high).
PairedDataset gate_scenario(std::size_t clips, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.class_count = 4;
    spec.clips_per_class = clips;
    spec.frames_per_clip = 8;
    spec.noise_scale = 0.02;
    spec.mode = SyntheticMode::gate_mix;
    spec.seed = seed;
    return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("search_threshold") {
    CorrnetParams probe = testutil::gate_probe_params(4);
    FusionConfig config;

    SUBCASE("returns the exhaustive-grid argmax with smaller-th ties") {
        PairedDataset ds = gate_scenario(12, 21);
        auto [sub_train, sub_val] = split_dataset(ds, 0.5, 3);
        std::vector<std::pair<double, double>> grid;
        const double best = search_threshold(probe, sub_train, sub_val, 21, config, &grid);
        REQUIRE(grid.size() == 21);
        double oracle_best = 0.0, oracle_acc = -1.0;
        for (const auto& [th, acc] : grid) {
            if (acc > oracle_acc) {
                oracle_acc = acc;
                oracle_best = th;
            }
        }
        CHECK(best == oracle_best);
        CHECK(best >= 0.0);
        CHECK(best <= std::log2(4.0));
    }

    SUBCASE("head always helps: accuracy at the returned th matches the top grid value") {
        // lo-group-only data: gating anything out only loses accuracy, so the
        // returned threshold behaves like always-include.
        SyntheticSpec spec;
        spec.class_count = 4;
        spec.clips_per_class = 10;
        spec.frames_per_clip = 4;
        spec.noise_scale = 0.02;
        spec.mode = SyntheticMode::gate_mix;
        spec.seed = 5;
        PairedDataset mixed = generate_synthetic(spec);
        std::vector<std::size_t> lo_clips;
        for (std::size_t i = 0; i < mixed.clip_count(); ++i) {
            if (mixed.spatial.clips[i].clip_id.rfind("lo", 0) == 0) lo_clips.push_back(i);
        }
        PairedDataset lo = subset_dataset(mixed, lo_clips);
        REQUIRE(lo.clip_count() > 0);
        std::vector<std::pair<double, double>> grid;
        const double best = search_threshold(probe, lo, lo, 21, config, &grid);
        FusionConfig at_best = config;
        at_best.th = best;
        FusionConfig at_max = config;
        at_max.th = std::log2(4.0);
        CHECK(gated_accuracy(probe, lo, at_best) ==
              gated_accuracy(probe, lo, at_max));
    }

    SUBCASE("head always hurts: returns 0") {
        SyntheticSpec spec;
        spec.class_count = 4;
        spec.clips_per_class = 10;
        spec.frames_per_clip = 4;
        spec.noise_scale = 0.02;
        spec.mode = SyntheticMode::gate_mix;
        spec.seed = 6;
        PairedDataset mixed = generate_synthetic(spec);
        std::vector<std::size_t> hi_clips;
        for (std::size_t i = 0; i < mixed.clip_count(); ++i) {
            if (mixed.spatial.clips[i].clip_id.rfind("hi", 0) == 0) hi_clips.push_back(i);
        }
        PairedDataset hi = subset_dataset(mixed, hi_clips);
        REQUIRE(hi.clip_count() > 0);
        const double best = search_threshold(probe, hi, hi, 21, config);
        CHECK(best == 0.0);
    }

    SUBCASE("reference thresholds 1.0 and 2.0 are exact grid values for B=4") {
        PairedDataset ds = gate_scenario(4, 8);
        std::vector<std::pair<double, double>> grid;
        search_threshold(probe, ds, ds, 21, config, &grid);
        bool has_one = false, has_two = false;
        for (const auto& [th, acc] : grid) {
            if (th == 1.0) has_one = true;
            if (th == 2.0) has_two = true;
        }
        CHECK(has_one);
        CHECK(has_two);
    }

    SUBCASE("empty splits rejected") {
        PairedDataset ds = gate_scenario(4, 8);
        PairedDataset empty = subset_dataset(ds, {});
        CHECK_THROWS_AS(search_threshold(probe, empty, ds, 21, config), ConfigError);
        CHECK_THROWS_AS(search_threshold(probe, ds, empty, 21, config), ConfigError);
        CHECK_THROWS_AS(search_threshold(probe, ds, ds, 1, config), ConfigError);
    }
}

TEST_CASE("fusion config file round trip") {
    testutil::TempDir dir;
    FusionConfig config;
    config.strategy = FusionStrategy::corrnet;
    config.stream_weight = 0.5;
    config.corrnet_weight = 0.01;
    config.th = 2.0;
    config.eps = 1e-6;
    config.gate_scaled_corrnet = true;
    const std::string path = dir.file("fusion.conf");
    save_fusion_config(config, path);
    FusionConfig back = load_fusion_config(path);
    CHECK(back.strategy == FusionStrategy::corrnet);
    CHECK(back.stream_weight == 0.5);
    CHECK(back.corrnet_weight == 0.01);
    CHECK(back.th == 2.0);
    CHECK(back.eps == 1e-6);
    CHECK(back.gate_scaled_corrnet);
    CHECK(back.row_normalize);
}
