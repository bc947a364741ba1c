#include <doctest.h>

#include <cmath>

#include "corrnet/training.hpp"

#include "testutil.hpp"

using namespace corrnet;

TEST_CASE("corrnet_loss") {
    SUBCASE("huge margin on the right class: loss and gradient vanish") {
        Vector z = {40.0, 0.0, 0.0};
        auto [loss, dlogits] = corrnet_loss(z, {0}, LossMode::softmax_ce);
        CHECK(loss < 1e-12);
        for (double e : dlogits) CHECK(std::abs(e) < 1e-12);
    }
    SUBCASE("zero logits: loss ln B, gradient 1/B - onehot") {
        const std::size_t b = 7;
        auto [loss, dlogits] = corrnet_loss(Vector(b, 0.0), {3}, LossMode::softmax_ce);
        CHECK(loss == doctest::Approx(std::log(7.0)).epsilon(1e-12));
        for (std::size_t i = 0; i < b; ++i) {
            const double expect = 1.0 / 7.0 - (i == 3 ? 1.0 : 0.0);
            CHECK(dlogits[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("loss is nonnegative") {
        Rng rng(41);
        for (int trial = 0; trial < 100; ++trial) {
            auto z = testutil::random_vector(5, rng, -8.0, 8.0);
            auto [loss, d] = corrnet_loss(z, {static_cast<int>(rng.index(5))},
                                          LossMode::softmax_ce);
            (void)d;
            CHECK(loss >= 0.0);
        }
    }
    SUBCASE("softmax_ce gradient matches finite differences") {
        Rng rng(42);
        for (int trial = 0; trial < 10; ++trial) {
            auto z = testutil::random_vector(6, rng, -3.0, 3.0);
            std::vector<int> label = {static_cast<int>(rng.index(6))};
            auto [loss, dlogits] = corrnet_loss(z, label, LossMode::softmax_ce);
            (void)loss;
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double fd = testutil::central_difference(&z[i], [&]() {
                    return corrnet_loss(z, label, LossMode::softmax_ce).first;
                });
                CHECK(testutil::grad_close(dlogits[i], fd));
            }
        }
    }
    SUBCASE("sigmoid_bce gradient matches finite differences") {
        Rng rng(43);
        for (int trial = 0; trial < 10; ++trial) {
            auto z = testutil::random_vector(6, rng, -3.0, 3.0);
            std::vector<int> labels = {0, static_cast<int>(1 + rng.index(5))};
            auto [loss, dlogits] = corrnet_loss(z, labels, LossMode::sigmoid_bce);
            CHECK(loss >= 0.0);
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double fd = testutil::central_difference(&z[i], [&]() {
                    return corrnet_loss(z, labels, LossMode::sigmoid_bce).first;
                });
                CHECK(testutil::grad_close(dlogits[i], fd));
            }
        }
    }
    SUBCASE("invalid targets rejected") {
        CHECK_THROWS_AS(corrnet_loss({0.0, 0.0}, {2}, LossMode::softmax_ce), IndexError);
        CHECK_THROWS_AS(corrnet_loss({0.0, 0.0}, {0, 1}, LossMode::softmax_ce), DataError);
        CHECK_THROWS_AS(corrnet_loss({0.0, 0.0}, {}, LossMode::softmax_ce), DataError);
    }
}

TEST_CASE("sample_training_pair") {
    SUBCASE("single-frame clip always returns that frame") {
        ClipRecord s{"c", {0}, {{1.0, 2.0}}};
        ClipRecord t{"c", {0}, {{3.0, 4.0}}};
        Rng rng(1);
        for (int i = 0; i < 10; ++i) {
            auto [u, v] = sample_training_pair(s, t, rng);
            CHECK(u == Vector{1.0, 2.0});
            CHECK(v == Vector{3.0, 4.0});
        }
    }
    SUBCASE("fixed seed reproduces the index sequence") {
        ClipRecord s{"c", {0}, {}};
        ClipRecord t{"c", {0}, {}};
        for (int f = 0; f < 10; ++f) {
            s.frames.push_back({static_cast<double>(f)});
            t.frames.push_back({static_cast<double>(100 + f)});
        }
        Rng a(5), b(5);
        for (int i = 0; i < 50; ++i) {
            auto pa = sample_training_pair(s, t, a);
            auto pb = sample_training_pair(s, t, b);
            CHECK(pa == pb);
        }
    }
    SUBCASE("draws are uniform within 5 sigma over 10000 samples") {
        ClipRecord s{"c", {0}, {}}, t{"c", {0}, {}};
        for (int f = 0; f < 24; ++f) {
            s.frames.push_back({static_cast<double>(f)});
            t.frames.push_back({static_cast<double>(f)});
        }
        Rng rng(7);
        std::vector<std::size_t> counts(24, 0);
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            auto [u, v] = sample_training_pair(s, t, rng);
            counts[static_cast<std::size_t>(u[0])] += 1;
            (void)v;
        }
        const double p = 1.0 / 24.0;
        const double mean = draws * p;
        const double sigma = std::sqrt(draws * p * (1.0 - p));
        for (std::size_t f = 0; f < 24; ++f) {
            CHECK(std::abs(static_cast<double>(counts[f]) - mean) <= 5.0 * sigma);
        }
    }
    SUBCASE("empty modality rejected") {
        ClipRecord s{"c", {0}, {}};
        ClipRecord t{"c", {0}, {{1.0}}};
        Rng rng(1);
        CHECK_THROWS_AS(sample_training_pair(s, t, rng), DataError);
    }
}

TEST_CASE("sgd_momentum_step") {
    SUBCASE("zero momentum is plain SGD") {
        CorrnetParams p = init_params(2, 2, 3, 2, 1);
        CorrnetParams original = p;
        CorrnetGradients g = zero_gradients(p);
        for (double& e : g.w1.data) e = 1.0;
        OptimizerState state = zero_state(p);
        sgd_momentum_step(p, g, state, 0.25, 0.0);
        for (std::size_t i = 0; i < p.w1.size(); ++i) {
            CHECK(p.w1.data[i] == original.w1.data[i] - 0.25);
        }
        CHECK(p.w2 == original.w2);
    }
    SUBCASE("zero gradients and zero velocity change nothing") {
        CorrnetParams p = init_params(2, 2, 3, 2, 2);
        CorrnetParams original = p;
        OptimizerState state = zero_state(p);
        sgd_momentum_step(p, zero_gradients(p), state, 0.1, 0.9);
        CHECK(p == original);
    }
    SUBCASE("two hand-iterated steps on a scalar") {
        // v <- 0.9 v - 0.1 g, w <- w + v, with g = w re-read each step:
        // step 1: v=-0.1, w=0.9; step 2: v=-0.18, w=0.72.
        double w = 1.0, v = 0.0;
        for (int step = 0; step < 2; ++step) {
            const double g = w;
            v = 0.9 * v - 0.1 * g;
            w += v;
        }
        CHECK(w == doctest::Approx(0.72).epsilon(1e-12));

        CorrnetParams p = init_params(1, 1, 1, 1, 3);
        p.w1.data[0] = 1.0;
        OptimizerState state = zero_state(p);
        for (int step = 0; step < 2; ++step) {
            CorrnetGradients g = zero_gradients(p);
            g.w1.data[0] = p.w1.data[0];
            sgd_momentum_step(p, g, state, 0.1, 0.9);
        }
        CHECK(p.w1.data[0] == doctest::Approx(0.72).epsilon(1e-12));
    }
}

namespace {

PairedDataset separable_dataset(std::size_t classes, std::size_t clips_per_class,
                                std::uint64_t seed) {
    SyntheticSpec spec;
    spec.class_count = classes;
    spec.clips_per_class = clips_per_class;
    spec.frames_per_clip = 8;
    spec.noise_scale = 0.3;
    spec.mode = SyntheticMode::independent;
    spec.seed = seed;
    return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("train") {
    SUBCASE("zero learning rate leaves params and loss untouched") {
        SyntheticSpec spec;
        spec.class_count = 4;
        spec.clips_per_class = 5;
        spec.frames_per_clip = 1;  // single frame: every epoch sees identical pairs
        spec.noise_scale = 0.2;
        PairedDataset ds = generate_synthetic(spec);
        CorrnetParams p = init_params(4, 4, 8, 4, 11);
        TrainConfig config;
        config.learning_rate = 0.0;
        config.epochs = 5;
        config.seed = 11;
        auto [trained, report] = train(ds, p, config);
        CHECK(trained == p);
        for (const EpochStats& e : report.epochs) {
            CHECK(e.mean_loss == doctest::Approx(report.epochs[0].mean_loss).epsilon(1e-15));
        }
    }

    SUBCASE("separable synthetic set trains to >= 95% within 50 epochs") {
        PairedDataset ds = separable_dataset(10, 20, 4);  // 200 clips
        CorrnetParams p = init_params(10, 10, 64, 10, 4);
        TrainConfig config;
        config.epochs = 50;
        config.seed = 4;
        auto [trained, report] = train(ds, std::move(p), config);
        REQUIRE(report.epochs.size() == 50);
        CHECK(report.epochs.back().train_accuracy >= 0.95);
    }

    SUBCASE("5-epoch smoothed loss is non-increasing on the separable set") {
        PairedDataset ds = separable_dataset(6, 15, 9);
        CorrnetParams p = init_params(6, 6, 32, 6, 9);
        TrainConfig config;
        config.epochs = 40;
        config.seed = 9;
        auto [trained, report] = train(ds, std::move(p), config);
        std::vector<double> smoothed;
        for (std::size_t i = 0; i + 5 <= report.epochs.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = i; j < i + 5; ++j) acc += report.epochs[j].mean_loss;
            smoothed.push_back(acc / 5.0);
        }
        for (std::size_t i = 1; i < smoothed.size(); ++i) {
            CHECK(smoothed[i] <= smoothed[i - 1] + 1e-12);
        }
    }

    SUBCASE("same seed, bitwise-identical parameters") {
        PairedDataset ds = separable_dataset(5, 8, 2);
        TrainConfig config;
        config.epochs = 10;
        config.seed = 33;
        auto [a, ra] = train(ds, init_params(5, 5, 16, 5, 33), config);
        auto [b, rb] = train(ds, init_params(5, 5, 16, 5, 33), config);
        CHECK(a == b);
        for (std::size_t i = 0; i < ra.epochs.size(); ++i) {
            CHECK(ra.epochs[i].mean_loss == rb.epochs[i].mean_loss);
        }
    }

    SUBCASE("segment-aware sampling trains too") {
        PairedDataset ds = separable_dataset(4, 6, 12);
        TrainConfig config;
        config.epochs = 5;
        config.segment_sampling = true;
        config.segments = 3;
        auto [trained, report] = train(ds, init_params(4, 4, 16, 4, 12), config);
        CHECK(report.epochs.size() == 5);
        CHECK(std::isfinite(report.epochs.back().mean_loss));
    }

    SUBCASE("mismatched dims rejected before any step") {
        PairedDataset ds = separable_dataset(4, 2, 1);
        CHECK_THROWS_AS(train(ds, init_params(5, 4, 8, 4, 1), TrainConfig{}), ConfigError);
        CHECK_THROWS_AS(train(ds, init_params(4, 4, 8, 3, 1), TrainConfig{}), ConfigError);
    }

    SUBCASE("config invariants enforced") {
        TrainConfig config;
        config.momentum = 1.0;
        CHECK_THROWS_AS(config.validate(), ConfigError);
        config.momentum = 0.9;
        config.batch_size = 0;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
}

TEST_CASE("train config file round trip") {
    testutil::TempDir dir;
    TrainConfig config;
    config.batch_size = 4;
    config.epochs = 77;
    config.learning_rate = 0.01;
    config.momentum = 0.5;
    config.seed = 99;
    config.segments = 6;
    config.loss_mode = LossMode::sigmoid_bce;
    config.segment_sampling = true;
    const std::string path = dir.file("train.conf");
    save_train_config(config, path);
    TrainConfig back = load_train_config(path);
    CHECK(back.batch_size == 4);
    CHECK(back.epochs == 77);
    CHECK(back.learning_rate == 0.01);
    CHECK(back.momentum == 0.5);
    CHECK(back.seed == 99);
    CHECK(back.segments == 6);
    CHECK(back.loss_mode == LossMode::sigmoid_bce);
    CHECK(back.segment_sampling);
}
