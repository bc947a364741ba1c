#include <doctest.h>

#include <cmath>
#include <fstream>

#include "corrnet/model.hpp"
#include "corrnet/rng.hpp"
#include "corrnet/training.hpp"

#include "testutil.hpp"

using namespace corrnet;

TEST_CASE("init_params") {
    SUBCASE("same seed, same parameters") {
        CorrnetParams a = init_params(2, 2, 4, 3, 7);
        CorrnetParams b = init_params(2, 2, 4, 3, 7);
        CHECK(a == b);
        CorrnetParams c = init_params(2, 2, 4, 3, 8);
        CHECK(a != c);
    }
    SUBCASE("biases start at zero") {
        CorrnetParams p = init_params(3, 5, 8, 4, 123);
        for (double e : p.b1) CHECK(e == 0.0);
        for (double e : p.b2) CHECK(e == 0.0);
        for (double e : p.b3) CHECK(e == 0.0);
    }
    SUBCASE("weights respect the Glorot bound") {
        CorrnetParams p = init_params(4, 3, 16, 5, 2);
        const double bound1 = std::sqrt(6.0 / (12 + 16));
        for (double e : p.w1.data) CHECK(std::abs(e) <= bound1);
    }
    SUBCASE("full-scale fc1 shape") {
        CorrnetParams p = init_params(101, 101, 4096, 101, 1);
        CHECK(p.w1.rows == 4096);
        CHECK(p.w1.cols == 101 * 101);
    }
    SUBCASE("zero dimension rejected") {
        CHECK_THROWS_AS(init_params(0, 2, 4, 3, 1), ConfigError);
    }
}

TEST_CASE("build_correlation_input") {
    SUBCASE("basis case") {
        CHECK(build_correlation_input({1, 0}, {0, 1}, 0.0) == Vector{0, 1, 0, 0});
    }
    SUBCASE("hand-computed normalized rows") {
        Vector x = build_correlation_input({2, -3}, {3, 4}, 0.0);
        REQUIRE(x.size() == 4);
        CHECK(x[0] == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(x[1] == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(x[2] == doctest::Approx(-0.6).epsilon(1e-12));
        CHECK(x[3] == doctest::Approx(-0.8).epsilon(1e-12));
    }
    SUBCASE("zero u flattens to zeros") {
        Vector x = build_correlation_input({0, 0}, {1, 2}, 0.0);
        CHECK(x == Vector{0, 0, 0, 0});
    }
    SUBCASE("matches the two-step composition") {
        Rng rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            auto u = testutil::random_vector(4, rng);
            auto v = testutil::random_vector(6, rng);
            Vector direct = build_correlation_input(u, v, kDefaultNormEps);
            Vector composed = row_l2_normalize(outer(u, v), kDefaultNormEps).data;
            CHECK(direct == composed);
        }
    }
    SUBCASE("no-normalization flag flattens the raw outer product") {
        Vector x = build_correlation_input({2, -3}, {3, 4}, 0.0, false);
        CHECK(x == Vector{6, 8, -9, -12});
    }
}

TEST_CASE("forward") {
    SUBCASE("all-zero weights give zero logits") {
        CorrnetParams p = init_params(3, 3, 4, 2, 1);
        p.w1.data.assign(p.w1.size(), 0.0);
        p.w2.data.assign(p.w2.size(), 0.0);
        p.w3.data.assign(p.w3.size(), 0.0);
        Rng rng(9);
        auto u = testutil::random_vector(3, rng);
        auto v = testutil::random_vector(3, rng);
        ForwardCache cache = forward(p, u, v);
        CHECK(cache.logits == Vector{0.0, 0.0});
    }
    SUBCASE("deterministic") {
        CorrnetParams p = init_params(4, 4, 8, 5, 3);
        Rng rng(10);
        auto u = testutil::random_vector(4, rng);
        auto v = testutil::random_vector(4, rng);
        CHECK(forward(p, u, v).logits == forward(p, u, v).logits);
    }
    SUBCASE("positive rescaling of u leaves logits unchanged at eps=0") {
        CorrnetParams p = init_params(5, 4, 8, 3, 4);
        Rng rng(11);
        auto u = testutil::random_nonzero_vector(5, rng);
        auto v = testutil::random_vector(4, rng);
        Vector base = forward(p, u, v, 0.0).logits;
        for (double lambda : {0.01, 0.5, 3.0, 250.0}) {
            Vector scaled_u = u;
            for (double& e : scaled_u) e *= lambda;
            Vector logits = forward(p, scaled_u, v, 0.0).logits;
            CHECK(argmax(logits) == argmax(base));
            for (std::size_t i = 0; i < logits.size(); ++i) {
                CHECK(std::abs(logits[i] - base[i]) < 1e-9);
            }
        }
    }
    SUBCASE("dimension mismatch") {
        CorrnetParams p = init_params(3, 3, 4, 2, 1);
        CHECK_THROWS_AS(forward(p, {1, 2}, {1, 2, 3}), DimensionError);
    }
}

TEST_CASE("backward") {
    SUBCASE("zero dlogits gives zero gradients") {
        CorrnetParams p = init_params(3, 4, 6, 2, 2);
        Rng rng(12);
        auto u = testutil::random_vector(3, rng);
        auto v = testutil::random_vector(4, rng);
        ForwardCache cache = forward(p, u, v);
        CorrnetGradients g = backward(p, cache, Vector(2, 0.0));
        for (double e : g.w1.data) CHECK(e == 0.0);
        for (double e : g.w3.data) CHECK(e == 0.0);
        for (double e : g.du) CHECK(e == 0.0);
        for (double e : g.dv) CHECK(e == 0.0);
    }

    SUBCASE("matches central finite differences") {
        // Smaller instances than the acceptance run, but the same oracle,
        // and with eps values that make the normalization gradient bite.
        Rng rng(13);
        for (std::uint64_t seed : {101u, 102u, 103u}) {
            for (double eps : {0.0, 1e-8, 0.5}) {
                CorrnetParams p = init_params(4, 5, 8, 3, seed);
                auto u = testutil::random_nonzero_vector(4, rng);
                auto v = testutil::random_nonzero_vector(5, rng);
                std::vector<int> label = {static_cast<int>(rng.index(3))};
                auto stats = testutil::check_model_gradients(p, u, v, eps, true, label,
                                                             LossMode::softmax_ce);
                CHECK(stats.failed == 0);
            }
        }
    }

    SUBCASE("finite differences also hold without row normalization") {
        Rng rng(14);
        CorrnetParams p = init_params(4, 4, 8, 3, 77);
        auto u = testutil::random_vector(4, rng);
        auto v = testutil::random_vector(4, rng);
        auto stats = testutil::check_model_gradients(p, u, v, 0.0, false, {1},
                                                     LossMode::softmax_ce);
        CHECK(stats.failed == 0);
    }

    SUBCASE("du is exactly zero at eps=0 with strictly positive u") {
        Rng rng(15);
        CorrnetParams p = init_params(5, 5, 8, 4, 21);
        auto u = testutil::random_vector(5, rng, 0.3, 2.0);
        auto v = testutil::random_vector(5, rng);
        ForwardCache cache = forward(p, u, v, 0.0);
        auto [loss, dlogits] = corrnet_loss(cache.logits, {2}, LossMode::softmax_ce);
        (void)loss;
        CorrnetGradients g = backward(p, cache, dlogits);
        for (double e : g.du) CHECK(e == 0.0);
        // and the finite-difference oracle agrees within its floor
        auto stats = testutil::check_model_gradients(p, u, v, 0.0, true, {2},
                                                     LossMode::softmax_ce);
        CHECK(stats.failed == 0);
    }

    SUBCASE("cache mismatch rejected") {
        CorrnetParams p = init_params(3, 3, 4, 2, 1);
        Rng rng(16);
        ForwardCache cache = forward(p, testutil::random_vector(3, rng),
                                     testutil::random_vector(3, rng));
        CHECK_THROWS_AS(backward(p, cache, Vector(5, 0.0)), DimensionError);
    }
}

TEST_CASE("save/load params") {
    testutil::TempDir dir;
    CorrnetParams p = init_params(3, 4, 8, 5, 31);
    const std::string path = dir.file("model.params");

    SUBCASE("round trip is bit-exact and preserves forward outputs") {
        save_params(p, path);
        CorrnetParams q = load_params(path);
        CHECK(p == q);
        Rng rng(17);
        auto u = testutil::random_vector(3, rng);
        auto v = testutil::random_vector(4, rng);
        CHECK(forward(p, u, v).logits == forward(q, u, v).logits);
    }
    SUBCASE("truncated file rejected") {
        save_params(p, path);
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_AS(load_params(path), ParseError);
    }
    SUBCASE("wrong magic rejected") {
        std::ofstream out(path, std::ios::binary);
        out << "NOTAMODELFILE AT ALL, NOT EVEN CLOSE";
        out.close();
        CHECK_THROWS_AS(load_params(path), ParseError);
    }
    SUBCASE("missing file is an I/O error") {
        CHECK_THROWS_AS(load_params(dir.file("absent.params")), IoError);
    }
}

TEST_CASE("tile_expand_fc1") {
    SUBCASE("identity when dims unchanged") {
        CorrnetParams p = init_params(3, 3, 4, 2, 5);
        CHECK(tile_expand_fc1(p, 3, 3) == p);
    }
    SUBCASE("cyclic column rule 2x2 -> 3x3") {
        CorrnetParams p = init_params(2, 2, 4, 2, 6);
        CorrnetParams q = tile_expand_fc1(p, 3, 3);
        CHECK(q.w1.cols == 9);
        for (std::size_t h = 0; h < q.hidden; ++h) {
            // new cell (2,2) maps to old cell (0,0)
            CHECK(q.w1.at(h, 2 * 3 + 2) == p.w1.at(h, 0));
            // new cell (1,2) maps to old cell (1,0)
            CHECK(q.w1.at(h, 1 * 3 + 2) == p.w1.at(h, 1 * 2 + 0));
        }
        CHECK(q.w2 == p.w2);
        CHECK(q.w3 == p.w3);
    }
    SUBCASE("shrinking rejected") {
        CorrnetParams p = init_params(3, 3, 4, 2, 5);
        CHECK_THROWS_AS(tile_expand_fc1(p, 2, 3), ConfigError);
    }
    SUBCASE("tiled forward on tiled input scales the fresh-init logits") {
        // With zero biases the whole stack is positive-homogeneous. Tiling
        // 2x2 -> 4x4 duplicates every correlation cell four times while the
        // row norms grow by sqrt(2), so fc1 sees 4/sqrt(2) = 2*sqrt(2) times
        // the original activation and the logits scale by the same factor.
        CorrnetParams p = init_params(2, 2, 8, 3, 9);
        CorrnetParams q = tile_expand_fc1(p, 4, 4);
        Rng rng(18);
        auto u = testutil::random_nonzero_vector(2, rng);
        auto v = testutil::random_nonzero_vector(2, rng);
        Vector u2 = {u[0], u[1], u[0], u[1]};
        Vector v2 = {v[0], v[1], v[0], v[1]};
        Vector base = forward(p, u, v, 0.0).logits;
        Vector tiled = forward(q, u2, v2, 0.0).logits;
        const double factor = 2.0 * std::sqrt(2.0);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(tiled[i] == doctest::Approx(factor * base[i]).epsilon(1e-9));
        }
    }
}
