#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "copsl/errors.hpp"
#include "copsl/io.hpp"
#include "copsl/model.hpp"

using namespace copsl;

namespace {

ModelArchitecture arch_of(std::vector<std::size_t> hidden, std::size_t depth, std::size_t k, std::size_t n = 6,
                          std::size_t m = 2) {
    return {m, std::move(hidden), depth, std::vector<std::size_t>(k, n)};
}

Matrix random_prefs(RngStream& rng, std::size_t batch, std::size_t m = 2) {
    const std::vector<double> alpha(m, 1.0);
    return sample_preferences(rng, alpha, batch);
}

std::vector<Matrix> random_grads(RngStream& rng, const ModelForward& fwd) {
    std::vector<Matrix> g;
    for (const auto& out : fwd.unit_outputs) {
        Matrix x(out.rows(), out.cols());
        for (double& v : x.data()) v = rng.uniform(-1, 1);
        g.push_back(std::move(x));
    }
    return g;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("copsl_test_model_" + name);
}

} // namespace

TEST_CASE("layer counts of the appendix architectures") {
    // Hand-expanded sums of fan_in*fan_out + fan_out.
    const std::uint64_t psl = (2 * 256 + 256) + (256 * 256 + 256) + (256 * 6 + 6);
    CHECK(psl == 68102);
    CHECK(count_params(arch_of({256, 256}, 0, 1)) == psl);
    CHECK(count_params(arch_of({256, 256}, 0, 1)) * 6 == 408612);
    CHECK(count_params(arch_of({256, 256}, 1, 6)) == 768 + 6 * 67334);
    CHECK(count_params(arch_of({256, 256}, 1, 6)) == 404772);

    CHECK(count_flops(arch_of({256, 256}, 0, 1), 1) * 6 == 811008);
    CHECK(count_flops(arch_of({256, 256}, 1, 6), 1) == 805888);
    CHECK(count_flops(arch_of({256, 256}, 1, 6), 15) == 15 * 805888);

    CHECK(count_params(arch_of({3}, 1, 1, 1)) == 9 + (3 * 1 + 1));
    CHECK(count_flops(arch_of({3}, 1, 1, 1), 1) == 12 + 6);
}

TEST_CASE("count_params agrees between model and architecture") {
    RngStream rng(1);
    auto a = arch_of({180, 180, 180}, 2, 2);
    auto model = build_model(a, rng);
    CHECK(count_params(model) == count_params(a));
    CHECK(count_flops(model, 3) == count_flops(a, 3));
    CHECK(flatten_params(model).size() == count_params(a));
}

TEST_CASE("training FLOPs are three passes per iteration") {
    auto a = arch_of({256, 256}, 1, 6);
    CHECK(count_training_flops(a, 15, 500) == 3 * 500 * count_flops(a, 15));
}

TEST_CASE("build_model layer shapes") {
    RngStream rng(3);
    SUBCASE("appendix CoPSL") {
        auto model = build_model(arch_of({256, 256}, 1, 6), rng);
        REQUIRE(model.trunk.size() == 1);
        CHECK(model.trunk[0].fan_in() == 2);
        CHECK(model.trunk[0].fan_out() == 256);
        CHECK(model.trunk[0].activation == Activation::Rectifier);
        REQUIRE(model.heads.size() == 6);
        for (const auto& h : model.heads) {
            REQUIRE(h.size() == 2);
            CHECK(h[0].fan_in() == 256);
            CHECK(h[0].fan_out() == 256);
            CHECK(h[1].fan_out() == 6);
            CHECK(h[1].activation == Activation::Logistic);
        }
    }
    SUBCASE("plain PSL") {
        auto model = build_model(arch_of({256, 256}, 0, 1), rng);
        CHECK(model.trunk.empty());
        REQUIRE(model.heads.size() == 1);
        REQUIRE(model.heads[0].size() == 3);
        CHECK(model.heads[0][0].fan_in() == 2);
        CHECK(model.heads[0][2].fan_out() == 6);
    }
    SUBCASE("fully shared trunk") {
        auto model = build_model(arch_of({180, 180, 180}, 3, 2), rng);
        CHECK(model.trunk.size() == 3);
        for (const auto& h : model.heads) {
            REQUIRE(h.size() == 1);
            CHECK(h[0].fan_in() == 180);
        }
    }
}

TEST_CASE("architecture validation") {
    CHECK_THROWS_AS(arch_of({256}, 2, 1).validate(), ConfigError);
    CHECK_THROWS_AS(arch_of({256}, 1, 0).validate(), ConfigError);
    CHECK_THROWS_AS(arch_of({256}, 1, 1, 6, 1).validate(), ConfigError);
    CHECK_THROWS_AS(arch_of({0}, 0, 1).validate(), ConfigError);
    RngStream rng(0);
    CHECK_THROWS_AS(build_model(arch_of({256}, 2, 1), rng), ConfigError);
}

TEST_CASE("architecture JSON round trip") {
    auto a = arch_of({8, 4}, 1, 3, 5);
    CHECK(architecture_from_json(architecture_to_json(a)) == a);
}

TEST_CASE("forward_all shapes and range") {
    RngStream rng(4);
    auto model = build_model(arch_of({32, 32}, 1, 6), rng);
    auto prefs = random_prefs(rng, 15);
    auto fwd = forward_all(model, prefs);
    REQUIRE(fwd.unit_outputs.size() == 6);
    for (const auto& out : fwd.unit_outputs) {
        CHECK(out.rows() == 15);
        CHECK(out.cols() == 6);
        for (double v : out.data()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
    CHECK(forward_all(model, prefs).unit_outputs == fwd.unit_outputs);
}

TEST_CASE("forward_all rejects non-simplex rows") {
    RngStream rng(4);
    auto model = build_model(arch_of({8}, 1, 1), rng);
    CHECK_THROWS_AS(forward_all(model, Matrix::from_rows({{0.5, 0.6}})), InputError);
    CHECK_THROWS_AS(forward_all(model, Matrix::from_rows({{-0.1, 1.1}})), InputError);
}

TEST_CASE("identical heads give identical outputs") {
    RngStream rng(5);
    auto model = build_model(arch_of({16, 16}, 1, 2), rng);
    model.heads[1] = model.heads[0];
    auto fwd = forward_all(model, random_prefs(rng, 7));
    CHECK(fwd.unit_outputs[0] == fwd.unit_outputs[1]);
}

TEST_CASE("K=1 output does not depend on where the trunk ends") {
    RngStream rng(6);
    auto flat = build_model(arch_of({16, 16}, 0, 1), rng);
    CoPslModel split;
    split.trunk = {flat.heads[0][0]};
    split.heads = {{flat.heads[0][1], flat.heads[0][2]}};
    auto prefs = random_prefs(rng, 9);
    CHECK(forward_all(flat, prefs).unit_outputs == forward_all(split, prefs).unit_outputs);
}

TEST_CASE("K=1 draws the same initial parameters for every shared depth") {
    RngStream a(8), b(8);
    CHECK(flatten_params(build_model(arch_of({16, 16}, 0, 1), a)) ==
          flatten_params(build_model(arch_of({16, 16}, 2, 1), b)));
}

TEST_CASE("trunk gradient is the weighted sum of single-MOP trunk gradients") {
    RngStream rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        auto model = build_model(arch_of({12, 10}, 1, 3), rng);
        auto fwd = forward_all(model, random_prefs(rng, 6));
        auto grads_out = random_grads(rng, fwd);
        std::vector<double> w{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
        auto all = backward_all(model, fwd, grads_out, w);

        std::vector<ParamGrads> alone;
        for (std::size_t i = 0; i < 3; ++i) {
            std::vector<double> one(3, 0.0);
            one[i] = 1.0;
            alone.push_back(backward_all(model, fwd, grads_out, one));
        }
        for (std::size_t l = 0; l < all.trunk.size(); ++l) {
            auto& t = all.trunk[l];
            for (std::size_t e = 0; e < t.weights.size(); ++e) {
                double expect = 0;
                for (std::size_t i = 0; i < 3; ++i) expect += w[i] * alone[i].trunk[l].weights.data()[e];
                CHECK(std::fabs(t.weights.data()[e] - expect) <= 1e-12);
            }
            for (std::size_t e = 0; e < t.biases.size(); ++e) {
                double expect = 0;
                for (std::size_t i = 0; i < 3; ++i) expect += w[i] * alone[i].trunk[l].biases[e];
                CHECK(std::fabs(t.biases[e] - expect) <= 1e-12);
            }
        }
        // Heads ignore w by default.
        for (std::size_t i = 0; i < 3; ++i) CHECK(all.heads[i][0].weights == alone[i].heads[i][0].weights);
    }
}

TEST_CASE("weights scale the trunk but not the heads") {
    RngStream rng(10);
    auto model = build_model(arch_of({8, 8}, 1, 2), rng);
    auto fwd = forward_all(model, random_prefs(rng, 5));
    auto g = random_grads(rng, fwd);
    std::vector<double> w1{0.3, 0.7}, w2{0.6, 1.4};
    auto a = backward_all(model, fwd, g, w1);
    auto b = backward_all(model, fwd, g, w2);
    for (std::size_t e = 0; e < a.trunk[0].weights.size(); ++e)
        CHECK(b.trunk[0].weights.data()[e] == doctest::Approx(2 * a.trunk[0].weights.data()[e]).epsilon(1e-12));
    CHECK(a.heads[0][1].weights == b.heads[0][1].weights);
    CHECK(a.heads[1][1].biases == b.heads[1][1].biases);

    SUBCASE("zero weight removes a MOP from the trunk") {
        std::vector<double> only_second{0.0, 1.0}, e2{0.0, 1.0};
        auto z = backward_all(model, fwd, g, only_second);
        auto g2 = g;
        for (double& v : g2[0].data()) v = 0.0;
        auto ref = backward_all(model, fwd, g2, e2);
        CHECK(z.trunk[0].weights == ref.trunk[0].weights);
    }
    SUBCASE("strict gating scales heads too") {
        std::vector<double> w0{0.0, 1.0};
        auto s = backward_all(model, fwd, g, w0, true);
        for (double v : s.heads[0][1].weights.data()) CHECK(v == 0.0);
        CHECK(s.heads[1][1].weights == a.heads[1][1].weights);
    }
}

TEST_CASE("backward_all shape mismatch is an internal error") {
    RngStream rng(12);
    auto model = build_model(arch_of({8}, 1, 2), rng);
    auto fwd = forward_all(model, random_prefs(rng, 3));
    std::vector<Matrix> g{Matrix(3, 6)};
    std::vector<double> w{1, 1};
    CHECK_THROWS_AS(backward_all(model, fwd, g, w), InternalError);
    std::vector<Matrix> g2{Matrix(3, 6), Matrix(2, 6)};
    CHECK_THROWS_AS(backward_all(model, fwd, g2, w), InternalError);
}

TEST_CASE("enumerate_shared_variants") {
    auto v = enumerate_shared_variants(2, {180, 180, 180}, 2, {6, 6});
    REQUIRE(v.size() == 4);
    for (std::size_t d = 0; d < 4; ++d) CHECK(v[d].shared_depth == d);
    for (std::size_t d = 1; d < 4; ++d) CHECK(count_params(v[d]) < count_params(v[d - 1]));
    CHECK(enumerate_shared_variants(2, {256}, 2, {6, 6}).size() == 2);
}

TEST_CASE("checkpoint round trip is bitwise exact") {
    RngStream rng(13);
    auto a = arch_of({16, 8}, 1, 2, 5);
    auto model = build_model(a, rng);
    const auto path = temp_file("roundtrip.ckpt");
    save_checkpoint(model, a, path, {{"note", "x"}});
    auto ck = load_checkpoint(path);
    CHECK(ck.arch == a);
    CHECK(ck.model == model);
    CHECK(count_params(ck.model) == count_params(model));
    CHECK(ck.metadata.at("note") == "x");
    CHECK(load_checkpoint(path, 2).model == model);
    CHECK_THROWS_AS(load_checkpoint(path, 3), LoadError);
    std::filesystem::remove(path);
}

TEST_CASE("damaged checkpoints raise LoadError") {
    RngStream rng(14);
    auto a = arch_of({8}, 1, 1, 3);
    auto model = build_model(a, rng);
    const auto path = temp_file("damaged.ckpt");
    save_checkpoint(model, a, path);
    const std::string good = read_file(path);

    auto expect_load_error = [&](std::string bytes) {
        write_file_atomic(path, bytes);
        CHECK_THROWS_AS(load_checkpoint(path), LoadError);
    };
    SUBCASE("header byte flipped") {
        std::string bad = good;
        bad[20] = static_cast<char>(bad[20] ^ 0x20);
        expect_load_error(bad);
    }
    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        expect_load_error(bad);
    }
    SUBCASE("truncated") { expect_load_error(good.substr(0, good.size() - 5)); }
    SUBCASE("trailing bytes") { expect_load_error(good + "junk"); }
    SUBCASE("empty") { expect_load_error(""); }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint(temp_file("nope.ckpt")), LoadError); }
    std::filesystem::remove(path);
}
