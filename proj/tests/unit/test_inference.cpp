#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "../support/oracles.hpp"
#include "isac/inference.hpp"

using namespace isac;

namespace {

const std::string kMicro = std::string(ISAC_TEST_DATA) + "/micro_bundle.cnnw";

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

RasterGrid micro_input() {
    RasterGrid g(4, 1.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g.at(i, j) = (4 * i + j) / 16.0;
    return g;
}

WeightBundle tiny_bundle(int uavs) {
    WeightBundle b;
    b.header.grid = 6;
    b.header.num_uavs = uavs;
    Conv2d c{1, 2, 3, 3, 1, 1, std::vector<float>(18, 0.1f), {0.0f, 0.5f}};
    Dense d{2 * 3 * 3, 3 * uavs, std::vector<float>(18 * 3 * uavs, 0.05f), std::vector<float>(3 * uavs, 0.0f)};
    b.layers = {c, Relu{}, MaxPool{2, 2}, Flatten{}, d, Relu{}};
    return b;
}

}  // namespace

TEST_CASE("golden micro-bundle loads and forward-evaluates to hand-computed values") {
    const WeightBundle b = load_weights(kMicro, TopologyCheck::ChainOnly);
    CHECK(b.header.version == 1);
    CHECK(b.header.grid == 4);
    CHECK(b.header.xi == 1.0);
    CHECK(b.header.num_uavs == 1);
    CHECK(b.header.area_x == 400.0);
    CHECK(b.header.area_y == 800.0);
    CHECK(b.header.h_min == 50.0);
    CHECK(b.header.h_max == 150.0);
    REQUIRE(b.layers.size() == 6);
    CHECK(kind_of(b.layers[2]) == LayerKind::MaxPool);

    // channel 0 is 0.5 + I(y,x) - I(y+1,x+1) = 0.1875 everywhere; channel 1 pools
    // to {0.34375, 0.40625, 0.59375, 0.65625}
    const std::vector<float> expected{0.1796875f, 0.8125f, 0.09375f};
    for (const auto& out : {forward(micro_input(), b), forward_reference(micro_input(), b)}) {
        REQUIRE(out.size() == 3);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(out[k] - expected[k]) <= 1e-6);
    }
    const DecodedDeployment d = decode(forward(micro_input(), b), b.header);
    CHECK(d.deployment.positions[0].x == doctest::Approx(71.875));
    CHECK(d.deployment.positions[0].y == doctest::Approx(650.0));
    CHECK(d.deployment.positions[0].z == doctest::Approx(59.375));

    // the strict loader refuses a non-reference topology
    CHECK_THROWS_WITH_AS(load_weights(kMicro), doctest::Contains("topology mismatch"), Error);
}

TEST_CASE("writer reproduces the golden file byte for byte") {
    const WeightBundle b = load_weights(kMicro, TopologyCheck::ChainOnly);
    std::ostringstream out(std::ios::binary);
    write_weights(out, b);
    CHECK(out.str() == file_bytes(kMicro));
}

TEST_CASE("reader diagnostics") {
    const std::string bytes = file_bytes(kMicro);
    SUBCASE("truncation reports the byte offset") {
        std::istringstream in(bytes.substr(0, 100), std::ios::binary);
        CHECK_THROWS_WITH_AS(read_weights(in, TopologyCheck::ChainOnly), doctest::Contains("byte offset"), Error);
    }
    SUBCASE("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        std::istringstream in(bad, std::ios::binary);
        CHECK_THROWS_WITH_AS(read_weights(in, TopologyCheck::ChainOnly), doctest::Contains("magic"), Error);
    }
    SUBCASE("unsupported version") {
        std::string bad = bytes;
        bad[4] = 9;
        std::istringstream in(bad, std::ios::binary);
        CHECK_THROWS_WITH_AS(read_weights(in, TopologyCheck::ChainOnly), doctest::Contains("version"), Error);
    }
    SUBCASE("unknown layer kind") {
        std::string bad = bytes;
        bad[60] = 42;  // first layer tag follows the 60-byte header
        std::istringstream in(bad, std::ios::binary);
        CHECK_THROWS_WITH_AS(read_weights(in, TopologyCheck::ChainOnly), doctest::Contains("unknown layer kind"),
                             Error);
    }
    CHECK_THROWS_AS(load_weights("/nonexistent/bundle.cnnw"), Error);
}

TEST_CASE("shape chain validation names the failing layer") {
    WeightBundle b = tiny_bundle(2);
    const auto shapes = validate_chain(b);
    REQUIRE(shapes.size() == 6);
    CHECK(shapes[0] == TensorShape{2, 6, 6, false});
    CHECK(shapes[2] == TensorShape{2, 3, 3, false});
    CHECK(shapes[3] == TensorShape{18, 1, 1, true});
    CHECK(shapes[5] == TensorShape{6, 1, 1, true});

    WeightBundle wrong_in = b;
    std::get<Dense>(wrong_in.layers[4]).in_features = 17;
    CHECK_THROWS_WITH_AS(validate_chain(wrong_in), doctest::Contains("layer 5"), Error);
    WeightBundle no_flatten = b;
    no_flatten.layers.erase(no_flatten.layers.begin() + 3);
    CHECK_THROWS_WITH_AS(validate_chain(no_flatten), doctest::Contains("flattened"), Error);
    WeightBundle wrong_out = b;
    wrong_out.header.num_uavs = 3;
    CHECK_THROWS_WITH_AS(validate_chain(wrong_out), doctest::Contains("3M"), Error);
    WeightBundle bad_params = b;
    std::get<Conv2d>(bad_params.layers[0]).weights.pop_back();
    CHECK_THROWS_WITH_AS(validate_chain(bad_params), doctest::Contains("layer 1"), Error);
}

TEST_CASE("round trip through the writer and reader") {
    const WeightBundle b = tiny_bundle(2);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    write_weights(buf, b);
    const WeightBundle back = read_weights(buf, TopologyCheck::ChainOnly);
    RasterGrid g(6, 1.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) g.at(i, j) = std::sin(i + 2.0 * j);
    CHECK(forward(g, back) == forward(g, b));
    CHECK_THROWS_AS(forward(RasterGrid(5, 1.0), b), Error);
}

TEST_CASE("reference network: topology, fast path matches the serial reference") {
    Scenario s;
    Rng rng(1);
    const WeightBundle b = make_reference_bundle(BundleHeader::from(s, 64, 2.0), rng);
    CHECK_NOTHROW(check_reference_topology(b));
    const auto shapes = validate_chain(b);
    CHECK(shapes[6].size() == 32768u);
    CHECK(shapes.back().size() == 15u);

    Rng ur(2);
    const RasterGrid g = rasterize(generate_users(s, ur), s);
    const auto fast = forward(g, b);
    const auto ref = forward_reference(g, b);
    REQUIRE(fast.size() == ref.size());
    for (std::size_t k = 0; k < fast.size(); ++k)
        CHECK(fast[k] == doctest::Approx(ref[k]).epsilon(1e-4).scale(1e-3));
    CHECK(forward(g, b) == fast);

    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    write_weights(buf, b);
    CHECK_NOTHROW(read_weights(buf));
}

TEST_CASE("reference topology check reports mismatches") {
    Scenario s;
    Rng rng(1);
    WeightBundle b = make_reference_bundle(BundleHeader::from(s, 64, 2.0), rng);
    std::get<MaxPool>(b.layers[2]).stride = 1;
    CHECK_THROWS_WITH_AS(check_reference_topology(b), doctest::Contains("layer 3"), Error);
}

TEST_CASE("decode and encode are inverse on the box") {
    BundleHeader h;
    h.num_uavs = 3;
    const std::vector<float> zeros(9, 0.0f), ones(9, 1.0f);
    for (const auto& p : decode(zeros, h).deployment.positions) CHECK(p == Point3{0, 0, h.h_min});
    for (const auto& p : decode(ones, h).deployment.positions) CHECK(p == Point3{h.area_x, h.area_y, h.h_max});
    const std::vector<float> wild{-2.0f, 3.0f, 0.5f, 0, 0, 0, 0, 0, 0};
    const auto clamped = decode(wild, h);
    CHECK(clamped.normalized[0] == 0.0);
    CHECK(clamped.normalized[1] == 1.0);
    CHECK_THROWS_AS(decode(std::vector<float>(8, 0.0f), h), Error);

    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        Deployment d;
        for (int m = 0; m < 3; ++m) d.positions.push_back({rng.uniform(0, 5000), rng.uniform(0, 5000), rng.uniform(50, 500)});
        const auto u = encode(d, h);
        std::vector<float> f(u.begin(), u.end());
        const auto back = decode(f, h).deployment;
        for (int m = 0; m < 3; ++m) {
            CHECK(back.positions[m].x == doctest::Approx(d.positions[m].x).epsilon(1e-6));
            CHECK(back.positions[m].z == doctest::Approx(d.positions[m].z).epsilon(1e-6));
        }
    }
}

TEST_CASE("repair restores feasibility") {
    Scenario s;
    Rng rng(5);
    int worst = 0;
    for (int k = 0; k < 2000; ++k) {
        Deployment d;
        for (int m = 0; m < 5; ++m) d.positions.push_back({rng.uniform(0, 5000), rng.uniform(0, 5000), rng.uniform(0, 500)});
        if (k % 10 == 0) d.positions[1] = d.positions[0];
        int sweeps = -1;
        const Deployment fixed = repair(d, s, rng, &sweeps);
        CHECK(oracle::audit_placement(fixed, s).empty());
        worst = std::max(worst, sweeps);
    }
    CHECK(worst <= 3);

    const Deployment ok{{{100, 100, 60}, {400, 100, 60}, {100, 400, 60}}};
    int sweeps = -1;
    CHECK(repair(ok, s, rng, &sweeps) == ok);
    CHECK(sweeps == 0);

    Scenario cramped = s;
    cramped.area_x = cramped.area_y = 10;
    cramped.h_max_m = 51;
    const Deployment pile{{{5, 5, 50}, {5, 5, 50}, {5, 5, 50}, {5, 5, 50}, {5, 5, 50}}};
    // x, y clamp to a 10 m box; only altitude can absorb separation
    const Deployment spread = repair(pile, cramped, rng);
    CHECK(oracle::audit_placement(spread, cramped).empty());
}
