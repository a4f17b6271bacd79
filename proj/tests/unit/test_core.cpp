#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "isac/core.hpp"
#include "isac/units.hpp"

using namespace isac;

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
    Rng rng(11);
    for (int k = 0; k < 500; ++k) {
        const Point3 a{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(0, 500)};
        const Point3 b{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(0, 500)};
        const Point3 c{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(0, 500)};
        CHECK(distance(a, b) == distance(b, a));
        CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        CHECK(distance(a, a) == 0.0);
    }
    CHECK(distance({0, 0, 0}, {3, 4, 12}) == doctest::Approx(13.0));
}

TEST_CASE("unit conversions") {
    CHECK(units::dbm_to_watts(-140.0) == doctest::Approx(1e-17).epsilon(1e-12));
    CHECK(units::db_to_linear(3.0) == doctest::Approx(1.9952623));
    CHECK(units::linear_to_db(units::db_to_linear(7.5)) == doctest::Approx(7.5));
    CHECK(units::watts_to_dbm(1.0) == doctest::Approx(30.0));
}

TEST_CASE("scenario defaults and validation") {
    Scenario s;
    CHECK_NOTHROW(s.validate());
    CHECK(s.k_p == 30);
    CHECK(s.throughput_ceiling() == doctest::Approx(1e6 * std::log2(1001.0)));
    s.r_norm_max = 5e6;
    CHECK(s.throughput_ceiling() == 5e6);

    Scenario bad;
    bad.num_uavs = 2;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = Scenario{};
    bad.h_max_m = bad.h_min_m;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("h_min"), Error);
    bad = Scenario{};
    bad.lambda_w = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("scenario config round-trips") {
    Scenario s;
    s.num_users = 42;
    s.eta = 4.25;
    s.psi_dbm = -137.5;
    s.k_c = 7;
    std::stringstream buf;
    write_scenario(buf, s);
    const Scenario back = read_scenario(buf);
    CHECK(back.num_users == 42);
    CHECK(back.eta == 4.25);
    CHECK(back.psi_dbm == -137.5);
    CHECK(back.k_c == 7);
    CHECK(back.area_x == s.area_x);
}

TEST_CASE("scenario config errors name the line") {
    std::istringstream unknown("M = 5\nbogus = 1\n");
    CHECK_THROWS_WITH_AS(read_scenario(unknown), doctest::Contains("line 2"), Error);
    std::istringstream bad_value("eta = fast\n");
    CHECK_THROWS_WITH_AS(read_scenario(bad_value), doctest::Contains("eta"), Error);
    std::istringstream comments("# header\n\nN = 12   # trailing\n");
    CHECK(read_scenario(comments).num_users == 12);
}

TEST_CASE("rng is reproducible and substreams are independent of draw order") {
    Rng a(5), b(5);
    for (int k = 0; k < 100; ++k) CHECK(a() == b());
    Rng c(5);
    const Rng sub_before = c.substream(3);
    for (int k = 0; k < 10; ++k) c.uniform();
    Rng sub_after = c.substream(3);
    Rng copy = sub_before;
    for (int k = 0; k < 20; ++k) CHECK(copy() == sub_after());
    CHECK(Rng(5).substream(1)() != Rng(5).substream(2)());
    CHECK(Rng(5).substream(1, 2)() == Rng(5).substream(1).substream(2)());
}

TEST_CASE("rng draws stay in range") {
    Rng r(99);
    double mean = 0, var = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double z = r.normal();
        mean += z;
        var += z * z;
        CHECK(r.index(7) < 7u);
    }
    CHECK(std::abs(mean / n) < 0.05);
    CHECK(std::abs(var / n - 1.0) < 0.05);
    CHECK_THROWS_AS(r.index(0), Error);
}

TEST_CASE("generate_users: inside the area, centred for large N") {
    Scenario s;
    s.num_users = 1000;
    Rng rng(2024);
    const UserSet u = generate_users(s, rng);
    REQUIRE(u.size() == 1000);
    double mx = 0, my = 0;
    for (const auto& p : u.positions) {
        CHECK(p.x >= 0.0);
        CHECK(p.x <= s.area_x);
        CHECK(p.y >= 0.0);
        CHECK(p.y <= s.area_y);
        mx += p.x;
        my += p.y;
    }
    CHECK(std::abs(mx / 1000 - 2500) < 0.05 * 2500);
    CHECK(std::abs(my / 1000 - 2500) < 0.05 * 2500);

    Rng again(2024);
    CHECK(generate_users(s, again).positions == u.positions);
}

TEST_CASE("check_feasible: boundaries are inclusive") {
    Scenario s;
    Deployment d{{{0, 0, 50}, {100, 0, 50}, {0, 100, 60}}};
    CHECK(is_feasible(d, s));
    d.positions[1].x = 99.999;
    auto v = check_feasible(d, s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == Violation::Kind::Separation);
    CHECK(v[0].first == 0);
    CHECK(v[0].second == 1);
    CHECK(v[0].describe().find("apart") != std::string::npos);
    d.positions[1].x = 300;
    d.positions[2].z = 49.9;
    v = check_feasible(d, s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == Violation::Kind::Altitude);
    CHECK(v[0].value == 49.9);
}

TEST_CASE("feasibility is invariant under reordering the UAVs") {
    Scenario s;
    Rng rng(8);
    for (int k = 0; k < 200; ++k) {
        Deployment d;
        for (int m = 0; m < 5; ++m) d.positions.push_back({rng.uniform(0, 400), rng.uniform(0, 400), rng.uniform(30, 120)});
        const auto base = check_feasible(d, s).size();
        std::reverse(d.positions.begin(), d.positions.end());
        CHECK(check_feasible(d, s).size() == base);
        std::rotate(d.positions.begin(), d.positions.begin() + 2, d.positions.end());
        CHECK(check_feasible(d, s).size() == base);
    }
}
