#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support/oracles.hpp"
#include "isac/optimizer.hpp"

using namespace isac;

TEST_CASE("inertia schedule closed forms") {
    SwarmConfig cfg;
    CHECK(inertia_weight(0, cfg) == doctest::Approx(0.3 * std::numbers::e).epsilon(1e-14));
    CHECK(inertia_weight(cfg.t_max, cfg) == doctest::Approx(0.3 * std::exp(0.125)).epsilon(1e-14));
    for (int t = 1; t <= cfg.t_max; ++t) CHECK(inertia_weight(t, cfg) < inertia_weight(t - 1, cfg));
}

TEST_CASE("learning factors, normalized form") {
    SwarmConfig cfg;
    const auto end = learning_factors(cfg.t_max, cfg);
    CHECK(end[0] == doctest::Approx(cfg.c_end));
    CHECK(end[1] == doctest::Approx(cfg.c_ini));
    CHECK(learning_factors(1, cfg)[0] == doctest::Approx(cfg.c_ini).epsilon(0.01));
    const auto mid = learning_factors(cfg.t_max / 2, cfg);
    CHECK(mid[0] == doctest::Approx(mid[1]));
    for (int t = 2; t <= cfg.t_max; ++t) {
        CHECK(learning_factors(t, cfg)[0] < learning_factors(t - 1, cfg)[0]);
        CHECK(learning_factors(t, cfg)[1] > learning_factors(t - 1, cfg)[1]);
    }
}

TEST_CASE("learning factors, literal form stays bounded") {
    SwarmConfig cfg;
    cfg.learning_form = LearningForm::Literal;
    for (int t = 0; t <= cfg.t_max; ++t) {
        const auto c = learning_factors(t, cfg);
        CHECK(c[0] >= cfg.c_end);
        CHECK(c[0] <= cfg.c_ini);
        CHECK(c[1] >= cfg.c_end);
        CHECK(c[1] <= cfg.c_ini);
    }
    CHECK(learning_factors(cfg.t_max, cfg)[0] == doctest::Approx(cfg.c_end));
    // t = 150: c_end + 2 * (50/150)^1.2 is inside the clamp
    CHECK(learning_factors(150, cfg)[0] == doctest::Approx(0.5 + 2.0 * std::pow(50.0 / 150.0, 1.2)));
}

TEST_CASE("variants select their schedules") {
    SwarmConfig cfg;
    const int t = 37;
    cfg.variant = Variant::PSO;
    auto k = schedule_at(t, cfg);
    CHECK(k.w == cfg.static_w);
    CHECK(k.c1 == cfg.static_c);
    CHECK(k.c2 == cfg.static_c);
    cfg.variant = Variant::DWPSO;
    k = schedule_at(t, cfg);
    CHECK(k.w == inertia_weight(t, cfg));
    CHECK(k.c1 == cfg.static_c);
    cfg.variant = Variant::DCPSO;
    k = schedule_at(t, cfg);
    CHECK(k.w == cfg.static_w);
    CHECK(k.c1 == learning_factors(t, cfg)[0]);
    cfg.variant = Variant::DPSO;
    k = schedule_at(t, cfg);
    CHECK(k.w == inertia_weight(t, cfg));
    CHECK(k.c2 == learning_factors(t, cfg)[1]);

    CHECK(parse_variant("DPSO") == Variant::DPSO);
    CHECK(parse_variant("dcpso") == Variant::DCPSO);
    CHECK(to_string(Variant::DWPSO) == "dwpso");
    CHECK_THROWS_AS(parse_variant("ga"), Error);
}

TEST_CASE("swarm config validation") {
    SwarmConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.k_particles = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = SwarmConfig{};
    cfg.w_end = cfg.w_ini;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = SwarmConfig{};
    cfg.t_max = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("step: fixed point and ballistic motion") {
    Scenario s;
    const SearchBox box = SearchBox::from(s, 0.1);
    Particle p;
    p.position = {{{1000, 2000, 100}, {3000, 1000, 200}}};
    p.best = p.position;
    p.velocity.assign(6, 0.0);
    Rng rng(1);
    step(p, p.position, {0.7, 2.0, 2.0}, box, rng);
    CHECK(p.position == p.best);

    p.velocity = {10, -20, 5, 0, 0, -1};
    step(p, p.best, {1.0, 0.0, 0.0}, box, rng);
    CHECK(p.position.positions[0] == Point3{1010, 1980, 105});
    CHECK(p.position.positions[1] == Point3{3000, 1000, 199});
}

TEST_CASE("step clamps velocity and position") {
    Scenario s;
    const SearchBox box = SearchBox::from(s, 0.1);
    CHECK(box.v_max.x == 500);
    CHECK(box.v_max.z == doctest::Approx(45));
    Particle p;
    p.position = {{{4900, 50, 60}}};
    p.best = p.position;
    p.velocity = {1e6, -1e6, -1e6};
    Rng rng(2);
    step(p, p.best, {1.0, 0.0, 0.0}, box, rng);
    CHECK(p.velocity[0] == 500);
    CHECK(p.velocity[1] == -500);
    CHECK(p.velocity[2] == doctest::Approx(-45));
    CHECK(p.position.positions[0] == Point3{5000, 0, 50});
    CHECK(box.contains(p.position.positions[0]));
}

TEST_CASE("kmeans: blobs, degenerate inputs and surplus UAVs") {
    Scenario s;
    SUBCASE("two blobs reach the optimal two-partition") {
        UserSet u;
        Rng rng(4);
        for (int n = 0; n < 8; ++n) u.positions.push_back({500 + rng.uniform(-50, 50), 500 + rng.uniform(-50, 50)});
        for (int n = 0; n < 8; ++n) u.positions.push_back({4000 + rng.uniform(-50, 50), 3000 + rng.uniform(-50, 50)});
        Rng km(9);
        const Deployment d = kmeans_init(u, 2, s, km);
        std::vector<Point2> centers;
        for (const auto& p : d.positions) {
            centers.push_back({p.x, p.y});
            CHECK(p.z == s.h_min_m + 50);
        }
        CHECK(oracle::sse(u, centers) == doctest::Approx(oracle::best_two_partition_sse(u)).epsilon(1e-9));
    }
    SUBCASE("all users at one point") {
        const UserSet u{{{1234, 4321}, {1234, 4321}, {1234, 4321}}};
        Rng km(1);
        const Deployment d = kmeans_init(u, 1, s, km);
        REQUIRE(d.size() == 1);
        CHECK(d.positions[0] == Point3{1234, 4321, 100});
    }
    SUBCASE("one user, five UAVs") {
        const UserSet u{{{10, 20}}};
        Rng km(1);
        const Deployment d = kmeans_init(u, 5, s, km);
        REQUIRE(d.size() == 5);
        CHECK(d.positions[0] == Point3{10, 20, 100});
        for (const auto& p : d.positions) {
            CHECK(p.x >= 0);
            CHECK(p.x <= s.area_x);
        }
    }
}

TEST_CASE("parallel and serial population evaluation agree") {
    Scenario s;
    Rng rng(6);
    const UserSet u = generate_users(s, rng);
    std::vector<Deployment> pop;
    for (int i = 0; i < 40; ++i) {
        Deployment d;
        for (int m = 0; m < 5; ++m) d.positions.push_back({rng.uniform(0, 5000), rng.uniform(0, 5000), rng.uniform(40, 500)});
        pop.push_back(d);
    }
    const auto a = evaluate_population(pop, u, s, {});
    const auto b = evaluate_population_serial(pop, u, s, {});
    for (std::size_t i = 0; i < pop.size(); ++i) {
        CHECK(a[i].value == b[i].value);
        CHECK(a[i].feasible == b[i].feasible);
    }
}

namespace {

SwarmConfig small_swarm(Variant v) {
    SwarmConfig cfg;
    cfg.k_particles = 12;
    cfg.t_max = 40;
    cfg.variant = v;
    return cfg;
}

}  // namespace

TEST_CASE("optimize: reproducible, monotone, feasible, in the box") {
    Scenario s;
    s.num_users = 15;
    Rng rng(10);
    const UserSet u = generate_users(s, rng);
    for (Variant v : {Variant::DPSO, Variant::PSO, Variant::DWPSO, Variant::DCPSO}) {
        const SwarmConfig cfg = small_swarm(v);
        const SwarmResult a = optimize(u, s, cfg, Rng(3));
        const SwarmResult b = optimize(u, s, cfg, Rng(3));
        CHECK(a.best == b.best);
        CHECK(a.convergence == b.convergence);
        REQUIRE(a.convergence.size() == static_cast<std::size_t>(cfg.t_max));
        CHECK(a.iterations_run == cfg.t_max);
        for (std::size_t t = 1; t < a.convergence.size(); ++t) CHECK(a.convergence[t] >= a.convergence[t - 1]);
        CHECK(a.convergence.back() == a.best_fitness.value);
        CHECK(a.best_fitness.feasible);
        CHECK(oracle::audit_placement(a.best, s).empty());
        const SearchBox box = SearchBox::from(s, cfg.v_max_fraction);
        for (const auto& p : a.best.positions) CHECK(box.contains(p));
        CHECK(fitness(a.best, u, s).value == a.best_fitness.value);
    }
}

TEST_CASE("optimize: serial evaluation gives the same trajectory") {
    Scenario s;
    s.num_users = 12;
    Rng rng(8);
    const UserSet u = generate_users(s, rng);
    SwarmConfig cfg = small_swarm(Variant::DPSO);
    const SwarmResult par = optimize(u, s, cfg, Rng(1));
    cfg.parallel = false;
    const SwarmResult ser = optimize(u, s, cfg, Rng(1));
    CHECK(par.best == ser.best);
    CHECK(par.convergence == ser.convergence);
}

TEST_CASE("DPSO with a frozen schedule reproduces PSO") {
    Scenario s;
    s.num_users = 12;
    Rng rng(15);
    const UserSet u = generate_users(s, rng);
    SwarmConfig pso = small_swarm(Variant::PSO);
    const SwarmResult reference = optimize(u, s, pso, Rng(4));
    SwarmConfig dpso = small_swarm(Variant::DPSO);
    const SwarmResult pinned = optimize(u, s, dpso, Rng(4), [&](int) {
        return Coefficients{pso.static_w, pso.static_c, pso.static_c};
    });
    CHECK(pinned.best == reference.best);
    CHECK(pinned.convergence == reference.convergence);
}

TEST_CASE("single particle and shadowed runs") {
    Scenario s;
    s.num_users = 10;
    Rng rng(2);
    const UserSet u = generate_users(s, rng);
    SwarmConfig cfg = small_swarm(Variant::DPSO);
    cfg.k_particles = 1;
    const SwarmResult one = optimize(u, s, cfg, Rng(5));
    CHECK(one.convergence.size() == 40u);
    cfg = small_swarm(Variant::DPSO);
    cfg.shadowing = ShadowingMode::Sampled;
    const SwarmResult a = optimize(u, s, cfg, Rng(5));
    const SwarmResult b = optimize(u, s, cfg, Rng(5));
    CHECK(a.best == b.best);
}

TEST_CASE("all-infeasible swarm stays well ordered") {
    Scenario s;
    s.num_users = 5;
    s.d_min_m = 1e5;  // larger than the area: no feasible deployment exists
    Rng rng(1);
    const UserSet u = generate_users(s, rng);
    const SwarmResult r = optimize(u, s, small_swarm(Variant::DPSO), Rng(1));
    CHECK_FALSE(r.best_fitness.feasible);
    for (double v : r.convergence) CHECK(v == -1.0);
}
