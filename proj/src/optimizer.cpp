#include "isac/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isac {

namespace {

constexpr std::uint64_t kInitStream = 0x1A17;
constexpr std::uint64_t kShadowStream = 0x5AD0;
constexpr std::uint64_t kKMeansStream = 0x4B4D;

}  // namespace

Variant parse_variant(const std::string& name) {
    std::string n;
    for (char c : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (n == "dpso") return Variant::DPSO;
    if (n == "pso") return Variant::PSO;
    if (n == "dwpso") return Variant::DWPSO;
    if (n == "dcpso") return Variant::DCPSO;
    throw Error("usage", "unknown PSO variant '" + name + "'");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::DPSO: return "dpso";
        case Variant::PSO: return "pso";
        case Variant::DWPSO: return "dwpso";
        case Variant::DCPSO: return "dcpso";
    }
    return "?";
}

void SwarmConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error("swarm", std::string("invalid swarm config: ") + what);
    };
    require(t_max >= 1, "t_max must be >= 1");
    require(k_particles >= 1, "need at least one particle");
    require(w_ini > w_end, "w_ini must exceed w_end");
    require(c_ini > c_end, "c_ini must exceed c_end");
    require(v_max_fraction > 0, "v_max fraction must be positive");
}

double inertia_weight(int t, const SwarmConfig& cfg) {
    const double ratio = static_cast<double>(t) / cfg.t_max;
    return (cfg.w_ini - cfg.w_end - 0.2) * std::exp(1.0 / (1.0 + 7.0 * ratio));
}

std::array<double, 2> learning_factors(int t, const SwarmConfig& cfg) {
    const double span = cfg.c_ini - cfg.c_end;
    const double tm = cfg.t_max;
    if (cfg.learning_form == LearningForm::Literal) {
        auto literal = [&](double num, double den) {
            if (den <= 0.0) return cfg.c_ini;
            return std::clamp(cfg.c_end + span * std::pow(num / den, 1.2), cfg.c_end, cfg.c_ini);
        };
        const double c1 = literal(tm - t, t);
        const double c2 = literal(t, tm - t);
        return {c1, c2};
    }
    const double c1 = cfg.c_end + span * std::pow((tm - t) / tm, 1.2);
    const double c2 = cfg.c_end + span * std::pow(t / tm, 1.2);
    return {c1, c2};
}

Coefficients schedule_at(int t, const SwarmConfig& cfg) {
    const bool dyn_w = cfg.variant == Variant::DPSO || cfg.variant == Variant::DWPSO;
    const bool dyn_c = cfg.variant == Variant::DPSO || cfg.variant == Variant::DCPSO;
    Coefficients k{cfg.static_w, cfg.static_c, cfg.static_c};
    if (dyn_w) k.w = inertia_weight(t, cfg);
    if (dyn_c) {
        const auto c = learning_factors(t, cfg);
        k.c1 = c[0];
        k.c2 = c[1];
    }
    return k;
}

SearchBox SearchBox::from(const Scenario& s, double v_max_fraction) {
    SearchBox b;
    b.lo = {0.0, 0.0, s.h_min_m};
    b.hi = {s.area_x, s.area_y, s.h_max_m};
    b.v_max = {v_max_fraction * s.area_x, v_max_fraction * s.area_y, v_max_fraction * (s.h_max_m - s.h_min_m)};
    return b;
}

Point3 SearchBox::clamp(const Point3& p) const {
    return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y), std::clamp(p.z, lo.z, hi.z)};
}

bool SearchBox::contains(const Point3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

void step(Particle& p, const Deployment& global_best, const Coefficients& k, const SearchBox& box, Rng& rng) {
    const std::size_t uavs = p.position.size();
    for (std::size_t m = 0; m < uavs; ++m) {
        Point3& l = p.position.positions[m];
        const Point3& pb = p.best.positions[m];
        const Point3& gb = global_best.positions[m];
        double* l_axis[3] = {&l.x, &l.y, &l.z};
        const double pb_axis[3] = {pb.x, pb.y, pb.z};
        const double gb_axis[3] = {gb.x, gb.y, gb.z};
        const double vmax[3] = {box.v_max.x, box.v_max.y, box.v_max.z};
        for (int a = 0; a < 3; ++a) {
            double& v = p.velocity[3 * m + a];
            const double r1 = rng.uniform();
            const double r2 = rng.uniform();
            v = k.w * v + k.c1 * r1 * (pb_axis[a] - *l_axis[a]) + k.c2 * r2 * (gb_axis[a] - *l_axis[a]);
            v = std::clamp(v, -vmax[a], vmax[a]);
            *l_axis[a] += v;
        }
        l = box.clamp(l);
    }
}

Deployment kmeans_init(const UserSet& users, int num_uavs, const Scenario& s, Rng& rng) {
    const int N = static_cast<int>(users.size());
    const int k = std::min(N, num_uavs);
    const double z = std::min(s.h_min_m + 50.0, s.h_max_m);
    std::vector<Point2> centers;
    centers.reserve(static_cast<std::size_t>(k));

    auto sq = [](const Point2& a, const Point2& b) {
        const double dx = a.x - b.x, dy = a.y - b.y;
        return dx * dx + dy * dy;
    };

    if (k > 0) {
        // k-means++ seeding
        centers.push_back(users.positions[rng.index(static_cast<std::size_t>(N))]);
        std::vector<double> d2(static_cast<std::size_t>(N));
        while (static_cast<int>(centers.size()) < k) {
            double total = 0.0;
            for (int n = 0; n < N; ++n) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& c : centers) best = std::min(best, sq(users.positions[n], c));
                d2[n] = best;
                total += best;
            }
            int chosen = N - 1;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                for (int n = 0; n < N; ++n) {
                    acc += d2[n];
                    if (acc > target) {
                        chosen = n;
                        break;
                    }
                }
            } else {
                chosen = static_cast<int>(rng.index(static_cast<std::size_t>(N)));
            }
            centers.push_back(users.positions[chosen]);
        }

        // Lloyd iterations
        std::vector<int> label(static_cast<std::size_t>(N), -1);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (int n = 0; n < N; ++n) {
                int best_c = 0;
                double best_d = sq(users.positions[n], centers[0]);
                for (int c = 1; c < k; ++c) {
                    const double d = sq(users.positions[n], centers[c]);
                    if (d < best_d) {
                        best_d = d;
                        best_c = c;
                    }
                }
                if (label[n] != best_c) {
                    label[n] = best_c;
                    changed = true;
                }
            }
            if (!changed) break;
            std::vector<Point2> sum(static_cast<std::size_t>(k));
            std::vector<int> count(static_cast<std::size_t>(k), 0);
            for (int n = 0; n < N; ++n) {
                sum[label[n]].x += users.positions[n].x;
                sum[label[n]].y += users.positions[n].y;
                ++count[label[n]];
            }
            for (int c = 0; c < k; ++c)
                if (count[c] > 0) centers[c] = {sum[c].x / count[c], sum[c].y / count[c]};
        }
    }

    Deployment d;
    for (const auto& c : centers) d.positions.push_back({c.x, c.y, z});
    while (static_cast<int>(d.size()) < num_uavs)
        d.positions.push_back({rng.uniform(0.0, s.area_x), rng.uniform(0.0, s.area_y), z});
    return d;
}

std::vector<Fitness> evaluate_population_serial(std::span<const Deployment> population, const UserSet& users,
                                                const Scenario& s, const ShadowingField& shadowing) {
    std::vector<Fitness> out(population.size());
    for (std::size_t i = 0; i < population.size(); ++i) out[i] = fitness(population[i], users, s, shadowing);
    apply_population_penalty(out);
    return out;
}

std::vector<Fitness> evaluate_population(std::span<const Deployment> population, const UserSet& users,
                                         const Scenario& s, const ShadowingField& shadowing) {
    const auto count = static_cast<std::ptrdiff_t>(population.size());
    std::vector<Fitness> out(population.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            out[i] = fitness(population[i], users, s, shadowing);
        } catch (...) {
#pragma omp critical(isac_population_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    apply_population_penalty(out);
    return out;
}

SwarmResult optimize(const UserSet& users, const Scenario& s, const SwarmConfig& cfg, const Rng& rng,
                     const ScheduleFn& schedule) {
    s.validate();
    cfg.validate();
    const int M = s.num_uavs;
    const SearchBox box = SearchBox::from(s, cfg.v_max_fraction);

    ShadowingField shadowing;
    if (cfg.shadowing == ShadowingMode::Sampled) {
        Rng shadow_rng = rng.substream(kShadowStream);
        shadowing = ShadowingField::sample(M, static_cast<int>(users.size()), s.sigma_shadow_db, shadow_rng);
    }

    auto evaluate_all = [&](std::span<const Deployment> pop) {
        return cfg.parallel ? evaluate_population(pop, users, s, shadowing)
                            : evaluate_population_serial(pop, users, s, shadowing);
    };

    // initialization: one k-means particle, the rest uniform in the box
    std::vector<Particle> swarm(static_cast<std::size_t>(cfg.k_particles));
    for (int i = 0; i < cfg.k_particles; ++i) {
        Rng init = rng.substream(kInitStream, static_cast<std::uint64_t>(i));
        Particle& p = swarm[i];
        if (i == 0 && !users.empty()) {
            Rng km = rng.substream(kKMeansStream);
            p.position = kmeans_init(users, M, s, km);
        } else {
            for (int m = 0; m < M; ++m)
                p.position.positions.push_back({init.uniform(box.lo.x, box.hi.x), init.uniform(box.lo.y, box.hi.y),
                                                init.uniform(box.lo.z, box.hi.z)});
        }
        p.velocity.resize(static_cast<std::size_t>(3 * M));
        for (int m = 0; m < M; ++m) {
            p.velocity[3 * m + 0] = init.uniform(-box.v_max.x, box.v_max.x);
            p.velocity[3 * m + 1] = init.uniform(-box.v_max.y, box.v_max.y);
            p.velocity[3 * m + 2] = init.uniform(-box.v_max.z, box.v_max.z);
        }
    }

    std::vector<Deployment> positions(swarm.size());
    auto gather = [&] {
        for (std::size_t i = 0; i < swarm.size(); ++i) positions[i] = swarm[i].position;
    };

    SwarmResult result;
    gather();
    auto fit = evaluate_all(positions);
    std::size_t g = 0;
    for (std::size_t i = 0; i < swarm.size(); ++i) {
        swarm[i].best = swarm[i].position;
        swarm[i].best_fitness = fit[i];
        if (better(fit[i], fit[g])) g = i;
    }
    result.best = swarm[g].position;
    result.best_fitness = fit[g];

    for (int t = 1; t <= cfg.t_max; ++t) {
        const Coefficients k = schedule ? schedule(t) : schedule_at(t, cfg);
        const Deployment leader = result.best;
        for (std::size_t i = 0; i < swarm.size(); ++i) {
            Rng r = rng.substream(static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i));
            step(swarm[i], leader, k, box, r);
        }
        gather();
        fit = evaluate_all(positions);
        for (std::size_t i = 0; i < swarm.size(); ++i) {
            if (better(fit[i], swarm[i].best_fitness)) {
                swarm[i].best = swarm[i].position;
                swarm[i].best_fitness = fit[i];
            }
            if (better(fit[i], result.best_fitness)) {
                result.best = swarm[i].position;
                result.best_fitness = fit[i];
            }
        }
        result.convergence.push_back(result.best_fitness.value);
        result.iterations_run = t;
    }
    return result;
}

}  // namespace isac
