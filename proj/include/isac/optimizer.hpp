#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "isac/channel.hpp"
#include "isac/core.hpp"
#include "isac/metrics.hpp"

namespace isac {

enum class Variant {
    DPSO,   // nonlinear inertia and nonlinear learning factors
    PSO,    // static w, static c
    DWPSO,  // nonlinear inertia, static c
    DCPSO,  // static w, nonlinear learning factors
};

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

enum class LearningForm {
    Normalized,  // c_end + (c_ini - c_end) * ((t_max - t) / t_max)^1.2
    Literal,     // c_end + (c_ini - c_end) * ((t_max - t) / t)^1.2, clamped to [c_end, c_ini]
};

struct SwarmConfig {
    int k_particles{50};
    int t_max{200};
    double w_ini{0.9};
    double w_end{0.4};
    double c_ini{2.5};
    double c_end{0.5};
    double v_max_fraction{0.1};  // per-axis velocity clamp, fraction of the axis extent
    Variant variant{Variant::DPSO};
    double static_w{0.7};
    double static_c{2.0};
    LearningForm learning_form{LearningForm::Normalized};
    ShadowingMode shadowing{ShadowingMode::Expected};
    bool parallel{true};  // OpenMP population evaluation

    void validate() const;
};

struct Coefficients {
    double w;
    double c1;
    double c2;
};

/// (w_ini - w_end - 0.2) * exp(1 / (1 + 7 t / t_max)).
double inertia_weight(int t, const SwarmConfig& cfg);

/// {c1, c2}: c1 falls from c_ini to c_end, c2 rises from c_end to c_ini.
std::array<double, 2> learning_factors(int t, const SwarmConfig& cfg);

/// Coefficients the configured variant uses at iteration t.
Coefficients schedule_at(int t, const SwarmConfig& cfg);

/// Axis-aligned search region [0, area_x] x [0, area_y] x [h_min, h_max].
struct SearchBox {
    Point3 lo;
    Point3 hi;
    Point3 v_max;

    static SearchBox from(const Scenario& s, double v_max_fraction);
    Point3 clamp(const Point3& p) const;
    bool contains(const Point3& p) const;
};

struct Particle {
    Deployment position;
    std::vector<double> velocity;  // 3M, laid out x0 y0 z0 x1 ...
    Deployment best;
    Fitness best_fitness{-1.0, false};
};

/// One velocity/position update with per-dimension r1, r2 ~ U[0, 1].
void step(Particle& p, const Deployment& global_best, const Coefficients& k, const SearchBox& box, Rng& rng);

/// Lloyd's k-means with k-means++ seeding over user (x, y); UAVs at h_min + 50 m.
/// With fewer users than UAVs the surplus UAVs are placed uniformly at random.
Deployment kmeans_init(const UserSet& users, int num_uavs, const Scenario& s, Rng& rng);

/// Fitness of every deployment with the population penalty applied.
std::vector<Fitness> evaluate_population(std::span<const Deployment> population, const UserSet& users,
                                         const Scenario& s, const ShadowingField& shadowing);
/// Serial reference of evaluate_population.
std::vector<Fitness> evaluate_population_serial(std::span<const Deployment> population, const UserSet& users,
                                                const Scenario& s, const ShadowingField& shadowing);

struct SwarmResult {
    Deployment best;
    Fitness best_fitness;
    std::vector<double> convergence;  // global-best fitness after each iteration
    int iterations_run{0};
};

/// Optional hook replacing the variant's schedule (used to pin coefficients).
using ScheduleFn = std::function<Coefficients(int t)>;

SwarmResult optimize(const UserSet& users, const Scenario& s, const SwarmConfig& cfg, const Rng& rng,
                     const ScheduleFn& schedule = {});

}  // namespace isac
