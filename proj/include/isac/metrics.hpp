#pragma once

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "isac/association.hpp"
#include "isac/channel.hpp"
#include "isac/core.hpp"

namespace isac {

/// b * log2(1 + sinr), bits/s.
double throughput(double bandwidth_hz, double sinr_linear);

using TdoaMatrix = std::array<Point3, 2>;

/// Rows v2 - v1 and v3 - v1 of user-to-UAV unit vectors; the first UAV of
/// `triple` is the TDOA reference.
TdoaMatrix tdoa_matrix(const std::array<int, 3>& triple, const Point2& user, const Deployment& d);
TdoaMatrix tdoa_matrix(const Point3& ref_dir, const Point3& dir2, const Point3& dir3);

/// sqrt(tr((H H^T)^-1)); +infinity when the 2x2 Gram matrix is singular.
double pdop(const TdoaMatrix& h);
double pdop(const std::array<int, 3>& triple, const Point2& user, const Deployment& d);

/// min(rho, rho_max). Unserved users are scored with rho = +infinity.
double localization_score(double rho, const Scenario& s);

/// lambda * norm(R) + (1 - lambda) * norm(1/G), both terms clamped to [0, 1].
double utility(double rate_bps, double loc_score, const Scenario& s);

struct UserMetrics {
    double rate_bps{0.0};
    double loc_score{0.0};  // G_n
    double utility{0.0};    // chi_n
    double sinr_comm{0.0};
    double pdop{std::numeric_limits<double>::infinity()};
};

struct EvaluationReport {
    std::vector<UserMetrics> users;
    double total_utility{0.0};
    std::vector<Violation> violations;
    Association association;

    bool feasible() const { return violations.empty(); }
};

/// Associates with BGAS, then scores every user. Infeasible deployments are
/// still scored; callers decide what to do with `violations`.
EvaluationReport evaluate(const Deployment& d, const UserSet& users, const Scenario& s,
                          const ShadowingField& shadowing = {});

/// Sum of utilities for an already computed association.
EvaluationReport score_association(const ChannelState& ch, const Deployment& d, const UserSet& users,
                                   const Association& a, const Scenario& s);

struct Fitness {
    double value{0.0};
    bool feasible{false};
};

/// Feasible: total utility. Infeasible: provisional -1, later replaced by
/// apply_population_penalty.
Fitness fitness(const Deployment& d, const UserSet& users, const Scenario& s,
                const ShadowingField& shadowing = {});

/// Infeasible members get (lowest feasible value in `population`) - 1,
/// or -1 when no member is feasible.
void apply_population_penalty(std::span<Fitness> population);

/// Feasible beats infeasible; otherwise larger value wins.
inline bool better(const Fitness& a, const Fitness& b) {
    if (a.feasible != b.feasible) return a.feasible;
    return a.value > b.value;
}

}  // namespace isac
