#include "isac/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace isac {

double throughput(double bandwidth_hz, double sinr_linear) {
    return bandwidth_hz * std::log2(1.0 + sinr_linear);
}

namespace {

Point3 sub(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Point3 unit_towards(const Point3& uav, const Point3& user) {
    const double d = distance(uav, user);
    if (!(d > 0.0)) throw Error("geometry", "UAV coincides with the user; TDOA direction undefined");
    return {(uav.x - user.x) / d, (uav.y - user.y) / d, (uav.z - user.z) / d};
}

}  // namespace

TdoaMatrix tdoa_matrix(const Point3& ref_dir, const Point3& dir2, const Point3& dir3) {
    return {sub(dir2, ref_dir), sub(dir3, ref_dir)};
}

TdoaMatrix tdoa_matrix(const std::array<int, 3>& triple, const Point2& user, const Deployment& d) {
    const Point3 o = user.on_ground();
    return tdoa_matrix(unit_towards(d.positions[triple[0]], o), unit_towards(d.positions[triple[1]], o),
                       unit_towards(d.positions[triple[2]], o));
}

double pdop(const TdoaMatrix& h) {
    const double g00 = dot(h[0], h[0]);
    const double g11 = dot(h[1], h[1]);
    const double g01 = dot(h[0], h[1]);
    const double det = g00 * g11 - g01 * g01;
    // rank-deficient Gram: parallel or vanishing rows
    if (!(g00 > 0.0) || !(g11 > 0.0) || !(det > 1e-12 * g00 * g11))
        return std::numeric_limits<double>::infinity();
    return std::sqrt((g00 + g11) / det);
}

double pdop(const std::array<int, 3>& triple, const Point2& user, const Deployment& d) {
    return pdop(tdoa_matrix(triple, user, d));
}

double localization_score(double rho, const Scenario& s) {
    return rho <= s.rho_max ? rho : s.rho_max;
}

double utility(double rate_bps, double loc_score, const Scenario& s) {
    const double r_hi = s.throughput_ceiling();
    const double inv_lo = 1.0 / s.rho_max;
    const double inv_hi = 1.0 / s.g_norm_min;
    if (!(r_hi > 0.0) || !(inv_hi > inv_lo))
        throw Error("metrics", "degenerate normalization bounds");
    const double r_term = std::clamp(rate_bps / r_hi, 0.0, 1.0);
    const double g_term = std::clamp((1.0 / loc_score - inv_lo) / (inv_hi - inv_lo), 0.0, 1.0);
    return s.lambda_w * r_term + (1.0 - s.lambda_w) * g_term;
}

EvaluationReport score_association(const ChannelState& ch, const Deployment& d, const UserSet& users,
                                   const Association& a, const Scenario& s) {
    EvaluationReport rep;
    rep.violations = check_feasible(d, s);
    rep.association = a;
    const auto comm = a.comm_loads();
    rep.users.resize(users.size());
    for (int n = 0; n < static_cast<int>(users.size()); ++n) {
        UserMetrics& um = rep.users[n];
        if (const int m = a.serving_uav[n]; m != kUnserved) {
            um.sinr_comm = sinr_with_loads(ch, comm, m, n, s);
            um.rate_bps = throughput(s.b_max_hz / comm[m], um.sinr_comm);
        }
        if (const auto& t = a.loc_triple[n]) {
            um.pdop = pdop(tdoa_matrix(ch.direction((*t)[0], n), ch.direction((*t)[1], n),
                                       ch.direction((*t)[2], n)));
        }
        um.loc_score = localization_score(um.pdop, s);
        um.utility = utility(um.rate_bps, um.loc_score, s);
        rep.total_utility += um.utility;
    }
    return rep;
}

EvaluationReport evaluate(const Deployment& d, const UserSet& users, const Scenario& s,
                          const ShadowingField& shadowing) {
    const ChannelState ch(d, users, s, shadowing);
    return score_association(ch, d, users, bgas(ch, s), s);
}

Fitness fitness(const Deployment& d, const UserSet& users, const Scenario& s, const ShadowingField& shadowing) {
    if (!is_feasible(d, s)) return {-1.0, false};
    return {evaluate(d, users, s, shadowing).total_utility, true};
}

void apply_population_penalty(std::span<Fitness> population) {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& f : population)
        if (f.feasible) lowest = std::min(lowest, f.value);
    const double penalty = std::isfinite(lowest) ? lowest - 1.0 : -1.0;
    for (auto& f : population)
        if (!f.feasible) f.value = penalty;
}

}  // namespace isac
