#include "isac/channel.hpp"

#include <cmath>
#include <numbers>

#include "isac/units.hpp"

namespace isac {

double reference_loss_db(const Scenario& s) {
    return 20.0 * std::log10(4.0 * std::numbers::pi * s.f_hz * s.d0_m / s.c_mps);
}

double slant_loss_db(double elevation_deg, const Scenario& s) {
    if (!(elevation_deg > 0.0))
        throw Error("channel", "slant loss needs a positive elevation angle, got " + std::to_string(elevation_deg));
    const double f_mhz = s.f_hz / 1.0e6;
    return s.slant_a * std::pow(f_mhz, s.slant_c) * std::pow(s.foliage_depth_m, s.slant_e) *
           std::pow(elevation_deg + s.slant_g, s.slant_h);
}

double elevation_deg(const Point3& uav, const Point3& user) {
    const double horizontal = std::hypot(uav.x - user.x, uav.y - user.y);
    return std::atan2(uav.z - user.z, horizontal) * 180.0 / std::numbers::pi;
}

LinkBudget link_budget(const Point3& uav, const Point3& user, const Scenario& s, double shadowing_db) {
    const double d = distance(uav, user);
    if (!(d > 0.0)) throw Error("channel", "path loss undefined at zero distance");
    const double theta = elevation_deg(uav, user);
    const double pl = reference_loss_db(s) + 10.0 * s.eta * std::log10(d / s.d0_m) + shadowing_db +
                      slant_loss_db(theta, s);
    return {pl, std::pow(10.0, -pl / 10.0), d, theta};
}

double path_loss_db(const Point3& uav, const Point3& user, const Scenario& s, double shadowing_db) {
    return link_budget(uav, user, s, shadowing_db).pl_db;
}

ShadowingField ShadowingField::sample(int num_uavs, int num_users, double sigma_db, Rng& rng) {
    ShadowingField f;
    f.num_users_ = num_users;
    f.values_.resize(static_cast<std::size_t>(num_uavs) * num_users);
    for (auto& v : f.values_) v = sigma_db * rng.normal();
    return f;
}

ChannelState::ChannelState(const Deployment& d, const UserSet& users, const Scenario& s,
                           const ShadowingField& shadowing)
    : num_uavs_(static_cast<int>(d.size())),
      num_users_(static_cast<int>(users.size())),
      noise_w_(units::dbm_to_watts(s.psi_dbm)) {
    const std::size_t total = static_cast<std::size_t>(num_uavs_) * num_users_;
    gains_.resize(total);
    dirs_.resize(total);
    const double ref = reference_loss_db(s);
    const double slant_scale =
        s.slant_a * std::pow(s.f_hz / 1.0e6, s.slant_c) * std::pow(s.foliage_depth_m, s.slant_e);
    for (int m = 0; m < num_uavs_; ++m) {
        const Point3& u = d.positions[m];
        for (int n = 0; n < num_users_; ++n) {
            const Point3 o = users.positions[n].on_ground();
            const double dx = u.x - o.x, dy = u.y - o.y, dz = u.z - o.z;
            const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (!(dist > 0.0)) throw Error("channel", "UAV coincides with a user");
            const double theta = std::atan2(dz, std::hypot(dx, dy)) * 180.0 / std::numbers::pi;
            if (!(theta > 0.0)) throw Error("channel", "UAV is not above the user");
            const double pl = ref + 10.0 * s.eta * std::log10(dist / s.d0_m) + shadowing.at(m, n) +
                              slant_scale * std::pow(theta + s.slant_g, s.slant_h);
            const std::size_t k = static_cast<std::size_t>(m) * num_users_ + n;
            gains_[k] = std::pow(10.0, -pl / 10.0);
            dirs_[k] = {dx / dist, dy / dist, dz / dist};
        }
    }
}

double sinr_with_loads(const ChannelState& ch, std::span<const int> loads, int m, int n,
                       const Scenario& s) {
    if (loads[m] <= 0) throw Error("association", "SINR requested for a UAV that serves no user");
    const double signal = s.p_max_w / loads[m] * ch.gain(m, n);
    double interference = 0.0;
    for (int i = 0; i < ch.num_uavs(); ++i) {
        if (i == m || loads[i] <= 0) continue;
        interference += s.p_max_w / loads[i] * ch.gain(i, n);
    }
    return signal / (interference + ch.noise_w());
}

double loc_sinr(const ChannelState& ch, std::span<const int> loc_loads, int m, int n, const Scenario& s) {
    if (loc_loads[m] <= 0) throw Error("association", "localization SINR requested for an idle UAV");
    return s.p_max_w / loc_loads[m] * ch.gain(m, n) / ch.noise_w();
}

std::vector<int> loads_from_serving(std::span<const int> serving_uav, int num_uavs) {
    std::vector<int> loads(static_cast<std::size_t>(num_uavs), 0);
    for (int m : serving_uav)
        if (m >= 0) ++loads[m];
    return loads;
}

double sinr(const ChannelState& ch, std::span<const int> serving_uav, int m, int n, const Scenario& s) {
    if (serving_uav[n] != m)
        throw Error("association", "user " + std::to_string(n) + " is not served by UAV " + std::to_string(m));
    const auto loads = loads_from_serving(serving_uav, ch.num_uavs());
    return sinr_with_loads(ch, loads, m, n, s);
}

}  // namespace isac
