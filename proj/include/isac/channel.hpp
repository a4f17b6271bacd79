#pragma once

#include <span>
#include <vector>

#include "isac/core.hpp"

namespace isac {

/// Link quantities for one UAV-user pair. gain_linear == 10^(-pl_db / 10).
struct LinkBudget {
    double pl_db;
    double gain_linear;
    double d_m;
    double elevation_deg;
};

/// Free-space reference loss 20 lg(4 pi f d0 / c).
double reference_loss_db(const Scenario& s);

/// Extra foliage loss A * f_MHz^C * depth^E * (elevation + G)^H.
double slant_loss_db(double elevation_deg, const Scenario& s);

/// Elevation of `uav` seen from `user`, degrees in (0, 90] when the UAV is above.
double elevation_deg(const Point3& uav, const Point3& user);

double path_loss_db(const Point3& uav, const Point3& user, const Scenario& s, double shadowing_db);

LinkBudget link_budget(const Point3& uav, const Point3& user, const Scenario& s, double shadowing_db);

/**
 * Log-normal shadowing draws X_sigma, one per (UAV slot, user), frozen for a
 * whole episode so that every particle sees the same channel realisation.
 * An empty field means expected-value mode (X_sigma = 0 everywhere).
 */
class ShadowingField {
public:
    ShadowingField() = default;
    static ShadowingField sample(int num_uavs, int num_users, double sigma_db, Rng& rng);

    double at(int m, int n) const {
        return values_.empty() ? 0.0 : values_[static_cast<std::size_t>(m) * num_users_ + n];
    }
    bool is_expected_value() const { return values_.empty(); }

private:
    int num_users_{0};
    std::vector<double> values_;
};

enum class ShadowingMode { Expected, Sampled };

/// Dense M x N channel-gain matrix for one deployment and user set.
class ChannelState {
public:
    ChannelState(const Deployment& d, const UserSet& users, const Scenario& s,
                 const ShadowingField& shadowing = {});

    int num_uavs() const { return num_uavs_; }
    int num_users() const { return num_users_; }
    double gain(int m, int n) const { return gains_[static_cast<std::size_t>(m) * num_users_ + n]; }
    /// Unit vector from user n towards UAV m.
    const Point3& direction(int m, int n) const { return dirs_[static_cast<std::size_t>(m) * num_users_ + n]; }
    double noise_w() const { return noise_w_; }

private:
    int num_uavs_;
    int num_users_;
    double noise_w_;
    std::vector<double> gains_;
    std::vector<Point3> dirs_;
};

/**
 * SINR of user n served by UAV m when each UAV splits p_max evenly over the
 * users it serves (`loads[i]` users for UAV i). Interferers with zero load
 * are silent. Throws if loads[m] == 0.
 */
double sinr_with_loads(const ChannelState& ch, std::span<const int> loads, int m, int n,
                       const Scenario& s);

/// SINR of the link (m, n) under a per-user serving map (-1 = unserved).
/// Throws if user n is not served by m.
double sinr(const ChannelState& ch, std::span<const int> serving_uav, int m, int n, const Scenario& s);

/// Localization-link SINR: positioning signals use orthogonal resources, so
/// only noise limits them. `loc_loads[m]` counts the users UAV m helps locate.
double loc_sinr(const ChannelState& ch, std::span<const int> loc_loads, int m, int n, const Scenario& s);

std::vector<int> loads_from_serving(std::span<const int> serving_uav, int num_uavs);

}  // namespace isac
