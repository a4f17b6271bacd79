#pragma once

#include <array>
#include <optional>
#include <vector>

#include "isac/channel.hpp"
#include "isac/core.hpp"

namespace isac {

inline constexpr int kUnserved = -1;

/**
 * Communication map A (one serving UAV per user or kUnserved) and
 * localization map B (an ordered UAV triple, reference first, or nothing),
 * with the capacity counters left after association.
 */
struct Association {
    std::vector<int> serving_uav;
    std::vector<std::optional<std::array<int, 3>>> loc_triple;
    std::vector<int> remaining_comm;
    std::vector<int> remaining_loc;

    std::vector<int> comm_loads() const;
    std::vector<int> loc_loads() const;
};

/**
 * Greedy bookkeeping shared by both association passes.
 *
 * BGAS ranks links with a load-aware lower bound on the SINR: the serving
 * UAV's power is split over its users plus the candidate, while every other
 * UAV is assumed to radiate its full p_max. The bound only falls as loads
 * grow, so candidate sets never grow during the greedy passes, and every link
 * admitted with bound > threshold keeps SINR > threshold once the real loads
 * are known.
 *
 * Localization links use orthogonal positioning resources, so their SINR is
 * noise-limited: (p_max / loc_load) * g / psi. The bound is exact there.
 */
class BgasState {
public:
    BgasState(const ChannelState& ch, const Scenario& s);

    int num_uavs() const { return num_uavs_; }
    int num_users() const { return num_users_; }

    /// g_mn / (p_max * sum_{i != m} g_in + psi).
    double isolation(int m, int n) const { return isolation_[static_cast<std::size_t>(m) * num_users_ + n]; }
    /// g_mn / psi.
    double loc_isolation(int m, int n) const { return loc_isolation_[static_cast<std::size_t>(m) * num_users_ + n]; }

    /// Communication SINR bound of (m, n) if n joined UAV m with `load`
    /// current users, also guarding the users m already serves.
    double admission_sinr(int m, int n, int load, double weakest_isolation) const;
    double loc_admission_sinr(int m, int n, int load, double weakest_isolation) const;

    // communication phase
    std::vector<int> comm_load;
    std::vector<int> comm_remaining;
    std::vector<double> comm_weakest;  // min isolation over users served by m
    // localization phase
    std::vector<int> loc_load;
    std::vector<int> loc_remaining;
    std::vector<double> loc_weakest;

    /// Ranked (PDOP ascending) triples per user, each with its best reference.
    struct RankedTriple {
        double pdop;
        std::array<int, 3> triple;
    };
    const std::vector<RankedTriple>& ranked_triples(int n) const { return ranked_[n]; }

private:
    int num_uavs_;
    int num_users_;
    double p_max_;
    std::vector<double> isolation_;
    std::vector<double> loc_isolation_;
    std::vector<std::vector<RankedTriple>> ranked_;
};

struct CommBenefit {
    double q;  // SINR bound
    int uav;
};

struct LocBenefit {
    double q;  // PDOP
    std::array<int, 3> triple;
};

std::optional<CommBenefit> comm_benefit(int n, const BgasState& st, const Scenario& s);
std::optional<LocBenefit> loc_benefit(int n, const BgasState& st, const Scenario& s);

/// Every UAV whose localization SINR bound clears gamma_P with spare K_P.
std::vector<int> loc_eligible(int n, const BgasState& st, const Scenario& s);

Association bgas(const ChannelState& ch, const Scenario& s);

}  // namespace isac
