#include "isac/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isac/metrics.hpp"
#include "isac/units.hpp"

namespace isac {

std::vector<int> Association::comm_loads() const {
    return loads_from_serving(serving_uav, static_cast<int>(remaining_comm.size()));
}

std::vector<int> Association::loc_loads() const {
    std::vector<int> loads(remaining_loc.size(), 0);
    for (const auto& t : loc_triple)
        if (t)
            for (int m : *t) ++loads[m];
    return loads;
}

BgasState::BgasState(const ChannelState& ch, const Scenario& s)
    : comm_load(static_cast<std::size_t>(ch.num_uavs()), 0),
      comm_remaining(static_cast<std::size_t>(ch.num_uavs()), s.k_c),
      comm_weakest(static_cast<std::size_t>(ch.num_uavs()), std::numeric_limits<double>::infinity()),
      loc_load(static_cast<std::size_t>(ch.num_uavs()), 0),
      loc_remaining(static_cast<std::size_t>(ch.num_uavs()), s.k_p),
      loc_weakest(static_cast<std::size_t>(ch.num_uavs()), std::numeric_limits<double>::infinity()),
      num_uavs_(ch.num_uavs()),
      num_users_(ch.num_users()),
      p_max_(s.p_max_w) {
    const int M = num_uavs_;
    const int N = num_users_;
    isolation_.resize(static_cast<std::size_t>(M) * N);
    loc_isolation_.resize(static_cast<std::size_t>(M) * N);
    for (int n = 0; n < N; ++n) {
        double total = 0.0;
        for (int m = 0; m < M; ++m) total += ch.gain(m, n);
        for (int m = 0; m < M; ++m) {
            const double others = total - ch.gain(m, n);
            isolation_[static_cast<std::size_t>(m) * N + n] =
                ch.gain(m, n) / (p_max_ * std::max(others, 0.0) + ch.noise_w());
            loc_isolation_[static_cast<std::size_t>(m) * N + n] = ch.gain(m, n) / ch.noise_w();
        }
    }

    ranked_.resize(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        auto& list = ranked_[n];
        for (int a = 0; a < M; ++a)
            for (int b = a + 1; b < M; ++b)
                for (int c = b + 1; c < M; ++c) {
                    const std::array<std::array<int, 3>, 3> orders = {{{a, b, c}, {b, a, c}, {c, a, b}}};
                    RankedTriple best{std::numeric_limits<double>::infinity(), orders[0]};
                    for (const auto& o : orders) {
                        const double rho =
                            pdop(tdoa_matrix(ch.direction(o[0], n), ch.direction(o[1], n), ch.direction(o[2], n)));
                        if (rho < best.pdop) best = {rho, o};
                    }
                    if (std::isfinite(best.pdop)) list.push_back(best);
                }
        std::stable_sort(list.begin(), list.end(),
                         [](const RankedTriple& x, const RankedTriple& y) { return x.pdop < y.pdop; });
    }
}

double BgasState::admission_sinr(int m, int n, int load, double weakest_isolation) const {
    return p_max_ / (load + 1) * std::min(isolation(m, n), weakest_isolation);
}

double BgasState::loc_admission_sinr(int m, int n, int load, double weakest_isolation) const {
    return p_max_ / (load + 1) * std::min(loc_isolation(m, n), weakest_isolation);
}

std::optional<CommBenefit> comm_benefit(int n, const BgasState& st, const Scenario& s) {
    const double threshold = units::db_to_linear(s.gamma_c_db);
    std::optional<CommBenefit> best;
    for (int m = 0; m < st.num_uavs(); ++m) {
        if (st.comm_remaining[m] <= 0) continue;
        if (!(st.admission_sinr(m, n, st.comm_load[m], st.comm_weakest[m]) > threshold)) continue;
        const double q = s.p_max_w / (st.comm_load[m] + 1) * st.isolation(m, n);
        if (!best || q > best->q) best = CommBenefit{q, m};
    }
    return best;
}

std::vector<int> loc_eligible(int n, const BgasState& st, const Scenario& s) {
    const double threshold = units::db_to_linear(s.gamma_p_db);
    std::vector<int> out;
    for (int m = 0; m < st.num_uavs(); ++m) {
        if (st.loc_remaining[m] <= 0) continue;
        if (st.loc_admission_sinr(m, n, st.loc_load[m], st.loc_weakest[m]) > threshold) out.push_back(m);
    }
    return out;
}

std::optional<LocBenefit> loc_benefit(int n, const BgasState& st, const Scenario& s) {
    const auto eligible = loc_eligible(n, st, s);
    if (eligible.size() < 3) return std::nullopt;
    std::vector<char> ok(static_cast<std::size_t>(st.num_uavs()), 0);
    for (int m : eligible) ok[m] = 1;
    for (const auto& r : st.ranked_triples(n))
        if (ok[r.triple[0]] && ok[r.triple[1]] && ok[r.triple[2]]) return LocBenefit{r.pdop, r.triple};
    return std::nullopt;
}

Association bgas(const ChannelState& ch, const Scenario& s) {
    BgasState st(ch, s);
    const int N = ch.num_users();
    Association a;
    a.serving_uav.assign(static_cast<std::size_t>(N), kUnserved);
    a.loc_triple.assign(static_cast<std::size_t>(N), std::nullopt);

    // communication: highest SINR first
    while (true) {
        int pick = -1;
        CommBenefit pick_b{};
        for (int n = 0; n < N; ++n) {
            if (a.serving_uav[n] != kUnserved) continue;
            const auto b = comm_benefit(n, st, s);
            if (b && (pick < 0 || b->q > pick_b.q)) {
                pick = n;
                pick_b = *b;
            }
        }
        if (pick < 0) break;
        const int m = pick_b.uav;
        a.serving_uav[pick] = m;
        ++st.comm_load[m];
        --st.comm_remaining[m];
        st.comm_weakest[m] = std::min(st.comm_weakest[m], st.isolation(m, pick));
    }

    // localization: best (lowest) PDOP first
    std::vector<char> located(static_cast<std::size_t>(N), 0);
    while (true) {
        int pick = -1;
        LocBenefit pick_b{};
        for (int n = 0; n < N; ++n) {
            if (located[n]) continue;
            const auto b = loc_benefit(n, st, s);
            if (b && (pick < 0 || b->q < pick_b.q)) {
                pick = n;
                pick_b = *b;
            }
        }
        if (pick < 0) break;
        located[pick] = 1;
        a.loc_triple[pick] = pick_b.triple;
        for (int m : pick_b.triple) {
            ++st.loc_load[m];
            --st.loc_remaining[m];
            st.loc_weakest[m] = std::min(st.loc_weakest[m], st.loc_isolation(m, pick));
        }
    }

    a.remaining_comm = st.comm_remaining;
    a.remaining_loc = st.loc_remaining;
    return a;
}

}  // namespace isac
