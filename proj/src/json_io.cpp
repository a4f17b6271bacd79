#include "isac/json_io.hpp"

#include <cmath>
#include <fstream>

namespace isac {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("parse", path + ": " + e.what());
    }
}

// JSON has no infinity; unbounded PDOP is written as null.
json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

json users_to_json(const UserSet& users) {
    json j = json::array();
    for (const auto& p : users.positions) j.push_back({p.x, p.y});
    return j;
}

UserSet users_from_json(const json& j) {
    UserSet users;
    try {
        // accept either a bare list or {"users": [...]}
        const json& list = j.is_object() ? j.at("users") : j;
        for (const auto& p : list) {
            if (p.size() != 2) throw Error("parse", "user entries must be [x, y] pairs");
            users.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
    } catch (const json::exception& e) {
        throw Error("parse", std::string("bad user list: ") + e.what());
    }
    return users;
}

UserSet load_users(const std::string& path) {
    return users_from_json(read_json_file(path));
}

json deployment_to_json(const Deployment& d) {
    json j = json::array();
    for (const auto& p : d.positions) j.push_back({p.x, p.y, p.z});
    return j;
}

Deployment deployment_from_json(const json& j) {
    Deployment d;
    try {
        // accept either a bare list or {"uavs": [...]}
        const json& list = j.is_object() ? j.at("uavs") : j;
        for (const auto& p : list) {
            if (p.size() != 3) throw Error("parse", "UAV entries must be [x, y, z] triples");
            d.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
        }
    } catch (const json::exception& e) {
        throw Error("parse", std::string("bad deployment: ") + e.what());
    }
    return d;
}

Deployment load_deployment(const std::string& path) {
    return deployment_from_json(read_json_file(path));
}

json association_to_json(const Association& a) {
    json comm = json::array();
    for (int m : a.serving_uav) comm.push_back(m == kUnserved ? json(nullptr) : json(m));
    json loc = json::array();
    for (const auto& t : a.loc_triple) loc.push_back(t ? json(*t) : json(nullptr));
    return {{"communication", comm},
            {"localization", loc},
            {"remaining_comm_capacity", a.remaining_comm},
            {"remaining_loc_capacity", a.remaining_loc}};
}

json report_to_json(const EvaluationReport& report) {
    json users = json::array();
    for (const auto& u : report.users)
        users.push_back({{"rate_bps", u.rate_bps},
                         {"sinr", u.sinr_comm},
                         {"pdop", finite_or_null(u.pdop)},
                         {"G", u.loc_score},
                         {"chi", u.utility}});
    json violations = json::array();
    for (const auto& v : report.violations) violations.push_back(v.describe());
    return {{"total_utility", report.total_utility},
            {"feasible", report.feasible()},
            {"violations", violations},
            {"users", users},
            {"association", association_to_json(report.association)}};
}

}  // namespace isac
