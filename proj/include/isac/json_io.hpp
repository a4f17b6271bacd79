#pragma once

#include <string>

#include <json.hpp>

#include "isac/core.hpp"
#include "isac/metrics.hpp"
#include "isac/optimizer.hpp"

namespace isac {

// Users: [[x, y], ...]. Deployments: [[x, y, z], ...].
nlohmann::json users_to_json(const UserSet& users);
UserSet users_from_json(const nlohmann::json& j);
UserSet load_users(const std::string& path);

nlohmann::json deployment_to_json(const Deployment& d);
Deployment deployment_from_json(const nlohmann::json& j);
Deployment load_deployment(const std::string& path);

nlohmann::json association_to_json(const Association& a);
nlohmann::json report_to_json(const EvaluationReport& report);

}  // namespace isac
