#include "isac/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <variant>

namespace isac {

double distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error("scenario", "invalid scenario: " + what);
}

using FieldRef = std::variant<double Scenario::*, int Scenario::*>;

struct Field {
    const char* key;
    FieldRef ref;
};

// Single source of truth for the config file keys and their order.
const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        {"area_x", &Scenario::area_x},
        {"area_y", &Scenario::area_y},
        {"M", &Scenario::num_uavs},
        {"N", &Scenario::num_users},
        {"f_hz", &Scenario::f_hz},
        {"d0_m", &Scenario::d0_m},
        {"c_mps", &Scenario::c_mps},
        {"eta", &Scenario::eta},
        {"sigma_shadow_db", &Scenario::sigma_shadow_db},
        {"slant_A", &Scenario::slant_a},
        {"slant_C", &Scenario::slant_c},
        {"slant_E", &Scenario::slant_e},
        {"slant_G", &Scenario::slant_g},
        {"slant_H", &Scenario::slant_h},
        {"foliage_depth_m", &Scenario::foliage_depth_m},
        {"psi_dbm", &Scenario::psi_dbm},
        {"p_max_w", &Scenario::p_max_w},
        {"b_max_hz", &Scenario::b_max_hz},
        {"gamma_C_db", &Scenario::gamma_c_db},
        {"gamma_P_db", &Scenario::gamma_p_db},
        {"K_C", &Scenario::k_c},
        {"K_P", &Scenario::k_p},
        {"h_min_m", &Scenario::h_min_m},
        {"h_max_m", &Scenario::h_max_m},
        {"d_min_m", &Scenario::d_min_m},
        {"rho_max", &Scenario::rho_max},
        {"lambda_w", &Scenario::lambda_w},
        {"R_norm_max", &Scenario::r_norm_max},
        {"G_norm_min", &Scenario::g_norm_min},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

void Scenario::validate() const {
    require(area_x > 0 && area_y > 0, "area must be positive");
    require(num_uavs >= 3, "M must be at least 3 (localization uses UAV triples)");
    require(num_users >= 0, "N must be non-negative");
    require(f_hz > 0 && d0_m > 0 && c_mps > 0, "f, d0 and c must be positive");
    require(sigma_shadow_db >= 0, "shadowing std must be non-negative");
    require(foliage_depth_m > 0, "foliage depth must be positive");
    require(p_max_w > 0 && b_max_hz > 0, "power and bandwidth budgets must be positive");
    require(k_c >= 1 && k_p >= 1, "capacities must be at least 1");
    require(h_min_m < h_max_m, "h_min must be below h_max");
    require(d_min_m > 0, "d_min must be positive");
    require(lambda_w >= 0 && lambda_w <= 1, "lambda must lie in [0, 1]");
    require(g_norm_min > 0 && rho_max > g_norm_min, "need rho_max > G_norm_min > 0");
}

double Scenario::throughput_ceiling() const {
    if (r_norm_max > 0) return r_norm_max;
    return b_max_hz * std::log2(1.0 + 1000.0);  // 30 dB SINR cap
}

std::vector<std::string> scenario_keys() {
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.emplace_back(f.key);
    return keys;
}

namespace {

const Field& find_field(const std::string& key) {
    for (const auto& f : fields())
        if (key == f.key) return f;
    throw Error("config", "unknown key '" + key + "'");
}

}  // namespace

void set_scenario_value(Scenario& s, const std::string& key, const std::string& value) {
    const Field& field = find_field(key);
    try {
        std::size_t used = 0;
        if (auto* dp = std::get_if<double Scenario::*>(&field.ref))
            s.*(*dp) = std::stod(value, &used);
        else
            s.*(std::get<int Scenario::*>(field.ref)) = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
        throw Error("config", "bad value for '" + key + "': " + value);
    }
}

std::string scenario_value(const Scenario& s, const std::string& key) {
    const Field& field = find_field(key);
    if (auto* dp = std::get_if<double Scenario::*>(&field.ref)) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, s.*(*dp));  // shortest round-trip form
        return std::string(buf, res.ptr);
    }
    return std::to_string(s.*(std::get<int Scenario::*>(field.ref)));
}

Scenario read_scenario(std::istream& in) {
    Scenario s;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config", "line " + std::to_string(line_no) + ": expected key = value");
        try {
            set_scenario_value(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error("config", "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open scenario file " + path);
    return read_scenario(in);
}

void write_scenario(std::ostream& out, const Scenario& s) {
    out << "# ISAC UAV deployment scenario\n";
    for (const auto& f : fields()) out << f.key << " = " << scenario_value(s, f.key) << '\n';
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw Error("rng", "index() over an empty range");
    // unbiased rejection sampling
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return static_cast<std::size_t>(v % n);
}

Rng Rng::substream(std::uint64_t key) const {
    return Rng(splitmix64(seed_ ^ splitmix64(key + 0x632BE59BD9B4E019ULL)));
}

Rng Rng::substream(std::uint64_t key_a, std::uint64_t key_b) const {
    return substream(key_a).substream(key_b);
}

UserSet generate_users(const Scenario& s, Rng& rng) {
    UserSet users;
    users.positions.reserve(static_cast<std::size_t>(s.num_users));
    for (int n = 0; n < s.num_users; ++n) {
        const double x = rng.uniform(0.0, s.area_x);
        const double y = rng.uniform(0.0, s.area_y);
        users.positions.push_back({x, y});
    }
    return users;
}

std::string Violation::describe() const {
    std::ostringstream os;
    if (kind == Kind::Separation)
        os << "UAVs " << first << " and " << second << " are " << value << " m apart";
    else
        os << "UAV " << first << " flies at " << value << " m";
    return os.str();
}

std::vector<Violation> check_feasible(const Deployment& d, const Scenario& s) {
    std::vector<Violation> out;
    const int m = static_cast<int>(d.size());
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            const double dist = distance(d.positions[a], d.positions[b]);
            if (!(dist >= s.d_min_m)) out.push_back({Violation::Kind::Separation, a, b, dist});
        }
    for (int a = 0; a < m; ++a) {
        const double z = d.positions[a].z;
        if (!(z >= s.h_min_m)) out.push_back({Violation::Kind::Altitude, a, -1, z});
    }
    return out;
}

}  // namespace isac
