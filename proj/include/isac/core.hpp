#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

// Thrown for every contract violation inside the library. `kind` is a short
// machine-readable tag that the CLI copies into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct Point3 {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    friend bool operator==(const Point3&, const Point3&) = default;
};

struct Point2 {
    double x{0.0};
    double y{0.0};

    Point3 on_ground() const { return {x, y, 0.0}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point3& a, const Point3& b);

/**
 * All physical, protocol and normalization constants of one deployment
 * problem. Defaults reproduce the published parameter set; `k_p` = 30 is
 * the localization capacity.
 */
struct Scenario {
    // geometry
    double area_x{5000.0};
    double area_y{5000.0};
    int num_uavs{5};
    int num_users{30};

    // air-to-ground channel
    double f_hz{1.4e9};
    double d0_m{1.0};
    double c_mps{3.0e8};
    double eta{5.0};              // path-loss exponent
    double sigma_shadow_db{6.0};
    double slant_a{0.25};
    double slant_c{0.39};
    double slant_e{0.25};
    double slant_g{0.0};
    double slant_h{0.05};
    double foliage_depth_m{30.0};
    double psi_dbm{-140.0};       // noise power

    // UAV resources
    double p_max_w{3.0};
    double b_max_hz{1.0e6};
    double gamma_c_db{3.0};
    double gamma_p_db{1.0};
    int k_c{10};
    int k_p{30};

    // placement constraints
    double h_min_m{50.0};
    double h_max_m{500.0};
    double d_min_m{100.0};

    // utility
    double rho_max{20.0};
    double lambda_w{0.5};
    double r_norm_max{0.0};       // <= 0 selects b_max * log2(1 + 10^3)
    double g_norm_min{1.0};

    /// Throws isac::Error("scenario", ...) naming the first broken invariant.
    void validate() const;

    /// Throughput normalization ceiling actually used (resolves the 0 default).
    double throughput_ceiling() const;
};

// Flat `key = value` text format, one field per line, `#` comments.
Scenario read_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);
void write_scenario(std::ostream& out, const Scenario& s);

/// Config keys in file order; each maps to one Scenario field.
std::vector<std::string> scenario_keys();
void set_scenario_value(Scenario& s, const std::string& key, const std::string& value);
std::string scenario_value(const Scenario& s, const std::string& key);

struct UserSet {
    std::vector<Point2> positions;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
};

struct Deployment {
    std::vector<Point3> positions;

    std::size_t size() const { return positions.size(); }
    friend bool operator==(const Deployment&, const Deployment&) = default;
};

/**
 * Deterministic, splittable generator.
 *
 * The engine is std::mt19937_64 (its output sequence is fixed by the C++
 * standard) seeded through splitmix64. Real-valued draws are built directly
 * from the 64-bit words so streams are bit-identical on every platform.
 */
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    std::uint64_t operator()() { return engine_(); }
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    double uniform();                           // [0, 1)
    double uniform(double lo, double hi);       // [lo, hi)
    double normal();                            // N(0, 1)
    std::size_t index(std::size_t n);           // [0, n)

    /// Independent child stream; same (seed, key) always gives the same stream.
    Rng substream(std::uint64_t key) const;
    Rng substream(std::uint64_t key_a, std::uint64_t key_b) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_{false};
    double spare_{0.0};
};

std::uint64_t splitmix64(std::uint64_t x);

UserSet generate_users(const Scenario& s, Rng& rng);

struct Violation {
    enum class Kind { Separation, Altitude };
    Kind kind;
    int first;       // UAV index
    int second{-1};  // partner UAV for separation violations
    double value;    // offending distance or altitude

    std::string describe() const;
};

/// Every pair closer than d_min and every UAV below h_min. Empty means feasible.
std::vector<Violation> check_feasible(const Deployment& d, const Scenario& s);

inline bool is_feasible(const Deployment& d, const Scenario& s) {
    return check_feasible(d, s).empty();
}

}  // namespace isac
