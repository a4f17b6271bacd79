#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "isac/core.hpp"
#include "isac/optimizer.hpp"

namespace isac {

/// One (users, optimized deployment) training pair.
struct Sample {
    int episode{0};
    std::uint64_t seed{0};
    UserSet users;
    Deployment uavs;  // canonical order
    double fitness{0.0};
};

/**
 * L x L user-density image. Row index i follows x, column index j follows y;
 * cell (i, j) covers [i * area_x / L, (i + 1) * area_x / L) x [j * area_y / L, ...).
 */
class RasterGrid {
public:
    RasterGrid(int size, double xi) : size_(size), xi_(xi), cells_(static_cast<std::size_t>(size) * size, 0.0) {}

    int size() const { return size_; }
    double xi() const { return xi_; }
    double at(int i, int j) const { return cells_[static_cast<std::size_t>(i) * size_ + j]; }
    double& at(int i, int j) { return cells_[static_cast<std::size_t>(i) * size_ + j]; }
    const std::vector<double>& cells() const { return cells_; }
    double max_value() const;

private:
    int size_;
    double xi_;
    std::vector<double> cells_;
};

/// Grid cell of a ground position, clamped to the grid.
std::array<int, 2> cell_of(const Point2& p, const Scenario& s, int grid);

/// Each cell holds max_n exp(-((i - i_n)^2 + (j - j_n)^2) / (2 xi^2)).
RasterGrid rasterize(const UserSet& users, const Scenario& s, int grid = 64, double xi = 2.0);
RasterGrid rasterize_serial(const UserSet& users, const Scenario& s, int grid = 64, double xi = 2.0);

/// UAVs sorted ascending by (x, y, z).
Deployment canonical_order(Deployment d);

// JSON Lines: {"episode": int, "seed": int, "users": [[x,y]...], "uavs": [[x,y,z]...], "fitness": float}
std::string to_json_line(const Sample& sample);
Sample parse_json_line(const std::string& line);
std::vector<Sample> read_dataset(std::istream& in);
std::vector<Sample> load_dataset(const std::string& path);

struct DatasetConfig {
    int episodes{1};
    std::uint64_t seed{1};
    SwarmConfig swarm{};
    int workers{1};
};

/// Single Algorithm-1 episode: draw users, run the optimizer, keep g.
Sample run_episode(const Scenario& s, const SwarmConfig& swarm, std::uint64_t master_seed, int episode);

/// Writes `cfg.episodes` JSON lines to `out` in episode order. Output bytes
/// do not depend on `cfg.workers`.
void build_dataset(const Scenario& s, const DatasetConfig& cfg, std::ostream& out);

}  // namespace isac
