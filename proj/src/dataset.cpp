#include "isac/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isac {

using nlohmann::json;

double RasterGrid::max_value() const {
    return cells_.empty() ? 0.0 : *std::max_element(cells_.begin(), cells_.end());
}

std::array<int, 2> cell_of(const Point2& p, const Scenario& s, int grid) {
    const auto index = [grid](double v, double extent) {
        const int i = static_cast<int>(std::floor(v / (extent / grid)));
        return std::clamp(i, 0, grid - 1);
    };
    return {index(p.x, s.area_x), index(p.y, s.area_y)};
}

namespace {

void check_raster_args(int grid, double xi) {
    if (grid < 2) throw Error("raster", "grid size must be at least 2");
    if (!(xi > 0.0)) throw Error("raster", "gaussian std must be positive");
}

std::vector<std::array<int, 2>> user_cells(const UserSet& users, const Scenario& s, int grid) {
    std::vector<std::array<int, 2>> cells;
    cells.reserve(users.size());
    for (const auto& p : users.positions) cells.push_back(cell_of(p, s, grid));
    return cells;
}

}  // namespace

RasterGrid rasterize_serial(const UserSet& users, const Scenario& s, int grid, double xi) {
    check_raster_args(grid, xi);
    RasterGrid r(grid, xi);
    const double denom = -2.0 * xi * xi;
    for (const auto& [ui, uj] : user_cells(users, s, grid))
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                const double di = i - ui, dj = j - uj;
                r.at(i, j) = std::max(r.at(i, j), std::exp((di * di + dj * dj) / denom));
            }
    return r;
}

RasterGrid rasterize(const UserSet& users, const Scenario& s, int grid, double xi) {
    check_raster_args(grid, xi);
    RasterGrid r(grid, xi);
    const double denom = -2.0 * xi * xi;
    const auto cells = user_cells(users, s, grid);
    const std::size_t count = cells.size();
    // rows are independent; max over users is order-free
#pragma omp parallel for schedule(static)
    for (int i = 0; i < grid; ++i) {
        for (std::size_t n = 0; n < count; ++n) {
            const double di = i - cells[n][0];
            const double row = di * di;
            for (int j = 0; j < grid; ++j) {
                const double dj = j - cells[n][1];
                const double v = std::exp((row + dj * dj) / denom);
                double& c = r.at(i, j);
                if (v > c) c = v;
            }
        }
    }
    return r;
}

Deployment canonical_order(Deployment d) {
    std::sort(d.positions.begin(), d.positions.end(), [](const Point3& a, const Point3& b) {
        return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
    });
    return d;
}

std::string to_json_line(const Sample& sample) {
    json users = json::array();
    for (const auto& p : sample.users.positions) users.push_back({p.x, p.y});
    json uavs = json::array();
    for (const auto& p : sample.uavs.positions) uavs.push_back({p.x, p.y, p.z});
    json j;
    j["episode"] = sample.episode;
    j["seed"] = sample.seed;
    j["users"] = std::move(users);
    j["uavs"] = std::move(uavs);
    j["fitness"] = sample.fitness;
    return j.dump();
}

Sample parse_json_line(const std::string& line) {
    Sample s;
    try {
        const json j = json::parse(line);
        s.episode = j.at("episode").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& u : j.at("users")) s.users.positions.push_back({u.at(0).get<double>(), u.at(1).get<double>()});
        for (const auto& u : j.at("uavs"))
            s.uavs.positions.push_back({u.at(0).get<double>(), u.at(1).get<double>(), u.at(2).get<double>()});
        s.fitness = j.at("fitness").get<double>();
    } catch (const json::exception& e) {
        throw Error("dataset", std::string("malformed sample: ") + e.what());
    }
    return s;
}

std::vector<Sample> read_dataset(std::istream& in) {
    std::vector<Sample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_json_line(line));
        } catch (const Error& e) {
            throw Error("dataset", "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Sample> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open dataset " + path);
    return read_dataset(in);
}

Sample run_episode(const Scenario& s, const SwarmConfig& swarm, std::uint64_t master_seed, int episode) {
    const Rng master(master_seed);
    const Rng episode_rng = master.substream(static_cast<std::uint64_t>(episode));
    Rng user_rng = episode_rng.substream(1);
    Sample sample;
    sample.episode = episode;
    sample.seed = episode_rng.seed();
    sample.users = generate_users(s, user_rng);
    const SwarmResult r = optimize(sample.users, s, swarm, episode_rng.substream(2));
    sample.uavs = canonical_order(r.best);
    sample.fitness = r.best_fitness.value;
    if (!is_feasible(sample.uavs, s))
        throw Error("dataset", "episode " + std::to_string(episode) + " produced an infeasible deployment");
    return sample;
}

void build_dataset(const Scenario& s, const DatasetConfig& cfg, std::ostream& out) {
    if (cfg.episodes < 1) throw Error("usage", "dataset needs at least one episode");
    const int workers = std::max(cfg.workers, 1);
    SwarmConfig swarm = cfg.swarm;
    if (workers > 1) swarm.parallel = false;  // parallelism moves to the episode level

    // chunks keep memory bounded while preserving episode order in the file
    const int chunk = std::max(4 * workers, 16);
    for (int first = 0; first < cfg.episodes; first += chunk) {
        const int last = std::min(first + chunk, cfg.episodes);
        std::vector<std::string> lines(static_cast<std::size_t>(last - first));
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
        for (int k = first; k < last; ++k) {
            try {
                lines[k - first] = to_json_line(run_episode(s, swarm, cfg.seed, k));
            } catch (...) {
#pragma omp critical(isac_dataset_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        for (int k = first; k < last; ++k) {
            out << lines[k - first] << '\n';
            if (!out) throw Error("io", "write failed at episode " + std::to_string(k));
        }
    }
    out.flush();
}

}  // namespace isac
