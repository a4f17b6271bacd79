// isac: command-line front end for the deployment toolkit.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isac/dataset.hpp"
#include "isac/inference.hpp"
#include "isac/json_io.hpp"
#include "isac/metrics.hpp"
#include "isac/optimizer.hpp"

namespace {

using nlohmann::json;
using namespace isac;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Stream keys so subcommands draw from unrelated substreams of --seed.
constexpr std::uint64_t kUsersStream = 101;
constexpr std::uint64_t kSolveStream = 102;
constexpr std::uint64_t kRepairStream = 103;

struct Options {
    std::string config;
    std::uint64_t seed{1};
    std::string shadowing{"expected"};
    std::map<std::string, std::string> scenario_overrides;

    // swarm
    std::string algo{"dpso"};
    SwarmConfig swarm;
    std::string learning_form{"normalized"};

    // paths
    std::string users;
    std::string deployment;
    std::string weights;
    std::string dataset;
    std::string out{"-"};
    std::string curve;

    int episodes{500};
    int workers{1};
    int grid{64};
    double xi{2.0};
    std::string format{"csv"};
    bool evaluate{false};
    bool repair{true};
    std::string algos;  // empty: kmeans,pso,dpso (+cnn with --weights)
    int limit{0};
};

Scenario build_scenario(const Options& o) {
    Scenario s = o.config.empty() ? Scenario{} : load_scenario(o.config);
    for (const auto& [key, value] : o.scenario_overrides) set_scenario_value(s, key, value);
    s.validate();
    return s;
}

ShadowingMode shadowing_mode(const Options& o) {
    return o.shadowing == "sampled" ? ShadowingMode::Sampled : ShadowingMode::Expected;
}

ShadowingField shadowing_field(const Options& o, const Scenario& s, std::size_t users) {
    if (shadowing_mode(o) == ShadowingMode::Expected) return {};
    Rng rng = Rng(o.seed).substream(kSolveStream).substream(0x5AD0);
    return ShadowingField::sample(s.num_uavs, static_cast<int>(users), s.sigma_shadow_db, rng);
}

SwarmConfig swarm_config(const Options& o) {
    SwarmConfig c = o.swarm;
    c.variant = parse_variant(o.algo);
    c.learning_form = o.learning_form == "literal" ? LearningForm::Literal : LearningForm::Normalized;
    c.shadowing = shadowing_mode(o);
    c.validate();
    return c;
}

UserSet users_for(const Options& o, const Scenario& s) {
    if (!o.users.empty()) return load_users(o.users);
    Rng rng = Rng(o.seed).substream(kUsersStream);
    return generate_users(s, rng);
}

// Output sink: "-" is stdout.
class Sink {
public:
    explicit Sink(const std::string& path, bool binary = false) {
        if (path == "-") return;
        file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
        if (!*file_) throw Error("io", "cannot write " + path);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    void close() {
        stream().flush();
        if (!stream()) throw Error("io", "write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_json(const std::string& path, const json& j) {
    Sink sink(path);
    sink.stream() << j.dump(2) << '\n';
    sink.close();
}

// ---- subcommands ------------------------------------------------------------

void cmd_gen_dataset(const Options& o) {
    const Scenario s = build_scenario(o);
    DatasetConfig cfg;
    cfg.episodes = o.episodes;
    cfg.seed = o.seed;
    cfg.swarm = swarm_config(o);
    cfg.workers = o.workers;
    Sink sink(o.out);
    build_dataset(s, cfg, sink.stream());
    sink.close();
}

void cmd_optimize(const Options& o) {
    const Scenario s = build_scenario(o);
    const UserSet users = users_for(o, s);
    const SwarmConfig cfg = swarm_config(o);
    const SwarmResult r = optimize(users, s, cfg, Rng(o.seed).substream(kSolveStream));
    json j = {{"algo", to_string(cfg.variant)},
              {"seed", o.seed},
              {"fitness", r.best_fitness.value},
              {"feasible", r.best_fitness.feasible},
              {"uavs", deployment_to_json(r.best)}};
    write_json(o.out, j);
    if (!o.curve.empty()) {
        Sink sink(o.curve);
        auto& os = sink.stream();
        os << "iteration,best_fitness\n" << std::setprecision(17);
        for (std::size_t t = 0; t < r.convergence.size(); ++t) os << t + 1 << ',' << r.convergence[t] << '\n';
        sink.close();
    }
}

void cmd_evaluate(const Options& o) {
    const Scenario s = build_scenario(o);
    const UserSet users = users_for(o, s);
    const Deployment d = load_deployment(o.deployment);
    const EvaluationReport rep = evaluate(d, users, s, shadowing_field(o, s, users.size()));
    write_json(o.out, report_to_json(rep));
}

void cmd_rasterize(const Options& o) {
    const Scenario s = build_scenario(o);
    const UserSet users = users_for(o, s);
    const RasterGrid g = rasterize(users, s, o.grid, o.xi);
    const bool pgm = o.format == "pgm";
    Sink sink(o.out, pgm);
    auto& os = sink.stream();
    if (pgm) {
        os << "P5\n" << g.size() << ' ' << g.size() << "\n255\n";
        for (double v : g.cells()) os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    } else {
        os << std::setprecision(17);
        for (int i = 0; i < g.size(); ++i) {
            for (int j = 0; j < g.size(); ++j) os << (j ? "," : "") << g.at(i, j);
            os << '\n';
        }
    }
    sink.close();
}

void cmd_infer(const Options& o) {
    const Scenario s = build_scenario(o);
    const UserSet users = users_for(o, s);
    const WeightBundle bundle = load_weights(o.weights);
    Rng rng = Rng(o.seed).substream(kRepairStream);
    const InferenceResult r = infer_deployment(users, s, bundle, rng, o.repair);
    json j = {{"uavs", deployment_to_json(r.deployment)},
              {"repaired", r.repaired},
              {"feasible", is_feasible(r.deployment, s)}};
    if (o.evaluate) j["report"] = report_to_json(evaluate(r.deployment, users, s, shadowing_field(o, s, users.size())));
    write_json(o.out, j);
}

std::vector<std::string> split_list(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

struct BenchRow {
    double utility{0.0};
    double seconds{0.0};
    bool feasible{false};
};

void cmd_benchmark(const Options& o) {
    const Scenario base = build_scenario(o);
    std::vector<Sample> samples = load_dataset(o.dataset);
    if (o.limit > 0 && static_cast<std::size_t>(o.limit) < samples.size()) samples.resize(o.limit);
    if (samples.empty()) throw Error("usage", "dataset " + o.dataset + " holds no samples");

    const std::vector<std::string> algos =
        split_list(o.algos.empty() ? (o.weights.empty() ? "kmeans,pso,dpso" : "kmeans,pso,dpso,cnn") : o.algos);
    std::optional<WeightBundle> bundle;
    for (const auto& a : algos) {
        if (a == "cnn") {
            if (o.weights.empty()) throw Error("usage", "algo 'cnn' needs --weights");
            bundle = load_weights(o.weights);
            check_compatible(bundle->header, base);
        } else if (a != "kmeans") {
            parse_variant(a);
        }
    }
    SwarmConfig swarm = swarm_config(o);
    if (o.workers > 1) swarm.parallel = false;

    const int count = static_cast<int>(samples.size());
    std::vector<std::vector<BenchRow>> rows(algos.size(), std::vector<BenchRow>(samples.size()));
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(o.workers, 1))
    for (int k = 0; k < count; ++k) {
        try {
            const UserSet& users = samples[k].users;
            const Rng sample_rng = Rng(o.seed).substream(static_cast<std::uint64_t>(k));
            for (std::size_t a = 0; a < algos.size(); ++a) {
                Rng rng = sample_rng.substream(kSolveStream);
                Deployment d;
                const auto t0 = std::chrono::steady_clock::now();
                if (algos[a] == "kmeans") {
                    d = kmeans_init(users, base.num_uavs, base, rng);
                } else if (algos[a] == "cnn") {
                    d = infer_deployment(users, base, *bundle, rng, o.repair).deployment;
                } else {
                    SwarmConfig cfg = swarm;
                    cfg.variant = parse_variant(algos[a]);
                    d = optimize(users, base, cfg, rng).best;
                }
                const auto t1 = std::chrono::steady_clock::now();
                BenchRow& row = rows[a][k];
                row.seconds = std::chrono::duration<double>(t1 - t0).count();
                row.feasible = is_feasible(d, base);
                row.utility = evaluate(d, users, base).total_utility;
            }
        } catch (...) {
#pragma omp critical(isac_bench_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    Sink sink(o.out);
    auto& os = sink.stream();
    os << "algo,samples,mean_utility,mean_seconds,feasible_fraction\n" << std::setprecision(10);
    for (std::size_t a = 0; a < algos.size(); ++a) {
        double u = 0, t = 0, f = 0;
        for (const auto& r : rows[a]) {
            u += r.utility;
            t += r.seconds;
            f += r.feasible;
        }
        os << algos[a] << ',' << count << ',' << u / count << ',' << t / count << ',' << f / count << '\n';
    }
    sink.close();
}

// ---- flag wiring ------------------------------------------------------------

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "Scenario file (key = value)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Master seed; all randomness derives from it")->capture_default_str();
    cmd->add_option("--shadowing", o.shadowing, "Shadowing: expected (X=0) or sampled (frozen draw)")
        ->check(CLI::IsMember({"expected", "sampled"}))
        ->capture_default_str();
    const Scenario defaults;
    for (const auto& key : scenario_keys()) {
        cmd->add_option_function<std::string>(
               "--" + key, [&o, key](const std::string& v) { o.scenario_overrides[key] = v; },
               "Scenario " + key + " (default " + scenario_value(defaults, key) + ")")
            ->group("Scenario");
    }
}

void add_swarm(CLI::App* cmd, Options& o) {
    auto grp = [](CLI::Option* opt) { return opt->group("Swarm")->capture_default_str(); };
    grp(cmd->add_option("--algo", o.algo, "dpso | pso | dwpso | dcpso"));
    grp(cmd->add_option("--particles", o.swarm.k_particles, "Swarm size"));
    grp(cmd->add_option("--iterations", o.swarm.t_max, "t_max"));
    grp(cmd->add_option("--w-ini", o.swarm.w_ini, "Inertia start"));
    grp(cmd->add_option("--w-end", o.swarm.w_end, "Inertia end"));
    grp(cmd->add_option("--c-ini", o.swarm.c_ini, "Learning factor start"));
    grp(cmd->add_option("--c-end", o.swarm.c_end, "Learning factor end"));
    grp(cmd->add_option("--vmax-fraction", o.swarm.v_max_fraction, "Velocity clamp as a fraction of each axis"));
    grp(cmd->add_option("--static-w", o.swarm.static_w, "Inertia of the static variants"));
    grp(cmd->add_option("--static-c", o.swarm.static_c, "Learning factors of the static variants"));
    grp(cmd->add_option("--learning-form", o.learning_form, "normalized | literal")
            ->check(CLI::IsMember({"normalized", "literal"})));
}

void print_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

int exit_code_for(const std::string& kind) {
    static const std::set<std::string> usage = {"usage", "config", "scenario", "swarm"};
    return usage.count(kind) ? kExitUsage : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ISAC UAV deployment: dataset generation, swarm optimization and CNN inference"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-dataset", "Optimize random user sets and write JSON lines");
    add_common(gen, o);
    add_swarm(gen, o);
    gen->add_option("--episodes", o.episodes, "Number of samples")->capture_default_str();
    gen->add_option("--workers", o.workers, "Episode-level worker threads")->capture_default_str();
    gen->add_option("--out", o.out, "Output JSONL (- for stdout)")->capture_default_str();

    auto* opt = app.add_subcommand("optimize", "Run one swarm optimization");
    add_common(opt, o);
    add_swarm(opt, o);
    opt->add_option("--users", o.users, "Users JSON [[x, y], ...]; drawn from --seed if absent");
    opt->add_option("--out", o.out, "Deployment JSON (- for stdout)")->capture_default_str();
    opt->add_option("--curve", o.curve, "Convergence CSV (iteration,best_fitness)");

    auto* ev = app.add_subcommand("evaluate", "Associate and score a deployment");
    add_common(ev, o);
    ev->add_option("--users", o.users, "Users JSON; drawn from --seed if absent");
    ev->add_option("--deployment", o.deployment, "Deployment JSON")->required();
    ev->add_option("--out", o.out, "Report JSON (- for stdout)")->capture_default_str();

    auto* ras = app.add_subcommand("rasterize", "Gaussian-enhanced user density grid");
    add_common(ras, o);
    ras->add_option("--users", o.users, "Users JSON; drawn from --seed if absent");
    ras->add_option("--grid", o.grid, "Grid size L")->capture_default_str()->check(CLI::PositiveNumber);
    ras->add_option("--xi", o.xi, "Gaussian spread in cells")->capture_default_str()->check(CLI::PositiveNumber);
    ras->add_option("--format", o.format, "csv | pgm")->check(CLI::IsMember({"csv", "pgm"}))->capture_default_str();
    ras->add_option("--out", o.out, "Output file (- for stdout)")->capture_default_str();

    auto* inf = app.add_subcommand("infer", "CNN deployment from a weight bundle");
    add_common(inf, o);
    inf->add_option("--users", o.users, "Users JSON; drawn from --seed if absent");
    inf->add_option("--weights", o.weights, "CNNW weight bundle")->required();
    inf->add_flag("--evaluate", o.evaluate, "Attach the evaluation report");
    inf->add_flag("--repair,!--no-repair", o.repair, "Repair constraint violations (default on)");
    inf->add_option("--out", o.out, "Deployment JSON (- for stdout)")->capture_default_str();

    auto* bench = app.add_subcommand("benchmark", "Mean utility and wall-clock per algorithm over a JSONL set");
    add_common(bench, o);
    add_swarm(bench, o);
    bench->add_option("--dataset", o.dataset, "Held-out JSONL")->required();
    bench->add_option("--algos", o.algos, "Comma list of kmeans, pso, dpso, dwpso, dcpso, cnn [kmeans,pso,dpso + cnn with --weights]");
    bench->add_option("--weights", o.weights, "CNNW bundle (required for cnn)");
    bench->add_flag("--repair,!--no-repair", o.repair, "Repair CNN outputs (default on)");
    bench->add_option("--limit", o.limit, "Use only the first N samples (0 = all)")->capture_default_str();
    bench->add_option("--workers", o.workers, "Sample-level worker threads")->capture_default_str();
    bench->add_option("--out", o.out, "Output CSV (- for stdout)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return kExitUsage;
    }

    try {
        if (*gen) cmd_gen_dataset(o);
        else if (*opt) cmd_optimize(o);
        else if (*ev) cmd_evaluate(o);
        else if (*ras) cmd_rasterize(o);
        else if (*inf) cmd_infer(o);
        else if (*bench) cmd_benchmark(o);
    } catch (const Error& e) {
        print_error(e.kind(), e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return kExitRuntime;
    }
    return 0;
}
