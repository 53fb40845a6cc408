// kitepower: closed-loop pumping-cycle simulation, cycle optimization and
// winch-law fitting from the command line.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "kitepower/config.hpp"
#include "kitepower/error.hpp"
#include "kitepower/optimizer.hpp"
#include "kitepower/simulation.hpp"
#include "kitepower/telemetry.hpp"

namespace fs = std::filesystem;
using namespace kitepower;

namespace {

struct Overrides {
    std::optional<double> dt;
    std::optional<double> duration;
    std::optional<std::uint64_t> seed;
};

SimConfig load(const std::string& path, const Overrides& o) {
    SimConfig cfg = load_config(path);
    if (o.dt) cfg.dt = *o.dt;
    if (o.duration) cfg.duration = *o.duration;
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    return cfg;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

int cmd_simulate(const std::string& config, const fs::path& out_dir, const Overrides& o) {
    const SimConfig cfg = load(config, o);
    ensure_dir(out_dir);
    io::TelemetryWriter writer(out_dir / cfg.telemetry_file);
    SimulationHooks hooks;
    hooks.on_record = [&writer](const TelemetryRecord& r) { writer.write(r); };
    const SimulationResult result = run_simulation(cfg, hooks);
    writer.flush();
    io::write_file(out_dir / cfg.report_file, io::cycle_reports_json(result.cycles));

    std::printf("steps %zu, complete cycles %zu\n", result.telemetry.size(), result.cycles.size());
    for (const auto& c : result.cycles) {
        std::printf("cycle %d: T %.1f s, W_out %.0f J, W_in %.0f J, P_bar %.0f W\n", c.cycle_index, c.T, c.W_out,
                    c.W_in, c.P_bar_cycle);
    }
    if (!result.completed()) {
        std::fprintf(stderr, "simulation aborted: %s\n", result.abort_message.c_str());
        return 2;
    }
    return 0;
}

int cmd_optimize(const std::string& config, const fs::path& out_dir, const Overrides& o, bool serial) {
    const SimConfig cfg = load(config, o);
    ensure_dir(out_dir);
    optimizer::OptimizeOptions opts;
    opts.nodes = cfg.optimizer_nodes;
    opts.max_iterations = cfg.optimizer_max_iterations;
    opts.parallel = !serial;
    const auto cycle = optimizer::optimize_cycle(cfg.optimizer, cfg.wind, cfg.kite, std::nullopt, opts);
    const double p_loyd = optimizer::loyd_limit(cfg.wind, cfg.kite);

    std::ofstream csv(out_dir / "optimal_cycle.csv");
    if (!csv) throw Error(ErrorKind::Io, "cannot write " + (out_dir / "optimal_cycle.csv").string());
    io::write_cycle(csv, cycle);
    io::write_file(out_dir / "optimal_cycle.json", io::optimizer_summary_json(cycle, p_loyd));

    std::printf("P_bar %.1f W, P_bar/P_Loyd %.4f, T %.2f s, iterations %d%s\n", cycle.P_bar, cycle.ratio, cycle.T,
                cycle.iterations, cycle.converged ? "" : " (not converged)");
    if (!cycle.converged) {
        std::fprintf(stderr, "%s: optimizer stopped at the iteration limit; best point written\n",
                     to_string(ErrorKind::NonConvergence));
        return 3;
    }
    return 0;
}

int cmd_fit(const fs::path& csv_path, double v_w) {
    const std::string text = io::read_file(csv_path);
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    in.clear();
    in.seekg(0);

    optimizer::WinchLawFit fit;
    const optimizer::OptimizerConstraints limits;
    if (header.find("v_winch_actual") != std::string::npos) {
        // Closed-loop telemetry: the transfer and return samples off the limits.
        const auto records = io::read_telemetry(in);
        std::vector<double> theta, alpha;
        for (const auto& r : records) {
            if (r.phase != guidance::CyclePhase::Transfer && r.phase != guidance::CyclePhase::Return) continue;
            const double a = r.v_winch_actual / v_w;
            if (a <= limits.alpha_limit_in + 1e-3 || a >= limits.alpha_limit_out - 1e-3) continue;
            theta.push_back(r.theta);
            alpha.push_back(a);
        }
        fit = optimizer::fit_linear_law(theta, alpha);
    } else {
        optimizer::OptimalCycle cycle;
        cycle.samples = io::read_cycle(in);
        fit = optimizer::fit_winch_law(cycle, v_w, limits);
    }
    std::printf("theta0 %.6f rad\nslope %.6f\nsamples %zu\n", fit.theta0, fit.slope, fit.samples);
    return 0;
}

int cmd_loyd(const std::string& config) {
    const SimConfig cfg = load_config(config);
    std::printf("%s W\n", io::format_number(optimizer::loyd_limit(cfg.wind, cfg.kite)).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pumping-cycle kite power simulation and optimization"};
    app.require_subcommand(1);

    Overrides overrides;
    std::string config;
    std::string out_dir;
    std::string csv_path;
    double v_w = 10.0;
    bool serial = false;

    auto add_overrides = [&overrides](CLI::App* cmd) {
        cmd->add_option("--dt", overrides.dt, "Time step override (s)");
        cmd->add_option("--duration", overrides.duration, "Duration override (s)");
        cmd->add_option("--seed", overrides.seed, "Sensor-noise seed override");
    };

    auto* simulate = app.add_subcommand("simulate", "Run the closed-loop simulation");
    simulate->add_option("config", config, "Config file")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();
    add_overrides(simulate);

    auto* optimize = app.add_subcommand("optimize", "Optimize a pumping cycle on the reduced model");
    optimize->add_option("config", config, "Config file")->required();
    optimize->add_option("--out", out_dir, "Output directory")->required();
    optimize->add_flag("--serial", serial, "Use the serial gradient kernel");
    add_overrides(optimize);

    auto* fit = app.add_subcommand("fit-winch-law", "Fit the transfer/return winch law to a cycle or telemetry CSV");
    fit->add_option("csv", csv_path, "Optimal-cycle or telemetry CSV")->required();
    fit->add_option("--v-w", v_w, "Wind speed used to normalize l_dot (m/s)")->capture_default_str();

    auto* loyd = app.add_subcommand("loyd", "Print the Loyd limit for a config");
    loyd->add_option("config", config, "Config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(config, out_dir, overrides);
        if (*optimize) return cmd_optimize(config, out_dir, overrides, serial);
        if (*fit) return cmd_fit(csv_path, v_w);
        if (*loyd) return cmd_loyd(config);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
