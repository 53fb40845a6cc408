// Simulation configuration and its flat `section.key = value` text format.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kitepower/flight_control.hpp"
#include "kitepower/guidance.hpp"
#include "kitepower/model.hpp"
#include "kitepower/optimizer.hpp"
#include "kitepower/winch.hpp"

namespace kitepower {

struct GustBreakpoint {
    double t = 0.0;    // s
    double v_w = 0.0;  // m/s
};

/// Piecewise-linear wind speed over time, held constant outside the
/// breakpoints. Empty means the constant base wind.
struct GustProfile {
    std::vector<GustBreakpoint> points;

    double wind_at(double t, double base) const;
};

/// Standard deviations of additive Gaussian measurement noise. All zero
/// means ideal sensors.
struct SensorNoise {
    double phi = 0.0;        // rad
    double theta = 0.0;      // rad
    double psi = 0.0;        // rad
    double psi_dot = 0.0;    // rad/s
    double l = 0.0;          // m

    bool active() const { return phi > 0.0 || theta > 0.0 || psi > 0.0 || psi_dot > 0.0 || l > 0.0; }
};

struct SimConfig {
    KiteParams kite;
    WindCondition wind;
    GustProfile gust;
    guidance::CycleConfig cycle;
    winch::WinchConfig winch;
    control::InnerLoopConfig inner;
    control::OuterLoopConfig outer;
    optimizer::OptimizerConstraints optimizer;
    std::size_t optimizer_nodes = 40;
    int optimizer_max_iterations = 4000;
    SensorNoise noise;
    KiteState initial{0.0, 0.9, 1.2, 150.0};
    double dt = 0.01;        // s
    double duration = 600.0; // s
    std::uint64_t seed = 0;
    std::string telemetry_file = "telemetry.csv";
    std::string report_file = "cycles.json";

    /// Throws Error(Config) naming the offending field.
    void validate() const;
};

/// Parses the config text. `source` is used in diagnostics.
/// Blank lines and `#` comments are ignored; unknown keys, duplicate keys,
/// malformed values and missing required keys are errors.
SimConfig parse_config(std::string_view text, const std::string& source = "<config>");

/// Reads and parses a config file; throws Error(Io) when it cannot be read.
SimConfig load_config(const std::filesystem::path& path);

}  // namespace kitepower
