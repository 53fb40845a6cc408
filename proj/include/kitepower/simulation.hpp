// Closed-loop pumping-cycle simulation and per-cycle energy accounting.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kitepower/config.hpp"
#include "kitepower/error.hpp"

namespace kitepower {

struct TelemetryRecord {
    double t = 0.0;
    double phi = 0.0;
    double theta = 0.0;
    double psi = 0.0;
    double l = 0.0;
    double delta = 0.0;
    double v_winch_cmd = 0.0;
    double v_winch_actual = 0.0;
    double v_a = 0.0;
    double gamma_s = 0.0;
    double psi_s = 0.0;
    double psi_c = 0.0;
    guidance::CyclePhase phase = guidance::CyclePhase::PowerTp1;
    double F = 0.0;
    double P_mech = 0.0;  // F * v_winch_actual
};

struct CycleReport {
    int cycle_index = 0;
    double T = 0.0;            // s
    double W_out = 0.0;        // J, >= 0
    double W_in = 0.0;         // J, <= 0
    double P_bar_cycle = 0.0;  // W
    double F_peak = 0.0;       // N
    double v_a_min = 0.0;      // m/s
};

/// Extra signals of one step that are not part of the telemetry schema.
struct ControlTrace {
    double psi_dot_ref = 0.0;     // turn rate the shaped feedforward asks for
    double psi_dot_m = 0.0;       // measured inertial turn rate
    double delta_ff = 0.0;
    double delta_fb = 0.0;
};

struct SimulationResult {
    std::vector<TelemetryRecord> telemetry;
    std::vector<CycleReport> cycles;
    /// Set when the run stopped early; telemetry holds everything up to the abort.
    std::optional<ErrorKind> abort_kind;
    std::string abort_message;

    bool completed() const { return !abort_kind.has_value(); }
};

struct SimulationHooks {
    /// Called for every record as it is produced.
    std::function<void(const TelemetryRecord&)> on_record;
    std::function<void(const TelemetryRecord&, const ControlTrace&)> on_trace;
};

/// Fixed-step closed loop: measure, cycle state machine, course and
/// orientation set value, outer and inner loop, winch law by phase, winch
/// drive, force limit, RK4 step. Deterministic for a given config.
/// Stall (v_a below the gain-inversion floor) and degenerate geometry end
/// the run and are reported in the result rather than thrown.
SimulationResult run_simulation(const SimConfig& cfg, const SimulationHooks& hooks = {});

/// Splits telemetry at Restart -> Power transitions; the partial stretches
/// before the first and after the last transition are dropped. Throws
/// NoCompleteCycle when fewer than two transitions are present.
std::vector<CycleReport> energy_accounting(std::span<const TelemetryRecord> telemetry);

}  // namespace kitepower
