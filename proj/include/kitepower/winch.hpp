// Winch speed set-value laws for the cycle phases, the winch drive model and
// the tether force limit.
#pragma once

#include <deque>

#include "kitepower/model.hpp"

namespace kitepower::winch {

struct WinchConfig {
    double a = 3.5;                   // power-phase reel-out factor
    double theta0 = 1.05;             // rad, transfer/return law pivot
    double a_lower = -0.55;           // slope for theta <= theta0
    double a_upper = -0.65;           // slope for theta > theta0
    double alpha_limit_in = -0.5;     // normalized reel-in limit
    double alpha_limit_out = 0.3;     // normalized reel-out limit
    double v_min_restart_factor = 1.5;  // restart airspeed floor in units of v_w
    double l_dot_max = 6.0;           // m/s
    double l_ddot_max = 3.0;          // m/s^2
    double tau = 0.1;                 // s, command delay
    double lowpass_tau = 0.2;         // s, drive response
    double F_max = 25000.0;           // N
    double force_gain = 2e-4;         // m/s per N above F_max

    void validate() const;
};

/// l_dot_s = v_a / ((a - 1) E); closed with v_a = E (v_w' cos(theta) - l_dot)
/// this settles at v_w' cos(theta) / a.
double power_phase_speed(double v_a, const WinchConfig& cfg, const KiteParams& params);

/// v_w clamp(slope (theta - theta0), alpha_in, alpha_out), slope a_lower
/// below the pivot and a_upper above it.
double transfer_return_speed(double theta_m, double v_w, const WinchConfig& cfg);

/// Transfer law with reel-in reduced so that v_a stays above
/// v_min_restart_factor * v_w.
double restart_speed(double theta_m, double v_w, const WinchConfig& cfg, const KiteParams& params);

/// Biases the speed toward reel-out while F exceeds F_max, capped at l_dot_max.
double force_limit_override(double force, double l_dot_cmd, const WinchConfig& cfg);

/// Drive model: transport delay, first-order lag, acceleration limit,
/// speed limit. Commands are expected once per fixed step dt.
class WinchState {
public:
    WinchState(const WinchConfig& cfg, double dt, double initial_speed = 0.0);

    double step(double command);
    double speed() const { return speed_; }
    /// Overrides the current speed (used by the force limit, which acts
    /// through the converter current loop and bypasses the drive lag).
    void force_speed(double speed);

private:
    WinchConfig cfg_;
    double dt_;
    std::deque<double> pipeline_;
    double filtered_;
    double speed_;
};

}  // namespace kitepower::winch
