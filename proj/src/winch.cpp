#include "kitepower/winch.hpp"

#include <algorithm>
#include <cmath>

#include "kitepower/error.hpp"

namespace kitepower::winch {

void WinchConfig::validate() const {
    auto require = [](bool ok, const char* field, const char* rule) {
        if (!ok) throw Error(ErrorKind::Config, std::string("winch.") + field + " must be " + rule);
    };
    require(a > 1.0, "a", "> 1");
    require(alpha_limit_in < 0.0, "alpha_limit_in", "< 0");
    require(alpha_limit_out > 0.0, "alpha_limit_out", "> 0");
    require(v_min_restart_factor >= 0.0, "v_min_restart_factor", ">= 0");
    require(l_dot_max > 0.0, "l_dot_max", "> 0");
    require(l_ddot_max > 0.0, "l_ddot_max", "> 0");
    require(tau >= 0.0, "tau", ">= 0");
    require(lowpass_tau >= 0.0, "lowpass_tau", ">= 0");
    require(F_max > 0.0, "F_max", "> 0");
    require(force_gain >= 0.0, "force_gain", ">= 0");
}

double power_phase_speed(double v_a, const WinchConfig& cfg, const KiteParams& params) {
    return v_a / ((cfg.a - 1.0) * params.E);
}

double transfer_return_speed(double theta_m, double v_w, const WinchConfig& cfg) {
    const double slope = theta_m <= cfg.theta0 ? cfg.a_lower : cfg.a_upper;
    return v_w * std::clamp(slope * (theta_m - cfg.theta0), cfg.alpha_limit_in, cfg.alpha_limit_out);
}

double restart_speed(double theta_m, double v_w, const WinchConfig& cfg, const KiteParams& params) {
    const double airspeed_bound = std::cos(theta_m) * v_w - cfg.v_min_restart_factor * v_w / params.E;
    return std::min(transfer_return_speed(theta_m, v_w, cfg), airspeed_bound);
}

double force_limit_override(double force, double l_dot_cmd, const WinchConfig& cfg) {
    if (force <= cfg.F_max) return l_dot_cmd;
    const double biased = l_dot_cmd + cfg.force_gain * (force - cfg.F_max);
    return std::max(l_dot_cmd, std::min(biased, cfg.l_dot_max));
}

WinchState::WinchState(const WinchConfig& cfg, double dt, double initial_speed)
    : cfg_(cfg), dt_(dt), filtered_(initial_speed), speed_(std::clamp(initial_speed, -cfg.l_dot_max, cfg.l_dot_max)) {
    const auto delay_steps = static_cast<std::size_t>(std::lround(cfg.tau / dt));
    pipeline_.assign(delay_steps, initial_speed);
}

double WinchState::step(double command) {
    pipeline_.push_back(command);
    const double delayed = pipeline_.front();
    pipeline_.pop_front();

    if (cfg_.lowpass_tau > 0.0) {
        filtered_ += (1.0 - std::exp(-dt_ / cfg_.lowpass_tau)) * (delayed - filtered_);
    } else {
        filtered_ = delayed;
    }
    const double max_change = cfg_.l_ddot_max * dt_;
    speed_ += std::clamp(filtered_ - speed_, -max_change, max_change);
    speed_ = std::clamp(speed_, -cfg_.l_dot_max, cfg_.l_dot_max);
    return speed_;
}

void WinchState::force_speed(double speed) { speed_ = std::clamp(speed, -cfg_.l_dot_max, cfg_.l_dot_max); }

}  // namespace kitepower::winch
