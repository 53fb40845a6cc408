#include "kitepower/flight_control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kitepower/error.hpp"

namespace kitepower::control {

ActuatorModel::ActuatorModel(double delta_s, double delta_dot_p, double initial)
    : delta_s_(delta_s), delta_dot_p_(delta_dot_p), deflection_(std::clamp(initial, -delta_s, delta_s)) {}

double ActuatorModel::step(double command, double dt) {
    const double limited = std::clamp(command, -delta_s_, delta_s_);
    const double max_step = delta_dot_p_ * dt;
    const double change = std::clamp(limited - deflection_, -max_step, max_step);
    saturated_ = limited != command || change != limited - deflection_;
    deflection_ += change;
    // Clamp once more: the rate step can only move inside the range, but keep
    // the invariant exact under rounding.
    deflection_ = std::clamp(deflection_, -delta_s_, delta_s_);
    return deflection_;
}

double LowPass::step(double x, double dt) {
    if (tau_ <= 0.0) {
        y_ = x;
        return y_;
    }
    if (!primed_) {
        y_ = x;
        primed_ = true;
        return y_;
    }
    y_ += (1.0 - std::exp(-dt / tau_)) * (x - y_);
    return y_;
}

double k_psidot(double v_a, const KiteParams& params) {
    if (v_a < kAirspeedFloor) {
        std::ostringstream msg;
        msg << "v_a=" << v_a << " m/s below gain-inversion floor " << kAirspeedFloor << " m/s";
        throw Error(ErrorKind::LowAirspeed, msg.str());
    }
    return params.g_k * v_a;
}

double f_scaling(double x, double delta_dot_p, double K, double rate_offset) {
    const double magnitude = std::sqrt(2.0 * delta_dot_p * std::abs(x) / K);
    const double shaped = x > 0.0 ? magnitude : (x < 0.0 ? -magnitude : 0.0);
    return shaped + rate_offset / K;
}

InnerLoopController::InnerLoopController(const InnerLoopConfig& cfg, const KiteParams& params)
    : cfg_(cfg),
      params_(params),
      ff_shaper_(params.delta_s, params.delta_dot_p),
      output_(params.delta_s, params.delta_dot_p),
      filter_(cfg.lowpass_tau) {}

InnerLoopOutput InnerLoopController::step(double psi_dot_s_prime, double psi_dot_m_prime, double v_a,
                                          const std::optional<GravityAttitude>& gravity, double dt) {
    InnerLoopOutput out;
    if (v_a < kAirspeedFloor) {
        out.delta = output_.deflection();
        out.delta_ff = ff_shaper_.deflection();
        out.stall = true;
        return out;
    }
    const double K = k_psidot(v_a, params_);

    double t1 = 0.0;
    if (cfg_.gravity_compensation && gravity) {
        t1 = params_.M / K * std::cos(gravity->theta_g) * std::sin(gravity->psi_g) / v_a;
    }

    out.delta_ff = ff_shaper_.step(psi_dot_s_prime / K - t1, dt);
    out.psi_dot_ref = K * (out.delta_ff + t1);

    const double error = std::clamp(out.psi_dot_ref - psi_dot_m_prime, -cfg_.error_limit, cfg_.error_limit);
    const double filtered = filter_.step(error, dt);
    const double candidate = integral_ + cfg_.ki * filtered * dt;
    const double u = cfg_.kp * filtered + candidate;
    out.delta_fb = u / K;

    out.delta = output_.step(out.delta_ff + out.delta_fb, dt);

    // Anti-windup: freeze the integrator while the pod is saturated in the
    // direction the integrator would push it.
    const bool pushing_limit = output_.saturated() && (u * out.delta > 0.0);
    if (!pushing_limit) integral_ = candidate;
    return out;
}

OuterLoopController::OuterLoopController(const OuterLoopConfig& cfg, const KiteParams& params)
    : cfg_(cfg), params_(params), pod_(params.delta_s, params.delta_dot_p), filter_(cfg.lowpass_tau) {}

void OuterLoopController::reset(double psi_c) {
    psi_c_ = psi_c;
    primed_ = true;
    pod_.reset(0.0);
    filter_.reset();
}

OuterLoopOutput OuterLoopController::step(double psi_s, double psi_m, double psi_dot_ct, double psi_dot_s,
                                          double v_a, double dt) {
    if (!primed_) reset(psi_m);

    OuterLoopOutput out;
    out.psi_c = psi_c_;
    if (v_a < kAirspeedFloor) {
        out.stall = true;
        out.delta_ff = pod_.deflection();
        return out;
    }
    const double K = k_psidot(v_a, params_);
    const double ct_star = cfg_.mode == CrosstermMode::StepInput ? psi_dot_ct : 0.0;

    const double target = f_scaling(psi_s - psi_c_, params_.delta_dot_p, K, psi_dot_s - ct_star);
    out.delta_ff = pod_.step(target, dt);
    out.psi_dot_ff = K * out.delta_ff;

    const double error = std::clamp(psi_c_ - psi_m, -cfg_.error_limit, cfg_.error_limit);
    out.feedback = cfg_.kp * filter_.step(error, dt);
    out.psi_dot_s_prime = out.psi_dot_ff + out.feedback;

    psi_c_ += (out.psi_dot_ff + psi_dot_ct) * dt;
    return out;
}

}  // namespace kitepower::control
