// Cascaded flight controller: inner turn-rate loop with 1/K gain inversion and
// outer orientation loop whose feedforward shapes set-value steps into
// time-optimal curves under the control pod's deflection and rate limits.
#pragma once

#include <optional>

#include "kitepower/model.hpp"

namespace kitepower::control {

/// Below this air path speed the gain inversion 1/K is not attempted.
inline constexpr double kAirspeedFloor = 1.0;  // m/s

/// Control pod: deflection limit followed by a rate limit.
class ActuatorModel {
public:
    ActuatorModel(double delta_s, double delta_dot_p, double initial = 0.0);

    /// Applies the limiter and rate limiter and returns the new deflection.
    double step(double command, double dt);
    double deflection() const { return deflection_; }
    void reset(double value) { deflection_ = value; }
    /// True when the last step was cut by either limit.
    bool saturated() const { return saturated_; }

    double delta_s() const { return delta_s_; }
    double delta_dot_p() const { return delta_dot_p_; }

private:
    double delta_s_;
    double delta_dot_p_;
    double deflection_;
    bool saturated_ = false;
};

/// First order exponential smoothing. tau <= 0 passes the input through.
class LowPass {
public:
    explicit LowPass(double tau = 0.0) : tau_(tau) {}
    double step(double x, double dt);
    double value() const { return y_; }
    void reset() { primed_ = false; y_ = 0.0; }

private:
    double tau_;
    double y_ = 0.0;
    bool primed_ = false;
};

/// K = g_k v_a. Throws LowAirspeed below kAirspeedFloor.
double k_psidot(double v_a, const KiteParams& params);

/// Braking-parabola feedback of the shaping loop, in deflection units:
/// sign(x) sqrt(2 delta_dot_p |x| / K) + rate_offset / K, where
/// rate_offset = psi_dot_s - psi_dot_ct_star.
double f_scaling(double x, double delta_dot_p, double K, double rate_offset = 0.0);

/// Gravity-frame attitude feeding the optional T1 compensation.
struct GravityAttitude {
    double theta_g = 0.0;
    double psi_g = 0.0;
};

struct InnerLoopConfig {
    double kp = 0.5;
    double ki = 0.2;                  // 1/s
    double lowpass_tau = 0.1;         // s
    double error_limit = 0.5;         // rad/s
    bool gravity_compensation = false;
};

struct InnerLoopOutput {
    double delta = 0.0;               // emitted deflection
    double delta_ff = 0.0;            // shaped feedforward
    double delta_fb = 0.0;            // feedback contribution
    double psi_dot_ref = 0.0;         // turn rate the shaped feedforward should produce
    bool stall = false;
};

/// Turn-rate controller. Feedforward psi_dot_s'/K - T1 shaped by the pod
/// limits, PI feedback on the difference between the shaped reference rate
/// and the measured inertial turn rate, scaled by 1/K.
class InnerLoopController {
public:
    InnerLoopController(const InnerLoopConfig& cfg, const KiteParams& params);

    InnerLoopOutput step(double psi_dot_s_prime, double psi_dot_m_prime, double v_a,
                         const std::optional<GravityAttitude>& gravity, double dt);

    double integrator() const { return integral_; }
    const ActuatorModel& actuator() const { return output_; }

private:
    InnerLoopConfig cfg_;
    KiteParams params_;
    ActuatorModel ff_shaper_;
    ActuatorModel output_;
    LowPass filter_;
    double integral_ = 0.0;
};

enum class CrosstermMode {
    StepInput,    // psi_dot_ct_star = psi_dot_ct
    TargetPoint,  // psi_dot_ct_star = 0
};

struct OuterLoopConfig {
    double kp = 0.8;            // 1/s
    double lowpass_tau = 0.2;   // s
    double error_limit = 0.5;   // rad
    CrosstermMode mode = CrosstermMode::TargetPoint;
};

struct OuterLoopOutput {
    double psi_dot_s_prime = 0.0;
    double psi_c = 0.0;         // shaped reference orientation at the start of the step
    double delta_ff = 0.0;      // internal pod model deflection
    double psi_dot_ff = 0.0;
    double feedback = 0.0;
    bool stall = false;
};

/// Orientation controller. The feedforward runs an internal model of the
/// pod and plant: psi_c integrates K delta_ff + psi_dot_ct, delta_ff is
/// f_scaling(psi_s - psi_c) passed through the pod limits. A proportional
/// feedback on psi_c - psi_m corrects the remaining error.
class OuterLoopController {
public:
    OuterLoopController(const OuterLoopConfig& cfg, const KiteParams& params);

    OuterLoopOutput step(double psi_s, double psi_m, double psi_dot_ct, double psi_dot_s, double v_a,
                         double dt);

    /// Re-seeds psi_c, e.g. at start-up.
    void reset(double psi_c);
    double psi_c() const { return psi_c_; }

private:
    OuterLoopConfig cfg_;
    KiteParams params_;
    ActuatorModel pod_;
    LowPass filter_;
    double psi_c_ = 0.0;
    bool primed_ = false;
};

}  // namespace kitepower::control
