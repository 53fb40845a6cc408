// Target-point guidance on the unit sphere and the pumping-cycle state machine.
#pragma once

#include <string_view>
#include <utility>

#include "kitepower/model.hpp"

namespace kitepower::guidance {

enum class TargetId { Tp1, Tp2, Tp3 };

struct TargetPoint {
    double phi = 0.0;
    double theta = 1.0;
    TargetId id = TargetId::Tp1;
};

/// Measured position on the unit sphere.
struct SpherePosition {
    double phi = 0.0;
    double theta = 1.0;
};

enum class CyclePhase {
    PowerTp1,
    PowerTp2,
    Transfer,
    Return,
    Restart,
};

std::string_view to_string(CyclePhase phase);
/// Inverse of to_string; throws Error(Config) on unknown names.
CyclePhase phase_from_string(std::string_view name);

inline bool is_power(CyclePhase p) { return p == CyclePhase::PowerTp1 || p == CyclePhase::PowerTp2; }

struct CycleConfig {
    double phi_tp1 = 0.6;            // TP2 mirrors TP1: phi_tp2 = -phi_tp1
    double theta_tp1 = 1.0;
    double sigma = 0.15;             // trigger radius, rad
    double l_transfer = 270.0;       // m
    double l_restart = 130.0;        // m
    double delta_theta_tp3 = 0.3;    // rad
    double phi_tp3 = 0.4;            // rad
    double theta0 = 1.05;            // winch-law pivot, marks Transfer -> Return
    double restart_margin = 0.1;     // Restart ends below theta0 - margin

    void validate() const;
};

TargetPoint tp1(const CycleConfig& cfg);
TargetPoint tp2(const CycleConfig& cfg);

/// Great-circle course from the current position to the target point.
/// Throws SingularAtTarget when the position coincides with the target.
double target_direction(const SpherePosition& pos, const TargetPoint& tp);

/// gamma_raw + 2 pi k with |result - gamma_prev| <= pi.
double unwrap_course(double gamma_raw, double gamma_prev);

/// Branch for a course step at a TP1 <-> TP2 switch: the curve from
/// gamma_prev to the returned value passes through the downward direction
/// (gamma = pi mod 2 pi), which yields figure-eight-down patterns.
double eight_down_branch(double gamma_raw, double gamma_prev);

/// Angular-distance trigger around a target point.
bool trigger(const SpherePosition& pos, const TargetPoint& tp, double sigma);

/// Squared trigger metric (phi - phi_tp)^2 sin^2(theta_tp) + (theta - theta_tp)^2.
double trigger_metric(const SpherePosition& pos, const TargetPoint& tp);

/// Transfer/return target; its elevation follows the kite so it is never reached.
TargetPoint tp3_position(const SpherePosition& pos, const CycleConfig& cfg);

/// Target point steered to in a phase.
TargetPoint active_target(CyclePhase phase, const SpherePosition& pos, const CycleConfig& cfg);

/// Advances the cycle state machine by at most one edge.
std::pair<CyclePhase, TargetPoint> cycle_step(CyclePhase phase, const SpherePosition& pos, double l,
                                              const CycleConfig& cfg);

/// Nominal curve radius 1/(g_k delta_s).
double curve_radius(double delta_s, const KiteParams& params);

/// Orientation set value for an (unwrapped) course, kept on the same 2 pi
/// branch as the course. Strict: propagates NoSolution.
double setpoint_psi(double gamma_s, double theta_m, double l_dot, const WindCondition& wind,
                    const KiteParams& params);

struct Setpoint {
    double gamma_s = 0.0;
    double psi_s = 0.0;
};

/// target_direction -> unwrap_course -> psi_from_gamma.
Setpoint setpoint_psi(const SpherePosition& pos, const TargetPoint& tp, double gamma_prev,
                      double l_dot, const WindCondition& wind, const KiteParams& params);

/// Keeps the course continuous over time and across target switches.
/// Same-target updates use unwrap_course; TP1 <-> TP2 switches use
/// eight_down_branch; every other switch takes the nearest branch.
class CourseTracker {
public:
    /// Returns the unwrapped course for the raw course to `target`.
    double update(double gamma_raw, TargetId target);
    bool primed() const { return primed_; }
    double course() const { return course_; }
    void reset() { primed_ = false; }

private:
    bool primed_ = false;
    double course_ = 0.0;
    TargetId target_ = TargetId::Tp1;
};

}  // namespace kitepower::guidance
