#include "kitepower/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kitepower/error.hpp"

namespace kitepower::guidance {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTargetTolerance = 1e-9;

}  // namespace

std::string_view to_string(CyclePhase phase) {
    switch (phase) {
        case CyclePhase::PowerTp1: return "power_tp1";
        case CyclePhase::PowerTp2: return "power_tp2";
        case CyclePhase::Transfer: return "transfer";
        case CyclePhase::Return: return "return";
        case CyclePhase::Restart: return "restart";
    }
    return "unknown";
}

CyclePhase phase_from_string(std::string_view name) {
    for (auto p : {CyclePhase::PowerTp1, CyclePhase::PowerTp2, CyclePhase::Transfer, CyclePhase::Return,
                   CyclePhase::Restart}) {
        if (to_string(p) == name) return p;
    }
    throw Error(ErrorKind::Config, "unknown cycle phase '" + std::string(name) + "'");
}

void CycleConfig::validate() const {
    auto require = [](bool ok, const char* field, const char* rule) {
        if (!ok) throw Error(ErrorKind::Config, std::string("cycle.") + field + " must be " + rule);
    };
    require(sigma > 0.0 && sigma < 0.5, "sigma", "in (0, 0.5)");
    require(l_restart > 0.0, "l_restart", "> 0");
    require(l_restart < l_transfer, "l_restart", "< cycle.l_transfer");
    require(theta_tp1 > 0.0 && theta_tp1 < kPi, "theta_tp1", "in (0, pi)");
    require(restart_margin >= 0.0, "restart_margin", ">= 0");
}

TargetPoint tp1(const CycleConfig& cfg) { return {cfg.phi_tp1, cfg.theta_tp1, TargetId::Tp1}; }
TargetPoint tp2(const CycleConfig& cfg) { return {-cfg.phi_tp1, cfg.theta_tp1, TargetId::Tp2}; }

double target_direction(const SpherePosition& pos, const TargetPoint& tp) {
    const double dphi = pos.phi - tp.phi;
    if (std::abs(model::wrap_angle(dphi)) < kTargetTolerance && std::abs(pos.theta - tp.theta) < kTargetTolerance) {
        throw Error(ErrorKind::SingularAtTarget, "position coincides with the target point");
    }
    const double y = std::sin(dphi);
    const double x = std::cos(pos.theta) * std::cos(-dphi) - std::sin(pos.theta) / std::tan(tp.theta);
    return std::atan2(y, x);
}

double unwrap_course(double gamma_raw, double gamma_prev) {
    const double k = std::round((gamma_prev - gamma_raw) / kTwoPi);
    return gamma_raw + kTwoPi * k;
}

double eight_down_branch(double gamma_raw, double gamma_prev) {
    // Candidates within one turn of gamma_prev; keep those whose sweep
    // crosses an odd multiple of pi and take the shortest.
    const double base = unwrap_course(gamma_raw, gamma_prev);
    double best = base;
    double best_len = -1.0;
    for (int k = -1; k <= 1; ++k) {
        const double cand = base + kTwoPi * k;
        const double lo = std::min(cand, gamma_prev);
        const double hi = std::max(cand, gamma_prev);
        if (hi - lo >= kTwoPi) continue;
        // Smallest odd multiple of pi strictly above lo.
        const double first_odd = (2.0 * std::floor((lo - kPi) / kTwoPi) + 1.0) * kPi;
        const double odd = first_odd > lo ? first_odd : first_odd + kTwoPi;
        if (odd < hi && (best_len < 0.0 || hi - lo < best_len)) {
            best = cand;
            best_len = hi - lo;
        }
    }
    return best;
}

double trigger_metric(const SpherePosition& pos, const TargetPoint& tp) {
    // phi is continuous and may have gone once around the wind axis.
    const double dphi = model::wrap_angle(pos.phi - tp.phi);
    const double dtheta = pos.theta - tp.theta;
    const double s = std::sin(tp.theta);
    return dphi * dphi * s * s + dtheta * dtheta;
}

bool trigger(const SpherePosition& pos, const TargetPoint& tp, double sigma) {
    return trigger_metric(pos, tp) <= sigma * sigma;
}

TargetPoint tp3_position(const SpherePosition& pos, const CycleConfig& cfg) {
    return {cfg.phi_tp3, std::max(kPi / 2.0, pos.theta + cfg.delta_theta_tp3), TargetId::Tp3};
}

TargetPoint active_target(CyclePhase phase, const SpherePosition& pos, const CycleConfig& cfg) {
    switch (phase) {
        case CyclePhase::PowerTp1:
        case CyclePhase::Restart: return tp1(cfg);
        case CyclePhase::PowerTp2: return tp2(cfg);
        case CyclePhase::Transfer:
        case CyclePhase::Return: return tp3_position(pos, cfg);
    }
    return tp1(cfg);
}

std::pair<CyclePhase, TargetPoint> cycle_step(CyclePhase phase, const SpherePosition& pos, double l,
                                              const CycleConfig& cfg) {
    CyclePhase next = phase;
    switch (phase) {
        case CyclePhase::PowerTp1:
            if (trigger(pos, tp1(cfg), cfg.sigma)) {
                next = l >= cfg.l_transfer ? CyclePhase::Transfer : CyclePhase::PowerTp2;
            }
            break;
        case CyclePhase::PowerTp2:
            if (trigger(pos, tp2(cfg), cfg.sigma)) next = CyclePhase::PowerTp1;
            break;
        case CyclePhase::Transfer:
            if (pos.theta >= cfg.theta0) next = CyclePhase::Return;
            break;
        case CyclePhase::Return:
            if (l <= cfg.l_restart) next = CyclePhase::Restart;
            break;
        case CyclePhase::Restart:
            if (trigger(pos, tp1(cfg), cfg.sigma) || pos.theta < cfg.theta0 - cfg.restart_margin) {
                next = CyclePhase::PowerTp1;
            }
            break;
    }
    return {next, active_target(next, pos, cfg)};
}

double curve_radius(double delta_s, const KiteParams& params) { return 1.0 / (params.g_k * delta_s); }

double setpoint_psi(double gamma_s, double theta_m, double l_dot, const WindCondition& wind,
                    const KiteParams& params) {
    const double psi = model::psi_from_gamma(gamma_s, theta_m, l_dot, wind, params);
    return gamma_s + model::wrap_angle(psi - gamma_s);
}

Setpoint setpoint_psi(const SpherePosition& pos, const TargetPoint& tp, double gamma_prev, double l_dot,
                      const WindCondition& wind, const KiteParams& params) {
    Setpoint sp;
    sp.gamma_s = unwrap_course(target_direction(pos, tp), gamma_prev);
    sp.psi_s = setpoint_psi(sp.gamma_s, pos.theta, l_dot, wind, params);
    return sp;
}

double CourseTracker::update(double gamma_raw, TargetId target) {
    if (!primed_) {
        course_ = gamma_raw;
        primed_ = true;
    } else if (target == target_) {
        course_ = unwrap_course(gamma_raw, course_);
    } else {
        const bool pattern_switch = target != TargetId::Tp3 && target_ != TargetId::Tp3;
        course_ = pattern_switch ? eight_down_branch(gamma_raw, course_) : unwrap_course(gamma_raw, course_);
    }
    target_ = target;
    return course_;
}

}  // namespace kitepower::guidance
