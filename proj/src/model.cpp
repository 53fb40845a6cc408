#include "kitepower/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kitepower/error.hpp"

namespace kitepower {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DegenerateGeometry: return "degenerate geometry";
        case ErrorKind::UndefinedDirection: return "undefined direction";
        case ErrorKind::SingularAirflow: return "singular airflow";
        case ErrorKind::NoSolution: return "no solution";
        case ErrorKind::OutOfRange: return "out of range";
        case ErrorKind::LowAirspeed: return "low airspeed";
        case ErrorKind::SingularAtTarget: return "singular at target";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::InsufficientSamples: return "insufficient samples";
        case ErrorKind::NoCompleteCycle: return "no complete cycle";
        case ErrorKind::Stall: return "stall";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

void KiteParams::validate() const {
    auto require = [](bool ok, const char* field, const char* rule) {
        if (!ok) throw Error(ErrorKind::Config, std::string("kite.") + field + " must be " + rule);
    };
    require(E > 0.0, "E", "> 0");
    require(g_k > 0.0, "g_k", "> 0");
    require(A > 0.0, "A", "> 0");
    require(rho > 0.0, "rho", "> 0");
    require(C_R > 0.0, "C_R", "> 0");
    require(v_a_min >= 0.0, "v_a_min", ">= 0");
    require(delta_s > 0.0, "delta_s", "> 0");
    require(delta_dot_p > 0.0, "delta_dot_p", "> 0");
}

namespace model {

namespace {

constexpr double kStaticTolerance = 1e-12;
constexpr double kAirflowTolerance = 1e-9;

void check_geometry(double theta, double l) {
    if (std::sin(theta) <= kThetaGuard || l <= 0.0) {
        std::ostringstream msg;
        msg << "theta=" << theta << " l=" << l << " outside the valid sphere region";
        throw Error(ErrorKind::DegenerateGeometry, msg.str());
    }
}

}  // namespace

std::array<double, 3> position(const KiteState& s) {
    const double st = std::sin(s.theta);
    return {s.l * std::cos(s.theta), s.l * std::sin(s.phi) * st, -s.l * std::cos(s.phi) * st};
}

double air_path_speed(const KiteState& s, double l_dot, const WindCondition& wind,
                      const KiteParams& p) {
    return wind.v_w * p.E * std::cos(s.theta) - l_dot * p.E;
}

StateDerivative derivatives(const KiteState& s, const ControlInput& u, double v_a,
                            const WindCondition& wind, const KiteParams& p) {
    check_geometry(s.theta, s.l);
    const double st = std::sin(s.theta);
    const double ct = std::cos(s.theta);
    const double sp = std::sin(s.psi);
    const double cp = std::cos(s.psi);
    const double l_dot = u.v_winch;

    StateDerivative d;
    d.l_dot = l_dot;
    d.theta_dot = wind.v_w / s.l * (p.E * ct * cp - st) - l_dot / s.l * p.E * cp;
    d.phi_dot = -(wind.v_w * p.E * ct - l_dot * p.E) / (s.l * st) * sp;
    d.psi_dot = p.g_k * v_a * u.delta + d.phi_dot * ct;
    return d;
}

double crossterm(const KiteState& s, double v_a) {
    check_geometry(s.theta, s.l);
    return -v_a / (s.l * std::tan(s.theta)) * std::sin(s.psi);
}

double flight_direction_kinematic(double phi_dot, double theta_dot, double theta) {
    const double east = -phi_dot * std::sin(theta);
    if (std::abs(east) < kStaticTolerance && std::abs(theta_dot) < kStaticTolerance) {
        throw Error(ErrorKind::UndefinedDirection, "kite is static, flight direction undefined");
    }
    return std::atan2(east, theta_dot);
}

double wind_offset(double theta, double l_dot, const WindCondition& wind, const KiteParams& p) {
    const double denom = wind.v_w * std::cos(theta) - l_dot;
    if (std::abs(denom) < kAirflowTolerance) {
        throw Error(ErrorKind::SingularAirflow, "v_w cos(theta) - l_dot vanishes");
    }
    return wind.v_w * std::sin(theta) / (p.E * denom);
}

double gamma_from_psi(double psi, double theta, double l_dot, const WindCondition& wind,
                      const KiteParams& p) {
    const double c1 = wind_offset(theta, l_dot, wind, p);
    return std::atan2(std::sin(psi), std::cos(psi) - c1);
}

namespace {

double invert_direction(double gamma, double c1, bool clamp) {
    const double sg = std::sin(gamma);
    const double cg = std::cos(gamma);
    double radicand = 1.0 - c1 * c1 * sg * sg;
    if (radicand < 0.0) {
        if (!clamp) {
            std::ostringstream msg;
            msg << "direction gamma=" << gamma << " unreachable with wind offset c1=" << c1;
            throw Error(ErrorKind::NoSolution, msg.str());
        }
        radicand = 0.0;
    }
    const double r = std::sqrt(radicand) - c1 * cg;
    return std::atan2(r * sg, c1 + r * cg);
}

}  // namespace

double psi_from_gamma(double gamma, double theta, double l_dot, const WindCondition& wind,
                      const KiteParams& p) {
    return invert_direction(gamma, wind_offset(theta, l_dot, wind, p), false);
}

double psi_from_gamma_clamped(double gamma, double theta, double l_dot, const WindCondition& wind,
                              const KiteParams& p) {
    return invert_direction(gamma, wind_offset(theta, l_dot, wind, p), true);
}

double equilibrium_theta(double psi, double l_dot, const WindCondition& wind, const KiteParams& p) {
    const double cp = std::cos(psi);
    const double arg = cp / std::sqrt(cp * cp + 1.0 / (p.E * p.E)) * l_dot / wind.v_w;
    if (!(std::abs(arg) <= 1.0)) {
        std::ostringstream msg;
        msg << "no equilibrium for l_dot=" << l_dot << " at v_w=" << wind.v_w;
        throw Error(ErrorKind::OutOfRange, msg.str());
    }
    return std::atan(p.E * cp) - std::asin(arg);
}

double min_winch_speed_bound(double theta, const WindCondition& wind, const KiteParams& p) {
    return -p.v_a_min / p.E + wind.v_w * std::cos(theta);
}

double tether_force(double v_a, const KiteParams& p) {
    const double v = v_a > 0.0 ? v_a : 0.0;
    return 0.5 * p.rho * p.C_R * p.A * v * v;
}

KiteState integrate_step(const KiteState& s, const ControlInput& u, const WindCondition& wind,
                         const KiteParams& p, double dt) {
    auto rate = [&](const KiteState& x) {
        return derivatives(x, u, air_path_speed(x, u.v_winch, wind, p), wind, p);
    };
    auto advance = [](const KiteState& x, const StateDerivative& d, double h) {
        return KiteState{x.phi + h * d.phi_dot, x.theta + h * d.theta_dot, x.psi + h * d.psi_dot,
                         x.l + h * d.l_dot};
    };

    const StateDerivative k1 = rate(s);
    const StateDerivative k2 = rate(advance(s, k1, 0.5 * dt));
    const StateDerivative k3 = rate(advance(s, k2, 0.5 * dt));
    const StateDerivative k4 = rate(advance(s, k3, dt));

    KiteState next = s;
    next.phi += dt / 6.0 * (k1.phi_dot + 2.0 * k2.phi_dot + 2.0 * k3.phi_dot + k4.phi_dot);
    next.theta += dt / 6.0 * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot);
    next.psi += dt / 6.0 * (k1.psi_dot + 2.0 * k2.psi_dot + 2.0 * k3.psi_dot + k4.psi_dot);
    // l_dot is constant over the step, so the length update is exact.
    next.l += dt * u.v_winch;
    check_geometry(next.theta, next.l);
    return next;
}

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(angle, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

}  // namespace model
}  // namespace kitepower
