// Four-state spherical kite dynamics: position, air path speed, equations of
// motion, flight direction, winching equilibria and tether force.
// Pure functions, no controller state.
#pragma once

#include <array>

namespace kitepower {

/// Kite state on the sphere plus tether length.
/// theta is the angle from the wind axis, psi the orientation w.r.t. the wind
/// (psi = 0 heads straight against the wind). phi and psi are kept continuous;
/// they are only wrapped when written out.
struct KiteState {
    double phi = 0.0;    // rad
    double theta = 1.0;  // rad, in (0, pi)
    double psi = 0.0;    // rad
    double l = 200.0;    // m, > 0
};

struct ControlInput {
    double delta = 0.0;    // steering deflection
    double v_winch = 0.0;  // m/s, commanded tether speed
};

struct KiteParams {
    double E = 5.0;             // glide ratio
    double g_k = 0.05;          // steering gain, rad/m per unit deflection
    double A = 21.0;            // projected area, m^2
    double rho = 1.2;           // kg/m^3
    double C_R = 1.0;           // force coefficient
    double M = 0.0;             // gravity turn-rate parameter
    double v_a_min = 0.0;       // m/s
    double delta_s = 0.3;       // deflection limit
    double delta_dot_p = 0.4;   // deflection rate limit, 1/s

    /// Throws Error(Config) naming the first violated invariant.
    void validate() const;
};

struct WindCondition {
    double v_w = 10.0;  // m/s along +x
};

struct StateDerivative {
    double phi_dot = 0.0;
    double theta_dot = 0.0;
    double psi_dot = 0.0;
    double l_dot = 0.0;
};

namespace model {

/// Guard band around theta in {0, pi}.
inline constexpr double kThetaGuard = 1e-6;

/// Cartesian kite position; x along the wind, z down.
std::array<double, 3> position(const KiteState& state);

/// v_a = v_w E cos(theta) - l_dot E
double air_path_speed(const KiteState& state, double l_dot, const WindCondition& wind,
                      const KiteParams& params);

/// Equations of motion with v_w substituted everywhere except the steering
/// term, which takes the (measured) air path speed v_a.
/// Throws DegenerateGeometry if sin(theta) <= kThetaGuard or l <= 0.
StateDerivative derivatives(const KiteState& state, const ControlInput& input, double v_a,
                            const WindCondition& wind, const KiteParams& params);

/// Kinematic coupling phi_dot cos(theta) written with the air path speed:
/// -v_a sin(psi) / (l tan(theta)).
double crossterm(const KiteState& state, double v_a);

/// gamma = atan2(-phi_dot sin(theta), theta_dot). Throws UndefinedDirection
/// when the kite is (numerically) static.
double flight_direction_kinematic(double phi_dot, double theta_dot, double theta);

/// Wind offset c1 between orientation and flight direction.
/// Throws SingularAirflow when v_w cos(theta) - l_dot vanishes.
double wind_offset(double theta, double l_dot, const WindCondition& wind, const KiteParams& params);

double gamma_from_psi(double psi, double theta, double l_dot, const WindCondition& wind,
                      const KiteParams& params);

/// Inverse of gamma_from_psi. Throws NoSolution if the direction is not
/// reachable at this wind state (c1^2 sin^2(gamma) > 1).
double psi_from_gamma(double gamma, double theta, double l_dot, const WindCondition& wind,
                      const KiteParams& params);

/// Same inversion with the radicand clamped at zero: an unreachable direction
/// maps to the orientation that comes closest to it. Used by closed-loop
/// guidance, where near-static return flight makes c1 approach 1.
double psi_from_gamma_clamped(double gamma, double theta, double l_dot, const WindCondition& wind,
                              const KiteParams& params);

/// Equilibrium wind window angle for constant psi and winch speed.
/// Throws OutOfRange when the winch speed admits no equilibrium.
double equilibrium_theta(double psi, double l_dot, const WindCondition& wind,
                         const KiteParams& params);

/// Upper bound on l_dot that keeps v_a above v_a_min.
double min_winch_speed_bound(double theta, const WindCondition& wind, const KiteParams& params);

/// F = rho/2 C_R A v_a^2 with negative v_a clamped to zero.
double tether_force(double v_a, const KiteParams& params);

/// True when v_a is below zero, i.e. tether_force had to clamp.
inline bool is_stalled(double v_a) { return v_a < 0.0; }

/// One classical RK4 step. v_a is recomputed from the wind at every stage.
KiteState integrate_step(const KiteState& state, const ControlInput& input,
                         const WindCondition& wind, const KiteParams& params, double dt);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

}  // namespace model
}  // namespace kitepower
