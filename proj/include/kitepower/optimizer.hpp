// Pumping-cycle power optimization on the reduced (theta, l) dynamics with
// circular-orbit approximation: psi(t) and l_dot(t) are piecewise-linear
// inputs, the cycle is periodic in theta, l and psi.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kitepower/model.hpp"

namespace kitepower::optimizer {

struct OptimizerConstraints {
    double l_min = 130.0;            // m
    double l_max = 270.0;            // m
    double psi_max = 1.4;            // rad
    double alpha_limit_in = -0.5;    // l_dot / v_w lower bound
    double alpha_limit_out = 0.3;    // l_dot / v_w upper bound
    double periodicity_tol = 1e-12;  // rad, theta shooting tolerance

    void validate() const;
};

/// Piecewise-linear inputs on explicit node times t_0 = 0 < ... < t_{N-1} = T.
struct CycleDecision {
    std::vector<double> times;        // s
    std::vector<double> psi_nodes;    // rad
    std::vector<double> l_dot_nodes;  // m/s
    /// Initial theta; when empty the periodic initial condition is solved for.
    std::optional<double> theta_start;

    std::size_t size() const { return times.size(); }
    double duration() const { return times.empty() ? 0.0 : times.back(); }

    /// N equally spaced nodes over [0, T].
    static CycleDecision uniform(std::vector<double> psi, std::vector<double> l_dot, double T);
};

struct CycleSample {
    double t, theta, l, psi, l_dot, v_a, F, P;
};

struct OptimalCycle {
    std::vector<CycleSample> samples;
    double P_bar = 0.0;           // W
    double ratio = 0.0;           // P_bar / P_Loyd
    double T = 0.0;               // s
    double theta_residual = 0.0;  // theta(T) - theta(0)
    double l_residual = 0.0;      // l(T) - l(0)
    double t_switch = 0.0;        // reel-out -> reel-in junction, 0 if unknown
    int iterations = 0;
    bool converged = true;
    /// Free vector of CycleProblem that produced this cycle (empty when the
    /// cycle came from an explicit CycleDecision). Usable as a warm start.
    std::vector<double> decision;
};

/// Trapezoidal average of l_dot F over the samples' time span.
double average_power(std::span<const CycleSample> samples);

/// (rho C_R A / 2) (4 E^2 / 27) v_w^3
double loyd_limit(const WindCondition& wind, const KiteParams& params);

struct SimulationOptions {
    int substeps = 10;  // RK4 steps per node interval
};

/// Integrates theta and l over one period. Throws DegenerateGeometry if the
/// trajectory leaves the valid sphere region; an infeasible (non-periodic)
/// decision is reported through the residuals.
OptimalCycle simulate_reduced_cycle(const CycleDecision& decision, const OptimizerConstraints& constraints,
                                    const WindCondition& wind, const KiteParams& params,
                                    const SimulationOptions& options = {});

/// Structured parameterization used by the optimizer. The cycle starts at
/// l_min with l_dot = 0, reels out over n_out nodes to l_max, and reels in
/// over n_in nodes back to l_min. Segment durations follow from the speed
/// profiles so that both range limits are reached exactly; l_dot vanishes
/// only at the two junctions. Speeds are stored in units of v_w.
///
/// Free vector layout: [psi_0 .. psi_{N-2} | out interior speeds | in interior speeds].
class CycleProblem {
public:
    CycleProblem(const OptimizerConstraints& constraints, const WindCondition& wind, const KiteParams& params,
                 std::size_t nodes = 40, SimulationOptions options = {});

    std::size_t dimension() const { return lower_.size(); }
    std::size_t nodes() const { return n_out_ + n_in_ - 1; }
    std::size_t junction_node() const { return n_out_ - 1; }
    std::span<const double> lower() const { return lower_; }
    std::span<const double> upper() const { return upper_; }

    void project(std::span<double> x) const;
    CycleDecision expand(std::span<const double> x) const;

    /// P_bar / P_Loyd of the periodic cycle, or -1 when the trajectory is
    /// degenerate.
    double objective(std::span<const double> x) const;
    OptimalCycle evaluate(std::span<const double> x) const;

    /// Feasible starting point: reel out at ~v_w/4 with psi near psi_max,
    /// reel in at ~0.8 alpha_limit_in with psi = 0.
    std::vector<double> seed() const;

    const OptimizerConstraints& constraints() const { return constraints_; }
    const WindCondition& wind() const { return wind_; }
    const KiteParams& params() const { return params_; }

private:
    OptimizerConstraints constraints_;
    WindCondition wind_;
    KiteParams params_;
    SimulationOptions options_;
    std::size_t n_out_;
    std::size_t n_in_;
    std::vector<double> lower_;
    std::vector<double> upper_;
};

/// Central-difference gradient of CycleProblem::objective, one independent
/// pair of evaluations per coordinate. The parallel kernel distributes
/// coordinates over OpenMP threads and is bit-identical to the serial one.
void objective_gradient_serial(const CycleProblem& problem, std::span<const double> x, double h,
                               std::span<double> grad);
void objective_gradient_parallel(const CycleProblem& problem, std::span<const double> x, double h,
                                 std::span<double> grad);

struct OptimizeOptions {
    std::size_t nodes = 40;
    int max_iterations = 4000;
    double step_tolerance = 1e-9;
    double fd_step = 1e-6;
    bool parallel = true;
    SimulationOptions simulation{};
};

/// Projected gradient ascent with backtracking. Deterministic for a given
/// seed and options. On hitting max_iterations the best point is returned
/// with converged = false.
OptimalCycle optimize_cycle(const OptimizerConstraints& constraints, const WindCondition& wind,
                            const KiteParams& params, std::optional<std::vector<double>> seed = std::nullopt,
                            const OptimizeOptions& options = {});

struct WinchLawFit {
    double theta0 = 0.0;  // rad, zero crossing
    double slope = 0.0;   // d(l_dot / v_w) / d theta
    std::size_t samples = 0;
};

/// Least-squares line through (theta, l_dot / v_w) points.
/// Throws InsufficientSamples with fewer than three points or no spread.
WinchLawFit fit_linear_law(std::span<const double> theta, std::span<const double> alpha);

/// Fits the transfer branch of an optimized cycle: samples after the speed
/// peak of the reel-out phase and before reel-in saturates, where theta
/// rises and l_dot / v_w is strictly between the limits.
WinchLawFit fit_winch_law(const OptimalCycle& cycle, double v_w, const OptimizerConstraints& constraints);

}  // namespace kitepower::optimizer
