#include "kitepower/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "kitepower/error.hpp"

namespace kitepower::optimizer {

namespace {

constexpr double kSpeedFloor = 1e-3;  // smallest |l_dot| / v_w inside a segment

struct Inputs {
    double psi;
    double l_dot;
};

Inputs interpolate(const CycleDecision& d, std::size_t k, double t) {
    const double t0 = d.times[k];
    const double t1 = d.times[k + 1];
    const double w = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
    return {d.psi_nodes[k] + w * (d.psi_nodes[k + 1] - d.psi_nodes[k]),
            d.l_dot_nodes[k] + w * (d.l_dot_nodes[k + 1] - d.l_dot_nodes[k])};
}

double theta_rate(double theta, double l, const Inputs& in, const WindCondition& wind, const KiteParams& p) {
    const double s = std::sin(theta);
    if (s <= model::kThetaGuard || l <= 0.0) {
        throw Error(ErrorKind::DegenerateGeometry, "reduced cycle left the valid sphere region");
    }
    const double e_cos_psi = p.E * std::cos(in.psi);
    return (wind.v_w / l) * (e_cos_psi * std::cos(theta) - s) - (in.l_dot / l) * e_cos_psi;
}

/// RK4 over the whole period from theta_start. Samples are recorded when
/// `samples` is non-null.
double propagate(const CycleDecision& d, double theta_start, double l_start, const WindCondition& wind,
                 const KiteParams& p, int substeps, std::vector<CycleSample>* samples, double* l_end) {
    double theta = theta_start;
    double l = l_start;
    auto record = [&](double t, std::size_t k) {
        if (!samples) return;
        const Inputs in = interpolate(d, k, t);
        const double v_a = model::air_path_speed(KiteState{0.0, theta, in.psi, l}, in.l_dot, wind, p);
        const double F = model::tether_force(v_a, p);
        samples->push_back({t, theta, l, in.psi, in.l_dot, v_a, F, F * in.l_dot});
    };

    if (samples) {
        samples->clear();
        samples->reserve((d.size() - 1) * static_cast<std::size_t>(substeps) + 1);
    }
    record(0.0, 0);
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
        const double t0 = d.times[k];
        const double span = d.times[k + 1] - t0;
        if (span <= 0.0) continue;
        const double h = span / substeps;
        for (int j = 0; j < substeps; ++j) {
            const double t = t0 + j * h;
            const Inputs a = interpolate(d, k, t);
            const Inputs m = interpolate(d, k, t + 0.5 * h);
            const Inputs b = interpolate(d, k, t + h);
            const double k1 = theta_rate(theta, l, a, wind, p);
            const double k2 = theta_rate(theta + 0.5 * h * k1, l + 0.5 * h * a.l_dot, m, wind, p);
            const double k3 = theta_rate(theta + 0.5 * h * k2, l + 0.5 * h * m.l_dot, m, wind, p);
            const double k4 = theta_rate(theta + h * k3, l + h * m.l_dot, b, wind, p);
            theta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            // Simpson on a linear integrand: exact.
            l += h / 6.0 * (a.l_dot + 4.0 * m.l_dot + b.l_dot);
            record(j + 1 == substeps ? d.times[k + 1] : t + h, k);
        }
    }
    if (l_end) *l_end = l;
    return theta;
}

/// Solves theta(T; theta0) = theta0 by secant iteration on the contraction.
double periodic_theta(const CycleDecision& d, double l_start, const WindCondition& wind, const KiteParams& p,
                      int substeps, double tol) {
    auto residual = [&](double th) { return propagate(d, th, l_start, wind, p, substeps, nullptr, nullptr) - th; };
    double a = 1.0;
    try {
        a = std::clamp(model::equilibrium_theta(d.psi_nodes.front(), 0.0, wind, p), 0.2, 2.5);
    } catch (const Error&) {
    }
    double ra = residual(a);
    double b = a + ra;
    double rb = residual(b);
    for (int it = 0; it < 40 && std::abs(rb) > tol; ++it) {
        const double denom = rb - ra;
        double next = std::abs(denom) > 1e-300 ? b - rb * (b - a) / denom : b + rb;
        next = std::clamp(next, 1e-3, std::numbers::pi - 1e-3);
        a = b;
        ra = rb;
        b = next;
        rb = residual(b);
    }
    return b;
}

}  // namespace

void OptimizerConstraints::validate() const {
    auto require = [](bool ok, const char* field, const char* rule) {
        if (!ok) throw Error(ErrorKind::Config, std::string("optimizer.") + field + " must be " + rule);
    };
    require(l_min > 0.0, "l_min", "> 0");
    require(l_min < l_max, "l_min", "< optimizer.l_max");
    require(psi_max > 0.0, "psi_max", "> 0");
    require(alpha_limit_in < 0.0, "alpha_limit_in", "< 0");
    require(alpha_limit_out > 0.0, "alpha_limit_out", "> 0");
    require(periodicity_tol > 0.0, "periodicity_tol", "> 0");
}

CycleDecision CycleDecision::uniform(std::vector<double> psi, std::vector<double> l_dot, double T) {
    CycleDecision d;
    const std::size_t n = psi.size();
    d.times.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.times[i] = n > 1 ? T * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    d.psi_nodes = std::move(psi);
    d.l_dot_nodes = std::move(l_dot);
    return d;
}

double average_power(std::span<const CycleSample> samples) {
    if (samples.size() < 2) return 0.0;
    double energy = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        energy += 0.5 * (samples[i].P + samples[i - 1].P) * (samples[i].t - samples[i - 1].t);
    }
    const double span = samples.back().t - samples.front().t;
    return span > 0.0 ? energy / span : 0.0;
}

double loyd_limit(const WindCondition& wind, const KiteParams& p) {
    return 0.5 * p.rho * p.C_R * p.A * (4.0 * p.E * p.E / 27.0) * wind.v_w * wind.v_w * wind.v_w;
}

OptimalCycle simulate_reduced_cycle(const CycleDecision& d, const OptimizerConstraints& c,
                                    const WindCondition& wind, const KiteParams& p,
                                    const SimulationOptions& options) {
    if (d.size() < 2 || d.psi_nodes.size() != d.size() || d.l_dot_nodes.size() != d.size()) {
        throw Error(ErrorKind::Config, "cycle decision needs matching node arrays with at least two nodes");
    }
    const double theta_start =
        d.theta_start ? *d.theta_start : periodic_theta(d, c.l_min, wind, p, options.substeps, c.periodicity_tol);

    OptimalCycle cycle;
    double l_end = c.l_min;
    const double theta_end = propagate(d, theta_start, c.l_min, wind, p, options.substeps, &cycle.samples, &l_end);
    cycle.T = d.duration();
    cycle.theta_residual = theta_end - theta_start;
    cycle.l_residual = l_end - c.l_min;
    cycle.P_bar = average_power(cycle.samples);
    cycle.ratio = cycle.P_bar / loyd_limit(wind, p);
    return cycle;
}

CycleProblem::CycleProblem(const OptimizerConstraints& constraints, const WindCondition& wind,
                           const KiteParams& params, std::size_t nodes, SimulationOptions options)
    : constraints_(constraints), wind_(wind), params_(params), options_(options) {
    if (nodes < 8) throw Error(ErrorKind::Config, "optimizer needs at least 8 nodes");
    n_out_ = nodes / 2 + 1;
    n_in_ = nodes - n_out_ + 1;
    const std::size_t n_psi = nodes - 1;
    const std::size_t n_u = n_out_ - 2;
    const std::size_t n_w = n_in_ - 2;
    lower_.reserve(n_psi + n_u + n_w);
    upper_.reserve(n_psi + n_u + n_w);
    for (std::size_t i = 0; i < n_psi; ++i) {
        lower_.push_back(0.0);
        upper_.push_back(constraints.psi_max);
    }
    for (std::size_t i = 0; i < n_u; ++i) {
        lower_.push_back(kSpeedFloor);
        upper_.push_back(constraints.alpha_limit_out);
    }
    for (std::size_t i = 0; i < n_w; ++i) {
        lower_.push_back(constraints.alpha_limit_in);
        upper_.push_back(-kSpeedFloor);
    }
}

void CycleProblem::project(std::span<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower_[i], upper_[i]);
}

CycleDecision CycleProblem::expand(std::span<const double> x) const {
    const std::size_t n = nodes();
    const std::size_t n_psi = n - 1;
    const std::size_t junction = n_out_ - 1;

    std::vector<double> psi(n);
    std::copy_n(x.begin(), n_psi, psi.begin());
    psi[n - 1] = psi[0];

    // Speeds in units of v_w, zero at the start, the junction and the end.
    std::vector<double> alpha(n, 0.0);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(n_psi), n_out_ - 2, alpha.begin() + 1);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(n_psi + n_out_ - 2), n_in_ - 2,
                alpha.begin() + static_cast<std::ptrdiff_t>(junction + 1));

    auto mean_speed = [&](std::size_t first, std::size_t last) {
        double sum = 0.0;
        for (std::size_t i = first; i < last; ++i) sum += 0.5 * (alpha[i] + alpha[i + 1]);
        return sum / static_cast<double>(last - first);
    };
    const double range = constraints_.l_max - constraints_.l_min;
    const double t_out = range / (wind_.v_w * mean_speed(0, junction));
    const double t_in = range / (wind_.v_w * -mean_speed(junction, n - 1));

    CycleDecision d;
    d.times.resize(n);
    for (std::size_t i = 0; i <= junction; ++i) {
        d.times[i] = t_out * static_cast<double>(i) / static_cast<double>(junction);
    }
    for (std::size_t i = junction + 1; i < n; ++i) {
        d.times[i] = t_out + t_in * static_cast<double>(i - junction) / static_cast<double>(n - 1 - junction);
    }
    d.psi_nodes = std::move(psi);
    d.l_dot_nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.l_dot_nodes[i] = alpha[i] * wind_.v_w;
    return d;
}

OptimalCycle CycleProblem::evaluate(std::span<const double> x) const {
    OptimalCycle cycle = simulate_reduced_cycle(expand(x), constraints_, wind_, params_, options_);
    cycle.t_switch = expand(x).times[junction_node()];
    cycle.decision.assign(x.begin(), x.end());
    return cycle;
}

double CycleProblem::objective(std::span<const double> x) const {
    try {
        const CycleDecision d = expand(x);
        if (!std::isfinite(d.duration())) return -1.0;
        return simulate_reduced_cycle(d, constraints_, wind_, params_, options_).ratio;
    } catch (const Error&) {
        return -1.0;
    }
}

std::vector<double> CycleProblem::seed() const {
    const std::size_t n = nodes();
    const std::size_t junction = n_out_ - 1;
    std::vector<double> x;
    x.reserve(dimension());
    for (std::size_t i = 0; i + 1 < n; ++i) x.push_back(i < junction ? 0.9 * constraints_.psi_max : 0.0);
    for (std::size_t i = 0; i + 2 < n_out_; ++i) x.push_back(std::min(0.25, constraints_.alpha_limit_out));
    for (std::size_t i = 0; i + 2 < n_in_; ++i) x.push_back(0.8 * constraints_.alpha_limit_in);
    project(x);
    return x;
}

OptimalCycle optimize_cycle(const OptimizerConstraints& constraints, const WindCondition& wind,
                            const KiteParams& params, std::optional<std::vector<double>> seed,
                            const OptimizeOptions& options) {
    constraints.validate();
    const CycleProblem problem(constraints, wind, params, options.nodes, options.simulation);
    std::vector<double> x = seed ? *seed : problem.seed();
    if (x.size() != problem.dimension()) {
        throw Error(ErrorKind::Config, "seed dimension does not match the node count");
    }
    problem.project(x);
    double f = problem.objective(x);
    if (f <= -1.0) throw Error(ErrorKind::DegenerateGeometry, "seed decision is not a valid cycle");

    const std::size_t n = x.size();
    auto gradient = [&](std::span<const double> at, std::span<double> out) {
        if (options.parallel) {
            objective_gradient_parallel(problem, at, options.fd_step, out);
        } else {
            objective_gradient_serial(problem, at, options.fd_step, out);
        }
    };

    // Spectral projected gradient: Barzilai-Borwein step length with a
    // nonmonotone Armijo test over the last few objective values.
    constexpr std::size_t kMemory = 10;
    constexpr double kLambdaMin = 1e-10;
    constexpr double kLambdaMax = 1e10;
    std::vector<double> grad(n), grad_next(n), dir(n), trial(n);
    std::deque<double> history{f};
    std::vector<double> best_x = x;
    double best_f = f;
    gradient(x, grad);
    double lambda = 1.0;
    bool converged = false;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        double pg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pg = std::max(pg, std::abs(std::clamp(x[i] + grad[i], problem.lower()[i], problem.upper()[i]) - x[i]));
        }
        if (pg < options.step_tolerance) {
            converged = true;
            break;
        }

        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + lambda * grad[i];
        problem.project(trial);
        double ascent = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dir[i] = trial[i] - x[i];
            ascent += grad[i] * dir[i];
        }
        const double reference = *std::min_element(history.begin(), history.end());
        double t = 1.0;
        double ft = problem.objective(trial);
        while (ft < reference + 1e-4 * t * ascent && t > 1e-12) {
            t *= 0.5;
            for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + t * dir[i];
            ft = problem.objective(trial);
        }
        if (t <= 1e-12) {
            converged = true;
            break;
        }

        gradient(trial, grad_next);
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s_i = trial[i] - x[i];
            ss += s_i * s_i;
            sy -= s_i * (grad_next[i] - grad[i]);  // curvature of -f
        }
        lambda = sy > 0.0 ? std::clamp(ss / sy, kLambdaMin, kLambdaMax) : kLambdaMax;

        x.swap(trial);
        grad.swap(grad_next);
        f = ft;
        history.push_back(f);
        if (history.size() > kMemory) history.pop_front();
        if (f > best_f) {
            best_f = f;
            best_x = x;
        }
    }
    if (!converged) x = best_x;

    OptimalCycle best = problem.evaluate(x);
    best.iterations = it;
    best.converged = converged;
    best.decision = std::move(x);
    return best;
}

WinchLawFit fit_linear_law(std::span<const double> theta, std::span<const double> alpha) {
    const std::size_t n = std::min(theta.size(), alpha.size());
    if (n < 3) throw Error(ErrorKind::InsufficientSamples, "need at least three samples for a winch law fit");
    const double mx = std::accumulate(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
    const double my = std::accumulate(alpha.begin(), alpha.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (theta[i] - mx) * (theta[i] - mx);
        sxy += (theta[i] - mx) * (alpha[i] - my);
    }
    if (sxx <= 0.0 || sxy == 0.0) {
        throw Error(ErrorKind::InsufficientSamples, "samples do not determine a sloped line");
    }
    WinchLawFit fit;
    fit.slope = sxy / sxx;
    fit.theta0 = mx - my / fit.slope;
    fit.samples = n;
    return fit;
}

WinchLawFit fit_winch_law(const OptimalCycle& cycle, double v_w, const OptimizerConstraints& c) {
    const auto& s = cycle.samples;
    if (s.size() < 3) throw Error(ErrorKind::InsufficientSamples, "cycle has too few samples");

    // Transfer branch: from the reel-out speed peak to the first saturated
    // reel-in sample, keeping points with rising theta.
    std::size_t peak = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (cycle.t_switch > 0.0 && s[i].t > cycle.t_switch) break;
        if (s[i].l_dot > s[peak].l_dot) peak = i;
    }
    const double margin = 0.02 * (c.alpha_limit_out - c.alpha_limit_in);
    std::vector<double> theta, alpha;
    for (std::size_t i = peak + 1; i < s.size(); ++i) {
        const double a = s[i].l_dot / v_w;
        if (a <= c.alpha_limit_in + margin) break;
        if (a >= c.alpha_limit_out - margin) continue;
        if (s[i].theta <= s[i - 1].theta) continue;
        theta.push_back(s[i].theta);
        alpha.push_back(a);
    }
    return fit_linear_law(theta, alpha);
}

}  // namespace kitepower::optimizer
