#include "kitepower/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace kitepower {

namespace {

using guidance::CyclePhase;

double winch_command(CyclePhase phase, double theta_m, double v_a_m, double v_w, const SimConfig& cfg) {
    switch (phase) {
        case CyclePhase::PowerTp1:
        case CyclePhase::PowerTp2:
            return winch::power_phase_speed(v_a_m, cfg.winch, cfg.kite);
        case CyclePhase::Transfer:
        case CyclePhase::Return:
            return winch::transfer_return_speed(theta_m, v_w, cfg.winch);
        case CyclePhase::Restart:
            return winch::restart_speed(theta_m, v_w, cfg.winch, cfg.kite);
    }
    return 0.0;
}

class Sensors {
public:
    Sensors(const SensorNoise& noise, std::uint64_t seed) : noise_(noise), rng_(seed) {}

    KiteState measure(const KiteState& x) {
        if (!noise_.active()) return x;
        KiteState m = x;
        m.phi += sample(noise_.phi);
        m.theta += sample(noise_.theta);
        m.psi += sample(noise_.psi);
        m.l += sample(noise_.l);
        return m;
    }
    double measure_rate(double psi_dot) { return psi_dot + sample(noise_.psi_dot); }

private:
    double sample(double sigma) { return sigma > 0.0 ? sigma * gauss_(rng_) : 0.0; }

    SensorNoise noise_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_;
};

}  // namespace

SimulationResult run_simulation(const SimConfig& cfg, const SimulationHooks& hooks) {
    cfg.validate();
    SimulationResult result;

    KiteState x = cfg.initial;
    control::InnerLoopController inner(cfg.inner, cfg.kite);
    control::OuterLoopController outer(cfg.outer, cfg.kite);
    winch::WinchState drive(cfg.winch, cfg.dt);
    guidance::CourseTracker course;
    Sensors sensors(cfg.noise, cfg.seed);
    CyclePhase phase = CyclePhase::PowerTp1;
    double delta = 0.0;

    const long steps = std::lround(cfg.duration / cfg.dt);
    result.telemetry.reserve(static_cast<std::size_t>(steps));
    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const WindCondition wind{cfg.gust.wind_at(t, cfg.wind.v_w)};
        try {
            const double l_dot = drive.speed();
            const double v_a = model::air_path_speed(x, l_dot, wind, cfg.kite);
            if (v_a < control::kAirspeedFloor) {
                std::ostringstream msg;
                msg << "t=" << t << " s: air path speed " << v_a << " m/s below " << control::kAirspeedFloor
                    << " m/s";
                throw Error(ErrorKind::Stall, msg.str());
            }

            const KiteState m = sensors.measure(x);
            const double v_a_m = model::air_path_speed(m, l_dot, wind, cfg.kite);
            const double psi_dot_m = sensors.measure_rate(cfg.kite.g_k * v_a * delta);

            const guidance::SpherePosition pos{m.phi, m.theta};
            const auto [next, tp] = guidance::cycle_step(phase, pos, m.l, cfg.cycle);
            phase = next;

            const double raw = guidance::target_direction(pos, tp);
            const double gamma_s =
                course.update(course.primed() ? raw : guidance::unwrap_course(raw, m.psi), tp.id);
            const double psi_raw = model::psi_from_gamma_clamped(gamma_s, m.theta, l_dot, wind, cfg.kite);
            const double psi_s = gamma_s + model::wrap_angle(psi_raw - gamma_s);

            const double psi_dot_ct = model::crossterm(m, v_a_m);
            const control::OuterLoopOutput o = outer.step(psi_s, m.psi, psi_dot_ct, 0.0, v_a_m, cfg.dt);
            const control::InnerLoopOutput in = inner.step(o.psi_dot_s_prime, psi_dot_m, v_a_m, std::nullopt, cfg.dt);
            delta = in.delta;

            const double cmd = winch_command(phase, m.theta, v_a_m, wind.v_w, cfg);
            double speed = drive.step(cmd);
            double F = model::tether_force(model::air_path_speed(x, speed, wind, cfg.kite), cfg.kite);
            const double limited = winch::force_limit_override(F, speed, cfg.winch);
            if (limited != speed) {
                drive.force_speed(limited);
                speed = drive.speed();
            }
            const double v_a_rec = model::air_path_speed(x, speed, wind, cfg.kite);
            F = model::tether_force(v_a_rec, cfg.kite);

            TelemetryRecord r;
            r.t = t;
            r.phi = x.phi;
            r.theta = x.theta;
            r.psi = x.psi;
            r.l = x.l;
            r.delta = delta;
            r.v_winch_cmd = cmd;
            r.v_winch_actual = speed;
            r.v_a = v_a_rec;
            r.gamma_s = gamma_s;
            r.psi_s = psi_s;
            r.psi_c = o.psi_c;
            r.phase = phase;
            r.F = F;
            r.P_mech = F * speed;
            result.telemetry.push_back(r);
            if (hooks.on_record) hooks.on_record(r);
            if (hooks.on_trace) hooks.on_trace(r, ControlTrace{in.psi_dot_ref, psi_dot_m, in.delta_ff, in.delta_fb});

            x = model::integrate_step(x, ControlInput{delta, speed}, wind, cfg.kite, cfg.dt);
        } catch (const Error& e) {
            result.abort_kind = e.kind();
            result.abort_message = e.what();
            break;
        }
    }

    try {
        result.cycles = energy_accounting(result.telemetry);
    } catch (const Error&) {
        result.cycles.clear();
    }
    return result;
}

std::vector<CycleReport> energy_accounting(std::span<const TelemetryRecord> telemetry) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 1; i < telemetry.size(); ++i) {
        if (telemetry[i - 1].phase == CyclePhase::Restart && guidance::is_power(telemetry[i].phase)) {
            starts.push_back(i);
        }
    }
    if (starts.size() < 2) {
        throw Error(ErrorKind::NoCompleteCycle, "telemetry contains no complete Restart-to-Restart cycle");
    }

    std::vector<CycleReport> reports;
    for (std::size_t c = 0; c + 1 < starts.size(); ++c) {
        CycleReport rep;
        rep.cycle_index = static_cast<int>(c);
        rep.v_a_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = starts[c]; i < starts[c + 1]; ++i) {
            const TelemetryRecord& r = telemetry[i];
            const double dt = telemetry[i + 1].t - r.t;
            if (r.P_mech > 0.0) {
                rep.W_out += r.P_mech * dt;
            } else {
                rep.W_in += r.P_mech * dt;
            }
            rep.F_peak = std::max(rep.F_peak, r.F);
            rep.v_a_min = std::min(rep.v_a_min, r.v_a);
        }
        rep.T = telemetry[starts[c + 1]].t - telemetry[starts[c]].t;
        rep.P_bar_cycle = (rep.W_in + rep.W_out) / rep.T;
        reports.push_back(rep);
    }
    return reports;
}

}  // namespace kitepower
