#include "kitepower/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "kitepower/error.hpp"

namespace kitepower {

double GustProfile::wind_at(double t, double base) const {
    if (points.empty()) return base;
    if (t <= points.front().t) return points.front().v_w;
    if (t >= points.back().t) return points.back().v_w;
    const auto hi = std::upper_bound(points.begin(), points.end(), t,
                                     [](double value, const GustBreakpoint& p) { return value < p.t; });
    const auto lo = hi - 1;
    const double w = (t - lo->t) / (hi->t - lo->t);
    return lo->v_w + w * (hi->v_w - lo->v_w);
}

void SimConfig::validate() const {
    kite.validate();
    cycle.validate();
    winch.validate();
    optimizer.validate();
    auto require = [](bool ok, const std::string& field, const char* rule) {
        if (!ok) throw Error(ErrorKind::Config, field + " must be " + rule);
    };
    require(wind.v_w >= 0.0, "wind.v_w", ">= 0");
    require(dt > 0.0 && dt <= 0.1, "sim.dt", "in (0, 0.1]");
    require(duration > 0.0, "sim.duration", "> 0");
    require(initial.l > 0.0, "initial.l", "> 0");
    require(initial.theta > 0.0 && initial.theta < 3.141592653589793, "initial.theta", "in (0, pi)");
    require(inner.error_limit > 0.0, "inner.error_limit", "> 0");
    require(outer.error_limit > 0.0, "outer.error_limit", "> 0");
    require(optimizer_nodes >= 8, "optimizer.nodes", ">= 8");
    require(optimizer_max_iterations > 0, "optimizer.max_iterations", "> 0");
    require(noise.phi >= 0.0 && noise.theta >= 0.0 && noise.psi >= 0.0 && noise.psi_dot >= 0.0 && noise.l >= 0.0,
            "sensors.noise_*", ">= 0");
    for (std::size_t i = 0; i < gust.points.size(); ++i) {
        require(gust.points[i].v_w >= 0.0, "wind.gust", "non-negative in every breakpoint");
        if (i > 0) require(gust.points[i].t > gust.points[i - 1].t, "wind.gust", "strictly increasing in time");
    }
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Location {
    const std::string& source;
    int line;
    std::string key;

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream msg;
        msg << source << ":" << line << ": " << key << ": " << what;
        throw Error(ErrorKind::Config, msg.str());
    }
};

double parse_double(std::string_view text, const Location& at) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) at.fail("expected a number, got '" + std::string(text) + "'");
    return value;
}

template <typename Int>
Int parse_integer(std::string_view text, const Location& at) {
    Int value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) at.fail("expected an integer, got '" + std::string(text) + "'");
    return value;
}

bool parse_bool(std::string_view text, const Location& at) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    at.fail("expected true or false, got '" + std::string(text) + "'");
}

// "t:v, t:v, ..."
GustProfile parse_gust(std::string_view text, const Location& at) {
    GustProfile gust;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = trim(text.substr(0, comma));
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) at.fail("gust breakpoint '" + std::string(item) + "' is not t:v_w");
        gust.points.push_back({parse_double(trim(item.substr(0, colon)), at),
                               parse_double(trim(item.substr(colon + 1)), at)});
    }
    return gust;
}

using Setter = std::function<void(std::string_view, const Location&)>;

std::map<std::string, Setter, std::less<>> setters(SimConfig& c) {
    std::map<std::string, Setter, std::less<>> m;
    auto number = [&m](const char* key, double& field) {
        m[key] = [&field](std::string_view v, const Location& at) { field = parse_double(v, at); };
    };

    number("kite.E", c.kite.E);
    number("kite.g_k", c.kite.g_k);
    number("kite.A", c.kite.A);
    number("kite.rho", c.kite.rho);
    number("kite.C_R", c.kite.C_R);
    number("kite.M", c.kite.M);
    number("kite.v_a_min", c.kite.v_a_min);
    number("kite.delta_s", c.kite.delta_s);
    number("kite.delta_dot_p", c.kite.delta_dot_p);

    number("wind.v_w", c.wind.v_w);
    m["wind.gust"] = [&c](std::string_view v, const Location& at) { c.gust = parse_gust(v, at); };

    number("cycle.phi_tp1", c.cycle.phi_tp1);
    number("cycle.theta_tp1", c.cycle.theta_tp1);
    number("cycle.sigma", c.cycle.sigma);
    number("cycle.l_transfer", c.cycle.l_transfer);
    number("cycle.l_restart", c.cycle.l_restart);
    number("cycle.delta_theta_tp3", c.cycle.delta_theta_tp3);
    number("cycle.phi_tp3", c.cycle.phi_tp3);
    number("cycle.theta0", c.cycle.theta0);
    number("cycle.restart_margin", c.cycle.restart_margin);

    number("winch.a", c.winch.a);
    number("winch.theta0", c.winch.theta0);
    number("winch.a_lower", c.winch.a_lower);
    number("winch.a_upper", c.winch.a_upper);
    number("winch.alpha_limit_in", c.winch.alpha_limit_in);
    number("winch.alpha_limit_out", c.winch.alpha_limit_out);
    number("winch.v_min_restart_factor", c.winch.v_min_restart_factor);
    number("winch.l_dot_max", c.winch.l_dot_max);
    number("winch.l_ddot_max", c.winch.l_ddot_max);
    number("winch.tau", c.winch.tau);
    number("winch.lowpass_tau", c.winch.lowpass_tau);
    number("winch.F_max", c.winch.F_max);
    number("winch.force_gain", c.winch.force_gain);

    number("inner.kp", c.inner.kp);
    number("inner.ki", c.inner.ki);
    number("inner.lowpass_tau", c.inner.lowpass_tau);
    number("inner.error_limit", c.inner.error_limit);
    m["inner.gravity_compensation"] = [&c](std::string_view v, const Location& at) {
        c.inner.gravity_compensation = parse_bool(v, at);
    };

    number("outer.kp", c.outer.kp);
    number("outer.lowpass_tau", c.outer.lowpass_tau);
    number("outer.error_limit", c.outer.error_limit);
    m["outer.mode"] = [&c](std::string_view v, const Location& at) {
        if (v == "target_point") {
            c.outer.mode = control::CrosstermMode::TargetPoint;
        } else if (v == "step_input") {
            c.outer.mode = control::CrosstermMode::StepInput;
        } else {
            at.fail("expected target_point or step_input, got '" + std::string(v) + "'");
        }
    };

    number("optimizer.l_min", c.optimizer.l_min);
    number("optimizer.l_max", c.optimizer.l_max);
    number("optimizer.psi_max", c.optimizer.psi_max);
    number("optimizer.alpha_limit_in", c.optimizer.alpha_limit_in);
    number("optimizer.alpha_limit_out", c.optimizer.alpha_limit_out);
    number("optimizer.periodicity_tol", c.optimizer.periodicity_tol);
    m["optimizer.nodes"] = [&c](std::string_view v, const Location& at) {
        c.optimizer_nodes = parse_integer<std::size_t>(v, at);
    };
    m["optimizer.max_iterations"] = [&c](std::string_view v, const Location& at) {
        c.optimizer_max_iterations = parse_integer<int>(v, at);
    };

    number("sensors.noise_phi", c.noise.phi);
    number("sensors.noise_theta", c.noise.theta);
    number("sensors.noise_psi", c.noise.psi);
    number("sensors.noise_psi_dot", c.noise.psi_dot);
    number("sensors.noise_l", c.noise.l);

    number("initial.phi", c.initial.phi);
    number("initial.theta", c.initial.theta);
    number("initial.psi", c.initial.psi);
    number("initial.l", c.initial.l);

    number("sim.dt", c.dt);
    number("sim.duration", c.duration);
    m["sim.seed"] = [&c](std::string_view v, const Location& at) { c.seed = parse_integer<std::uint64_t>(v, at); };

    m["output.telemetry"] = [&c](std::string_view v, const Location&) { c.telemetry_file = std::string(v); };
    m["output.report"] = [&c](std::string_view v, const Location&) { c.report_file = std::string(v); };
    return m;
}

// The physical parameter set has no sensible default.
constexpr const char* kRequired[] = {"kite.E", "kite.g_k", "kite.A", "kite.rho", "kite.C_R", "wind.v_w"};

}  // namespace

SimConfig parse_config(std::string_view text, const std::string& source) {
    SimConfig cfg;
    const auto table = setters(cfg);
    std::set<std::string, std::less<>> seen;

    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            Location{source, line_no, std::string(line)}.fail("expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const Location at{source, line_no, key};
        const auto it = table.find(key);
        if (it == table.end()) at.fail("unknown key");
        if (!seen.insert(key).second) at.fail("duplicate key");
        if (value.empty()) at.fail("missing value");
        it->second(value, at);
    }

    for (const char* key : kRequired) {
        if (!seen.contains(key)) {
            throw Error(ErrorKind::Config, source + ": missing required field " + key);
        }
    }
    cfg.validate();
    return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

}  // namespace kitepower
