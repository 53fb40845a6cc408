#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "kitepower/config.hpp"
#include "kitepower/error.hpp"
#include "kitepower/guidance.hpp"
#include "kitepower/simulation.hpp"

using namespace kitepower;
using namespace kitepower::guidance;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

const SimulationResult& nominal_run() {
    static const SimulationResult result = run_simulation(load_config(KITEPOWER_CONFIG_DIR "/nominal.cfg"));
    return result;
}

}  // namespace

TEST_SUITE("guidance") {

TEST_CASE("great-circle course") {
    CHECK(target_direction({0.3, 0.8}, {0.3, 1.2, TargetId::Tp1}) == 0.0);
    const double g = target_direction({0.65, 1.0}, {0.0, 1.2, TargetId::Tp1});
    const double oracle = std::atan2(std::sin(0.65), std::cos(1.0) * std::cos(0.65) - std::sin(1.0) / std::tan(1.2));
    CHECK(g == Approx(oracle).epsilon(1e-14));
    // atan2(0.60519, 0.10297)
    CHECK(g == Approx(1.40225).epsilon(1e-5));
    CHECK(target_direction({-0.65, 1.0}, {0.0, 1.2, TargetId::Tp1}) == Approx(-g));
    CHECK_THROWS_AS(target_direction({0.6, 1.0}, {0.6, 1.0, TargetId::Tp1}), Error);
    // Same point one turn around the wind axis.
    CHECK_THROWS_AS(target_direction({0.6 + 2 * pi, 1.0}, {0.6, 1.0, TargetId::Tp1}), Error);
}

TEST_CASE("course unwrapping") {
    CHECK(unwrap_course(-1.0, 1.0) == -1.0);
    CHECK(unwrap_course(-1.0, 5.9) == Approx(2 * pi - 1.0));
    CHECK(unwrap_course(-1.0, 5.9) == Approx(5.2832).epsilon(1e-4));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> a(-20, 20);
    for (int i = 0; i < 1000; ++i) {
        const double x = a(rng), p = a(rng);
        const double u = unwrap_course(x, p);
        CHECK(std::abs(u - p) <= pi + 1e-12);
        CHECK(unwrap_course(u, p) == u);
        CHECK(std::remainder(u - x, 2 * pi) == Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("eight-down branch passes through the downward direction") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> a(-10, 10);
    for (int i = 0; i < 1000; ++i) {
        const double raw = a(rng), prev = a(rng);
        const double b = eight_down_branch(raw, prev);
        CHECK(std::remainder(b - raw, 2 * pi) == Approx(0.0).epsilon(1e-9));
        const double lo = std::min(b, prev), hi = std::max(b, prev);
        // Some odd multiple of pi lies strictly between the two courses.
        const double k = std::ceil((lo / pi - 1.0) / 2.0);
        const double odd = (2.0 * k + 1.0) * pi;
        const double next_odd = odd > lo ? odd : odd + 2 * pi;
        CHECK(next_odd < hi);
        CHECK(hi - lo < 2 * pi);
    }
    // Heading left-down at the TP1 switch, the new course is reached by
    // turning through pi rather than through 0.
    CHECK(eight_down_branch(-2.0, 2.0) == Approx(2 * pi - 2.0));
}

TEST_CASE("trigger") {
    const TargetPoint tp{0.6, 1.0, TargetId::Tp1};
    CHECK(trigger({0.6, 1.0}, tp, 1e-6));
    const double m = trigger_metric({0.65, 1.02}, tp);
    CHECK(m == Approx(0.05 * 0.05 * std::sin(1.0) * std::sin(1.0) + 0.02 * 0.02).epsilon(1e-12));
    CHECK(m == Approx(0.002171).epsilon(1e-3));
    CHECK(trigger({0.65, 1.02}, tp, 0.1));
    CHECK_FALSE(trigger({0.65, 1.02}, tp, 0.04));
    CHECK(trigger({0.6 + 2 * pi, 1.0}, tp, 0.01));

    CHECK(trigger_metric({0.6, 1.0}, tp) == 0.0);
    for (double d : {0.01, 0.05, 0.2}) {
        CHECK(trigger_metric({0.6 + d, 1.0}, tp) == Approx(trigger_metric({0.6 - d, 1.0}, tp)));
        CHECK(trigger_metric({0.6, 1.0 + d}, tp) == Approx(trigger_metric({0.6, 1.0 - d}, tp)));
        CHECK(trigger_metric({0.6 + 2 * d, 1.0}, tp) > trigger_metric({0.6 + d, 1.0}, tp));
        CHECK(trigger_metric({0.6, 1.0 + 2 * d}, tp) > trigger_metric({0.6, 1.0 + d}, tp));
        CHECK(trigger_metric({0.6 + d, 1.0 + d}, tp) > 0.0);
    }
}

TEST_CASE("transfer target") {
    CycleConfig cfg;
    CHECK(tp3_position({0.1, 1.0}, cfg).theta == Approx(pi / 2));
    CHECK(tp3_position({0.1, 1.5}, cfg).theta == Approx(1.8));
    CHECK(tp3_position({0.1, 1.5}, cfg).phi == 0.4);
    for (double th = 0.1; th < 3.0; th += 0.1) CHECK(tp3_position({0.0, th}, cfg).theta >= pi / 2);
}

TEST_CASE("cycle state machine") {
    const CycleConfig cfg;
    const SpherePosition at_tp1{cfg.phi_tp1, cfg.theta_tp1};
    const SpherePosition away{0.0, 0.7};

    auto [p, tp] = cycle_step(CyclePhase::PowerTp1, at_tp1, 280.0, cfg);
    CHECK(p == CyclePhase::Transfer);
    CHECK(tp.id == TargetId::Tp3);

    std::tie(p, tp) = cycle_step(CyclePhase::PowerTp1, at_tp1, 200.0, cfg);
    CHECK(p == CyclePhase::PowerTp2);
    CHECK(tp.id == TargetId::Tp2);
    CHECK(tp.phi == -cfg.phi_tp1);

    std::tie(p, tp) = cycle_step(CyclePhase::PowerTp1, away, 280.0, cfg);
    CHECK(p == CyclePhase::PowerTp1);
    CHECK(tp.id == TargetId::Tp1);

    std::tie(p, tp) = cycle_step(CyclePhase::PowerTp2, {-cfg.phi_tp1, cfg.theta_tp1}, 280.0, cfg);
    CHECK(p == CyclePhase::PowerTp1);

    CHECK(cycle_step(CyclePhase::Transfer, {0.3, 1.0}, 300.0, cfg).first == CyclePhase::Transfer);
    CHECK(cycle_step(CyclePhase::Transfer, {0.3, 1.06}, 300.0, cfg).first == CyclePhase::Return);
    CHECK(cycle_step(CyclePhase::Return, {0.3, 1.4}, 131.0, cfg).first == CyclePhase::Return);
    CHECK(cycle_step(CyclePhase::Return, {0.3, 1.4}, 129.0, cfg).first == CyclePhase::Restart);
    CHECK(cycle_step(CyclePhase::Restart, {0.3, 1.4}, 120.0, cfg).first == CyclePhase::Restart);
    CHECK(cycle_step(CyclePhase::Restart, {0.3, 0.9}, 120.0, cfg).first == CyclePhase::PowerTp1);
    CHECK(cycle_step(CyclePhase::Restart, at_tp1, 120.0, cfg).first == CyclePhase::PowerTp1);

    SUBCASE("random traces only take the allowed edges") {
        const std::set<std::pair<CyclePhase, CyclePhase>> edges{
            {CyclePhase::PowerTp1, CyclePhase::PowerTp2}, {CyclePhase::PowerTp2, CyclePhase::PowerTp1},
            {CyclePhase::PowerTp1, CyclePhase::Transfer}, {CyclePhase::Transfer, CyclePhase::Return},
            {CyclePhase::Return, CyclePhase::Restart},    {CyclePhase::Restart, CyclePhase::PowerTp1},
        };
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> phi(-1.0, 1.0), theta(0.4, 1.9), len(100, 320), near(-0.1, 0.1);
        std::uniform_int_distribution<int> pick(0, 3);
        std::set<CyclePhase> seen;
        for (int trace = 0; trace < 200; ++trace) {
            CyclePhase phase = CyclePhase::PowerTp1;
            for (int k = 0; k < 500; ++k) {
                SpherePosition pos{phi(rng), theta(rng)};
                const int mode = pick(rng);
                if (mode == 0) pos = {cfg.phi_tp1 + near(rng), cfg.theta_tp1 + near(rng)};
                if (mode == 1) pos = {-cfg.phi_tp1 + near(rng), cfg.theta_tp1 + near(rng)};
                const auto [next, target] = cycle_step(phase, pos, len(rng), cfg);
                if (next != phase) CHECK(edges.contains({phase, next}));
                CHECK(target.id == active_target(next, pos, cfg).id);
                seen.insert(next);
                phase = next;
            }
        }
        CHECK(seen.size() == 5);
    }
}

TEST_CASE("phase names round trip") {
    for (auto p : {CyclePhase::PowerTp1, CyclePhase::PowerTp2, CyclePhase::Transfer, CyclePhase::Return,
                   CyclePhase::Restart}) {
        CHECK(phase_from_string(to_string(p)) == p);
    }
    CHECK_THROWS_AS(phase_from_string("landing"), Error);
}

TEST_CASE("curve radius") {
    const KiteParams p;
    CHECK(curve_radius(0.3, p) == Approx(66.67).epsilon(1e-4));
    CHECK(curve_radius(0.6, p) == Approx(curve_radius(0.3, p) / 2.0));
}

TEST_CASE("orientation set value") {
    const KiteParams kp;
    SUBCASE("no wind offset leaves the course unchanged") {
        const WindCondition calm{0.0};
        const auto sp = setpoint_psi({0.65, 1.0}, {0.0, 1.2, TargetId::Tp1}, 1.0, -1.0, calm, kp);
        CHECK(sp.gamma_s == Approx(1.40225).epsilon(1e-5));
        CHECK(sp.psi_s == Approx(sp.gamma_s).epsilon(1e-12));
    }
    SUBCASE("switch step maps through the inversion") {
        const WindCondition w{10.0};
        const SpherePosition pos{0.5, 1.0};
        const auto a = setpoint_psi(pos, tp1(CycleConfig{}), 0.0, 0.0, w, kp);
        const auto b = setpoint_psi(pos, tp2(CycleConfig{}), a.gamma_s, 0.0, w, kp);
        CHECK(a.psi_s == Approx(model::psi_from_gamma(a.gamma_s, 1.0, 0.0, w, kp)));
        CHECK(model::wrap_angle(b.psi_s) == Approx(model::psi_from_gamma(b.gamma_s, 1.0, 0.0, w, kp)));
        CHECK(std::abs(b.psi_s - b.gamma_s) < pi);
    }
    SUBCASE("continuous between switches") {
        const WindCondition w{10.0};
        const TargetPoint tp = tp2(CycleConfig{});
        double prev_gamma = target_direction({0.5, 0.8}, tp);
        double prev_psi = setpoint_psi(prev_gamma, 0.8, 1.0, w, kp);
        for (int k = 1; k <= 200; ++k) {
            const double s = k / 200.0;
            const auto sp = setpoint_psi({0.5 - 0.4 * s, 0.8 + 0.1 * s}, tp, prev_gamma, 1.0, w, kp);
            CHECK(std::abs(sp.psi_s - prev_psi) < 0.05);
            prev_gamma = sp.gamma_s;
            prev_psi = sp.psi_s;
        }
    }
    SUBCASE("unreachable course is reported") {
        const WindCondition w{10.0};
        CHECK_THROWS_AS(setpoint_psi(pi / 2, 1.55, 0.2, w, kp), Error);
    }
}

TEST_CASE("course tracker") {
    CourseTracker c;
    CHECK_FALSE(c.primed());
    CHECK(c.update(3.0, TargetId::Tp1) == 3.0);
    CHECK(c.update(-3.0, TargetId::Tp1) == Approx(2 * pi - 3.0));
    const double switched = c.update(-0.5, TargetId::Tp2);
    CHECK(switched == Approx(eight_down_branch(-0.5, 2 * pi - 3.0)));
    CHECK(c.update(0.5, TargetId::Tp3) == Approx(unwrap_course(0.5, switched)));
}

TEST_CASE("closed-loop pattern geometry") {
    const SimulationResult& run = nominal_run();
    REQUIRE(run.completed());
    const CycleConfig cfg = load_config(KITEPOWER_CONFIG_DIR "/nominal.cfg").cycle;

    SUBCASE("unwrapped course differs from the raw course by whole turns") {
        for (const auto& r : run.telemetry) {
            const SpherePosition pos{r.phi, r.theta};
            const double raw = target_direction(pos, active_target(r.phase, pos, cfg));
            const double turns = (r.gamma_s - raw) / (2 * pi);
            CHECK(std::abs(turns - std::round(turns)) < 1e-9);
        }
    }

    SUBCASE("figure eights: alternating curves, crossing phi = 0 between switches") {
        std::vector<std::size_t> switches;
        for (std::size_t i = 1; i < run.telemetry.size(); ++i) {
            const auto a = run.telemetry[i - 1].phase, b = run.telemetry[i].phase;
            if (is_power(a) && is_power(b) && a != b) switches.push_back(i);
        }
        REQUIRE(switches.size() >= 6);
        int prev_sign = 0;
        for (std::size_t s = 0; s + 1 < switches.size(); ++s) {
            bool pattern = true;
            for (std::size_t i = switches[s]; i < switches[s + 1]; ++i) pattern = pattern && is_power(run.telemetry[i].phase);
            if (!pattern) {
                prev_sign = 0;
                continue;
            }
            bool crossed = false;
            double turn = 0.0;
            for (std::size_t i = switches[s]; i < switches[s + 1]; ++i) {
                crossed = crossed || (run.telemetry[i].phi * run.telemetry[i + 1].phi <= 0.0);
                if (i < switches[s] + 100) turn += run.telemetry[i].delta;
            }
            CAPTURE(s);
            CHECK(crossed);
            const int sign = turn > 0 ? 1 : -1;
            if (prev_sign != 0) CHECK(sign == -prev_sign);
            prev_sign = sign;
        }
    }
}

}  // TEST_SUITE
