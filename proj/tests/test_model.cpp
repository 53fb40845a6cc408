#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kitepower/error.hpp"
#include "kitepower/model.hpp"

using namespace kitepower;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

KiteParams paper_kite() { return KiteParams{}; }

// Reference right-hand side written out independently of the library.
StateDerivative reference_rates(const KiteState& s, double delta, double l_dot, double v_w, const KiteParams& p) {
    const double v_a = p.E * (v_w * std::cos(s.theta) - l_dot);
    StateDerivative d;
    d.theta_dot = v_a / s.l * std::cos(s.psi) - v_w / s.l * std::sin(s.theta);
    d.phi_dot = -v_a / (s.l * std::sin(s.theta)) * std::sin(s.psi);
    d.psi_dot = p.g_k * v_a * delta + d.phi_dot * std::cos(s.theta);
    d.l_dot = l_dot;
    return d;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(b)); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("position examples") {
    auto p = model::position({0.0, 0.0, 0.0, 300.0});
    CHECK(p[0] == Approx(300.0));
    CHECK(p[1] == Approx(0.0));
    CHECK(p[2] == Approx(0.0));

    p = model::position({0.0, pi / 2, 0.0, 100.0});
    CHECK(p[0] == Approx(0.0).epsilon(1e-12));
    CHECK(p[1] == Approx(0.0));
    CHECK(p[2] == Approx(-100.0));

    p = model::position({0.4, 1.0, 0.0, 200.0});
    CHECK(p[0] == Approx(108.06).epsilon(1e-4));
    CHECK(p[1] == Approx(65.54).epsilon(1e-4));
    CHECK(p[2] == Approx(-155.01).epsilon(1e-4));
    CHECK(std::hypot(p[0], p[1], p[2]) == Approx(200.0));
}

TEST_CASE("air path speed examples") {
    const KiteParams kp = paper_kite();
    const WindCondition w{10.0};
    CHECK(model::air_path_speed({0, 0.0, 0, 200}, 0.0, w, kp) == Approx(50.0));
    CHECK(model::air_path_speed({0, pi / 2, 0, 200}, -1.0, w, kp) == Approx(5.0));
    CHECK(model::air_path_speed({0, 1.05, 0, 200}, 3.0, w, kp) == Approx(9.878).epsilon(1e-4));
}

TEST_CASE("derivatives examples") {
    const KiteParams kp = paper_kite();
    const WindCondition w{10.0};

    SUBCASE("equilibrium at arctan(E) for psi = 0") {
        const KiteState s{0.0, std::atan(kp.E), 0.0, 200.0};
        const auto d = model::derivatives(s, {0.0, 0.0}, model::air_path_speed(s, 0.0, w, kp), w, kp);
        CHECK(std::abs(d.theta_dot) < 1e-12);
        CHECK(d.phi_dot == 0.0);
    }

    SUBCASE("crosswind turn") {
        const KiteState s{0.0, 1.0, 0.5, 200.0};
        const double v_a = model::air_path_speed(s, 0.0, w, kp);
        CHECK(v_a == Approx(27.015).epsilon(1e-4));
        const auto d = model::derivatives(s, {0.1, 0.0}, v_a, w, kp);
        CHECK(d.phi_dot == Approx(-0.07699).epsilon(1e-3));
        CHECK(d.psi_dot == Approx(0.05 * v_a * 0.1 + d.phi_dot * std::cos(1.0)));
        // 0.135 - 0.0416
        CHECK(d.psi_dot == Approx(0.09348).epsilon(1e-3));
    }

    SUBCASE("matches the reference right-hand side") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> th(0.1, 3.0), ps(-pi, pi), ln(50, 400), de(-0.3, 0.3), ld(-5, 3);
        for (int i = 0; i < 1000; ++i) {
            const KiteState s{0.3, th(rng), ps(rng), ln(rng)};
            const double delta = de(rng);
            const double l_dot = ld(rng);
            const double v_a = model::air_path_speed(s, l_dot, w, kp);
            const auto d = model::derivatives(s, {delta, l_dot}, v_a, w, kp);
            const auto r = reference_rates(s, delta, l_dot, w.v_w, kp);
            CHECK(d.theta_dot == Approx(r.theta_dot).epsilon(1e-12));
            CHECK(d.phi_dot == Approx(r.phi_dot).epsilon(1e-12));
            CHECK(d.psi_dot == Approx(r.psi_dot).epsilon(1e-12));
            CHECK(d.l_dot == l_dot);
        }
    }

    SUBCASE("guard band") {
        CHECK_THROWS_AS(model::derivatives({0, 0.0, 0, 200}, {}, 10.0, w, kp), Error);
        CHECK_THROWS_AS(model::derivatives({0, pi, 0, 200}, {}, 10.0, w, kp), Error);
        CHECK_THROWS_AS(model::derivatives({0, 1.0, 0, 0.0}, {}, 10.0, w, kp), Error);
        try {
            model::derivatives({0, 1e-8, 0, 200}, {}, 10.0, w, kp);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DegenerateGeometry);
        }
    }
}

TEST_CASE("psi_dot uses the supplied air path speed in the steering term only") {
    const KiteParams kp = paper_kite();
    const WindCondition w{10.0};
    const KiteState s{0.0, 1.0, 0.5, 200.0};
    const auto a = model::derivatives(s, {0.1, 0.0}, 20.0, w, kp);
    const auto b = model::derivatives(s, {0.1, 0.0}, 30.0, w, kp);
    CHECK(a.theta_dot == b.theta_dot);
    CHECK(a.phi_dot == b.phi_dot);
    CHECK(b.psi_dot - a.psi_dot == Approx(kp.g_k * 10.0 * 0.1));
}

TEST_CASE("crossterm examples") {
    CHECK(model::crossterm({0, 1.0, 0.0, 200}, 27.0) == 0.0);
    CHECK(std::abs(model::crossterm({0, pi / 2, 0.7, 200}, 27.0)) < 1e-15);
    const KiteParams kp = paper_kite();
    const WindCondition w{10.0};
    const KiteState s{0.0, 1.0, 0.5, 200.0};
    const double v_a = model::air_path_speed(s, 0.0, w, kp);
    CHECK(model::crossterm(s, v_a) == Approx(-0.04160).epsilon(1e-3));
    const auto d = model::derivatives(s, {0.0, 0.0}, v_a, w, kp);
    CHECK(model::crossterm(s, v_a) == Approx(d.phi_dot * std::cos(s.theta)).epsilon(1e-12));
}

TEST_CASE("flight direction from rates") {
    CHECK(model::flight_direction_kinematic(0.0, 0.3, 1.0) == 0.0);
    CHECK(model::flight_direction_kinematic(-0.2, 0.0, 1.0) == Approx(pi / 2));
    CHECK(model::flight_direction_kinematic(-0.077, 0.041, 1.0) == Approx(1.0065).epsilon(1e-4));
    CHECK_THROWS_AS(model::flight_direction_kinematic(0.0, 0.0, 1.0), Error);
}

TEST_CASE("flight direction from orientation") {
    const KiteParams kp = paper_kite();
    const WindCondition w{10.0};
    CHECK(model::gamma_from_psi(0.0, 1.0, 0.0, w, kp) == 0.0);
    const double c1 = w.v_w * std::sin(1.0) / (kp.E * w.v_w * std::cos(1.0));
    CHECK(model::wind_offset(1.0, 0.0, w, kp) == Approx(c1));
    CHECK(c1 == Approx(0.31149).epsilon(1e-4));
    CHECK(model::gamma_from_psi(pi / 2, 1.0, 0.0, w, kp) == Approx(1.8725).epsilon(1e-4));
    CHECK(model::psi_from_gamma(std::atan2(1.0, -c1), 1.0, 0.0, w, kp) == Approx(pi / 2).epsilon(1e-12));
    CHECK(model::psi_from_gamma(0.0, 1.2, 0.0, w, kp) == 0.0);

    // No wind offset: orientation and direction coincide.
    const WindCondition calm{0.0};
    CHECK(model::psi_from_gamma(0.8, 1.0, -2.0, calm, kp) == Approx(0.8).epsilon(1e-12));

    CHECK_THROWS_AS(model::wind_offset(pi / 2, 0.0, w, kp), Error);
    // theta = 1.5 with reel-in: c1 > 1, crosswind directions are unreachable.
    CHECK(model::wind_offset(1.55, 0.2, w, kp) > 1.0);
    CHECK_THROWS_AS(model::psi_from_gamma(pi / 2, 1.55, 0.2, w, kp), Error);
    CHECK(std::isfinite(model::psi_from_gamma_clamped(pi / 2, 1.55, 0.2, w, kp)));
}

TEST_CASE("inverse pair psi -> gamma -> psi") {
    const KiteParams kp = paper_kite();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(0.2, 1.4), ps(-3.1, 3.1), ld(-4, 2), vw(4, 15);
    int tested = 0;
    for (int i = 0; i < 5000; ++i) {
        const WindCondition w{vw(rng)};
        const double theta = th(rng), l_dot = ld(rng), psi = ps(rng);
        const double c1 = model::wind_offset(theta, l_dot, w, kp);
        if (!(c1 > 0.0 && c1 < 1.0)) continue;
        const double gamma = model::gamma_from_psi(psi, theta, l_dot, w, kp);
        CHECK(model::psi_from_gamma(gamma, theta, l_dot, w, kp) == Approx(psi).epsilon(1e-12));
        ++tested;
    }
    CHECK(tested > 1000);
}

TEST_CASE("equilibrium theta") {
    const KiteParams kp = paper_kite();
    const WindCondition w{10.0};
    CHECK(model::equilibrium_theta(0.0, 0.0, w, kp) == Approx(std::atan(5.0)));
    CHECK(model::equilibrium_theta(0.0, 0.0, w, kp) == Approx(1.37340).epsilon(1e-5));
    CHECK(model::equilibrium_theta(0.0, -5.0, w, kp) == Approx(1.8861).epsilon(1e-4));
    CHECK_THROWS_AS(model::equilibrium_theta(0.0, -11.0, w, kp), Error);

    SUBCASE("zeroes theta_dot over the grid") {
        for (int i = 0; i <= 12; ++i) {
            for (int j = 0; j <= 16; ++j) {
                const double psi = 0.1 * i;
                const double l_dot = (-0.5 + 0.05 * j) * w.v_w;
                const double theta = model::equilibrium_theta(psi, l_dot, w, kp);
                const KiteState s{0.0, theta, psi, 200.0};
                const auto d = model::derivatives(s, {0.0, l_dot}, model::air_path_speed(s, l_dot, w, kp), w, kp);
                CHECK(std::abs(d.theta_dot) < 1e-9);
            }
        }
    }

    SUBCASE("strictly decreasing in winch speed") {
        double prev = model::equilibrium_theta(0.0, -0.9 * w.v_w, w, kp);
        for (int j = 1; j <= 180; ++j) {
            const double theta = model::equilibrium_theta(0.0, (-0.9 + 0.01 * j) * w.v_w, w, kp);
            CHECK(theta < prev);
            prev = theta;
        }
    }

    SUBCASE("reeling in reduces the force at equilibrium") {
        double prev = std::numeric_limits<double>::infinity();
        double first_rise = 0.0;
        for (int j = 0; j <= 90; ++j) {
            const double l_dot = -0.01 * j * w.v_w;
            const KiteState s{0.0, model::equilibrium_theta(0.0, l_dot, w, kp), 0.0, 200.0};
            const double F = model::tether_force(model::air_path_speed(s, l_dot, w, kp), kp);
            if (F >= prev && first_rise == 0.0) first_rise = l_dot;
            prev = F;
        }
        CAPTURE(first_rise);
        CHECK(first_rise == 0.0);
    }

    SUBCASE("equilibrium force follows sin^2(theta)") {
        // v_a cos(psi) = v_w sin(theta) at equilibrium, so F = F_w sin^2(theta) / cos^2(psi)
        // with F_w the force at v_a = v_w: largest at theta = pi/2.
        const double F_w = 0.5 * kp.rho * kp.C_R * kp.A * w.v_w * w.v_w;
        for (double psi : {0.0, 0.5}) {
            for (int j = 0; j <= 90; ++j) {
                const double l_dot = -0.01 * j * w.v_w;
                const double theta = model::equilibrium_theta(psi, l_dot, w, kp);
                const KiteState s{0.0, theta, psi, 200.0};
                const double F = model::tether_force(model::air_path_speed(s, l_dot, w, kp), kp);
                const double oracle = F_w * std::pow(std::sin(theta) / std::cos(psi), 2);
                CHECK(F == Approx(oracle).epsilon(1e-12));
                if (psi == 0.0 && theta > pi / 2) CHECK(F < F_w);
            }
        }
    }
}

TEST_CASE("minimum winch speed bound") {
    KiteParams kp = paper_kite();
    const WindCondition w{10.0};
    kp.v_a_min = 5.0;
    CHECK(model::min_winch_speed_bound(pi / 2, w, kp) == Approx(-1.0));
    CHECK(model::min_winch_speed_bound(1.9, w, kp) == Approx(-4.2329).epsilon(1e-4));
    kp.v_a_min = 0.0;
    CHECK(model::min_winch_speed_bound(0.0, w, kp) == Approx(10.0));
    kp.v_a_min = 5.0;
    const double bound = model::min_winch_speed_bound(1.2, w, kp);
    CHECK(model::air_path_speed({0, 1.2, 0, 200}, bound, w, kp) == Approx(5.0));
}

TEST_CASE("tether force") {
    const KiteParams kp = paper_kite();
    CHECK(model::tether_force(0.0, kp) == 0.0);
    CHECK(model::tether_force(37.5, kp) == Approx(17718.75));
    CHECK(model::tether_force(40.0, kp) == Approx(4.0 * model::tether_force(20.0, kp)));
    CHECK(model::tether_force(-3.0, kp) == 0.0);
    CHECK(model::is_stalled(-3.0));
    CHECK_FALSE(model::is_stalled(3.0));
}

TEST_CASE("integrator") {
    const KiteParams kp = paper_kite();
    const WindCondition w{10.0};

    SUBCASE("fixed point stays put") {
        KiteState s{0.2, std::atan(kp.E), 0.0, 200.0};
        for (int i = 0; i < 500; ++i) {
            const KiteState n = model::integrate_step(s, {0.0, 0.0}, w, kp, 0.02);
            CHECK(std::abs(n.theta - s.theta) < 1e-10);
            CHECK(n.phi == s.phi);
            CHECK(n.psi == s.psi);
            s = n;
        }
    }

    SUBCASE("tether length is exact") {
        KiteState s{0.0, 0.8, 1.0, 150.0};
        for (int i = 0; i < 100; ++i) s = model::integrate_step(s, {0.05, 2.0}, w, kp, 0.02);
        CHECK(s.l == Approx(150.0 + 100 * 0.02 * 2.0).epsilon(1e-13));
    }

    SUBCASE("fourth order convergence") {
        const KiteState s0{0.1, 0.9, 1.1, 200.0};
        const ControlInput u{0.08, 1.5};
        auto run = [&](double dt, double horizon) {
            KiteState s = s0;
            const int n = static_cast<int>(std::lround(horizon / dt));
            for (int i = 0; i < n; ++i) s = model::integrate_step(s, u, w, kp, dt);
            return s;
        };
        const double horizon = 4.0;
        const double dt = 0.2;
        const KiteState ref = run(dt / 100.0, horizon);
        auto err = [&](const KiteState& s) {
            return std::abs(s.theta - ref.theta) + std::abs(s.phi - ref.phi) + std::abs(s.psi - ref.psi);
        };
        const double e1 = err(run(dt, horizon));
        const double e2 = err(run(dt / 2.0, horizon));
        const double ratio = e1 / e2;
        MESSAGE("error ratio for halved step: " << ratio);
        CHECK(ratio > 12.0);
        CHECK(ratio < 20.0);
    }

    SUBCASE("derivatives match central differences of the trajectory") {
        const double h = 1e-4;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> th(0.3, 1.4), ps(-3, 3), ln(100, 300), de(-0.3, 0.3), ld(-4, 2);
        for (int i = 0; i < 200; ++i) {
            const KiteState s{0.2, th(rng), ps(rng), ln(rng)};
            const ControlInput u{de(rng), ld(rng)};
            const KiteState fwd = model::integrate_step(s, u, w, kp, h);
            const KiteState back = model::integrate_step(s, u, w, kp, -h);
            const auto d = model::derivatives(s, u, model::air_path_speed(s, u.v_winch, w, kp), w, kp);
            CHECK(rel((fwd.theta - back.theta) / (2 * h), d.theta_dot) < 1e-6);
            CHECK(rel((fwd.phi - back.phi) / (2 * h), d.phi_dot) < 1e-6);
            CHECK(rel((fwd.psi - back.psi) / (2 * h), d.psi_dot) < 1e-6);
        }
    }
}

TEST_CASE("wrap angle") {
    CHECK(model::wrap_angle(0.0) == 0.0);
    CHECK(model::wrap_angle(pi) == Approx(pi));
    CHECK(model::wrap_angle(-pi) == Approx(pi));
    CHECK(model::wrap_angle(3 * pi / 2) == Approx(-pi / 2));
    CHECK(model::wrap_angle(-7.0) == Approx(-7.0 + 2 * pi));
}

}  // TEST_SUITE
