#include <array>
#include <cmath>
#include <map>
#include <vector>

#include <doctest.h>

#include "reslab/errors.hpp"
#include "reslab/ground_state.hpp"

using namespace reslab;

namespace {

const GroundState& solved(double p) {
    static std::map<double, GroundState> cache;
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, solve_ground_state(p)).first;
    return it->second;
}

// Coarse shooting oracle: RK4 at step 1e-3, bisection on the sign-change / turn-up dichotomy.
double shooting_oracle(double p) {
    auto shoot = [p](double a) {
        const double h = 1e-3;
        double r = 1e-4, x = a + (a - std::pow(a, p)) / 6 * r * r, y = (a - std::pow(a, p)) / 3 * r;
        auto f = [p](double rr, double xx, double yy) {
            return std::array<double, 2>{yy, -2 * yy / rr + xx - std::pow(std::abs(xx), p) * (xx < 0 ? -1 : 1)};
        };
        while (r < 40) {
            const auto k1 = f(r, x, y);
            const auto k2 = f(r + h / 2, x + h / 2 * k1[0], y + h / 2 * k1[1]);
            const auto k3 = f(r + h / 2, x + h / 2 * k2[0], y + h / 2 * k2[1]);
            const auto k4 = f(r + h, x + h * k3[0], y + h * k3[1]);
            x += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
            y += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
            r += h;
            if (x < 0) return 1;  // overshoot
            if (y > 0) return -1; // undershoot
        }
        return 0;
    };
    double lo = 1.0, hi = 100.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (shoot(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_SUITE("ground_state") {

TEST_CASE("central values match the shooting oracle") {
    CHECK(solved(3.0).chi0 == doctest::Approx(4.337).epsilon(2e-4));
    for (double p : {1.5, 2.0, 3.0}) {
        INFO("p = " << p);
        const auto& gs = solved(p);
        CHECK(gs.converged);
        CHECK(gs.chi0 == doctest::Approx(shooting_oracle(p)).epsilon(1e-5));
    }
}

TEST_CASE("profile shape") {
    for (double p : {1.5, 2.0, 3.0}) {
        const auto& gs = solved(p);
        CHECK(std::abs(gs.dchi.front()) < 1e-3);
        const double a = gs.chi0;
        const double curv = (a - std::pow(a, p)) / 3;
        CHECK(curv < 0);
        CHECK(gs.derivative(1e-3) / 1e-3 == doctest::Approx(curv).epsilon(1e-4));
        for (std::size_t i = 1; i < gs.r.size(); ++i) {
            CHECK(gs.chi[i] > 0);
            CHECK(gs.chi[i] < gs.chi[i - 1]);
        }
    }
}

TEST_CASE("rescaling") {
    const auto& g2 = solved(2.0);
    const auto same = rescale(g2, 1.0);
    CHECK(same.chi0 == g2.chi0);
    CHECK(same.l2_norm == doctest::Approx(g2.l2_norm).epsilon(1e-14));
    const auto g4 = rescale(g2, 4.0);
    CHECK(g4.chi0 == doctest::Approx(4.0 * g2.chi0).epsilon(1e-14));
    CHECK(g4.l2_norm / g2.l2_norm == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    const auto direct = solve_ground_state_direct(2.0, 4.0);
    for (double x : {0.0, 0.5, 2.0, 5.0}) CHECK(direct.value(x) == doctest::Approx(g4.value(x)).epsilon(1e-6));
}

TEST_CASE("mass law") {
    const std::vector<double> om{0.5, 1.0, 2.0, 4.0};
    for (double p : {1.5, 2.0, 7.0 / 3.0}) {
        const auto mc = mass_curve(solved(p), om);
        INFO("p = " << p);
        CHECK(std::abs(mc.slope - (1.0 / (p - 1) - 0.75)) < 1e-3);
    }
    const auto& g2 = solved(2.0);
    const double ws = find_omega_star(g2);
    CHECK(mass(g2, ws) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(ws == doctest::Approx(std::pow(1.0 / g2.l2_norm, 4.0)).epsilon(1e-8));
    CHECK(mass(g2, 2 * ws) > 1.0);
    CHECK(mass(g2, ws / 2) < 1.0);
    CHECK_THROWS_AS(find_omega_star(solved(3.0)), PreconditionError);
}

TEST_CASE("tail asymptotics") {
    const auto t3 = tail_asymptotics(solved(3.0));
    CHECK(std::abs(t3.slope + 1.0) < 1e-2);
    CHECK(std::abs(t3.derivative_ratio + 1.0) < 1e-2);
    CHECK(t3.C0 > 0);
    CHECK(t3.correction_order >= 3.0 - 0.1);
    const auto t4 = tail_asymptotics(rescale(solved(3.0), 4.0));
    CHECK(std::abs(t4.slope + 2.0) < 2e-2);
}

TEST_CASE("kernel split") {
    for (double p : {1.5, 2.0, 3.0}) {
        const auto ks = kernel_split_residual(solved(p));
        INFO("p = " << p);
        CHECK(ks.residual < 1e-4);
        CHECK(std::abs(ks.k1_slope + 1.0) < 0.05);
        CHECK(ks.k2_slope <= -(p - 0.2));
    }
}

TEST_CASE("identities") {
    for (double p : {1.5, 2.0, 3.0}) {
        const auto rep = check_identities(solved(p));
        INFO("p = " << p);
        CHECK(std::isfinite(rep.energy));
        CHECK(rep.virial_residual < 1e-4);
        CHECK(rep.nehari_residual < 1e-4);
        CHECK(rep.strauss_margin >= 0);
        CHECK(rep.log_derivative_max < 0);
        CHECK(rep.log_derivative_min > -2.0);
    }
    CHECK(check_identities(solved(1.5)).log_derivative_min > -1.5);
    CHECK(check_identities(solved(2.0)).log_derivative_min > -1.5);
    // 1.5 sqrt(omega) is not a valid constant at p = 3
    CHECK(check_identities(solved(3.0)).log_derivative_min == doctest::Approx(-1.915).epsilon(1e-3));
}

TEST_CASE("input errors") {
    CHECK_THROWS_AS(solve_ground_state(5.5), PreconditionError);
    GroundStateOptions opt;
    opt.chi0_lo = 1.0;
    opt.chi0_hi = 1.5;
    CHECK_THROWS_AS(solve_ground_state(3.0, opt), BracketError);
    CHECK_THROWS_AS(rescale(GroundState{}, 2.0), StaleInputError);
}

}
