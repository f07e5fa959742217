#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <doctest.h>

#include "reslab/errors.hpp"
#include "reslab/radial_ode.hpp"

using namespace reslab;
using std::numbers::pi;

namespace {

const ChannelPotential threshold_well() { return ChannelPotential(make_square_well(pi * pi / 4, 1.0)); }

// Bessel representation of the regular zero-energy solution for W = e^{-r}:
// u = A J0(2 e^{-r/2}) + B Y0(2 e^{-r/2}) with u(0) = 0, u'(0) = 1.
std::pair<double, double> exponential_constants() {
    const double j0 = std::cyl_bessel_j(0.0, 2.0), y0 = std::cyl_neumann(0.0, 2.0);
    const double j1 = std::cyl_bessel_j(1.0, 2.0), y1 = std::cyl_neumann(1.0, 2.0);
    const double det = j0 * y1 - y0 * j1;
    const double A = -y0 / det, B = j0 / det;
    const double C1 = -B / pi;
    const double C0 = A + 2.0 * B * std::numbers::egamma / pi;
    return {C0, C1};
}

} // namespace

TEST_SUITE("radial_ode") {

TEST_CASE("free equation gives u = r") {
    const ChannelPotential cp(make_zero());
    const auto sol = integrate_radial(cp, 0.0, 40.0, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.size(); ++i) worst = std::max(worst, std::abs(sol.u[i] - sol.r[i]));
    CHECK(worst < 1e-10);
    const auto fit = asymptotic_fit(sol, cp);
    CHECK(std::abs(fit.C0) < 1e-12);
    CHECK(fit.C1 == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("threshold square well matches the analytic solution") {
    const auto cp = threshold_well();
    const auto sol = integrate_radial(cp, 0.0);
    const double k = pi / 2;
    double worst = 0.0;
    for (double r = 0.05; r < 20.0; r += 0.05) {
        const double exact = r < 1.0 ? std::sin(k * r) / k : 1.0 / k;
        worst = std::max(worst, std::abs(sol.value(r).real() - exact));
    }
    CHECK(worst < 1e-9);
    const auto fit = asymptotic_fit(sol, cp);
    CHECK(fit.C0 * k == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(fit.C1) < 1e-8);
    CHECK(classify_zero_energy(cp).kind == ZeroEnergyKind::strong_resonance);
}

TEST_CASE("detuned wells are regular with the matched constants") {
    for (double s : {-0.2, 0.2}) {
        const double k = pi / 2 + s;
        const ChannelPotential cp(make_square_well(k * k, 1.0));
        const auto v = classify_zero_energy(cp);
        CHECK(v.kind == ZeroEnergyKind::regular);
        CHECK(v.fit.C1 == doctest::Approx(std::cos(k)).epsilon(1e-9));
        CHECK(v.fit.C0 == doctest::Approx(std::sin(k) / k - std::cos(k)).epsilon(1e-9));
    }
}

TEST_CASE("bargmann pair is reproduced and classified as a strong resonance") {
    const auto bp = make_bargmann_pair();
    const ChannelPotential cp(bp.potential);
    const auto sol = integrate_radial(cp, 0.0);
    double worst = 0.0;
    for (double r = 0.01; r <= 20.0; r += 0.01) worst = std::max(worst, std::abs(sol.value(r).real() - bp.u(r)));
    CHECK(worst < 1e-8);
    const auto fit = asymptotic_fit(sol, cp);
    CHECK(fit.C0 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(fit.C1) < 1e-6);
    CHECK(classify_zero_energy(cp).kind == ZeroEnergyKind::strong_resonance);
    CHECK_THROWS_AS(integrate_radial(ChannelPotential(bp.potential, 1.0), 0.0), UnsupportedError);
}

TEST_CASE("exponential potential matches the Bessel oracle") {
    const ChannelPotential cp(make_exponential(1.0));
    const auto v = classify_zero_energy(cp);
    CHECK(v.kind == ZeroEnergyKind::regular);
    const auto [C0, C1] = exponential_constants();
    CHECK(v.fit.C0 == doctest::Approx(C0).epsilon(1e-8));
    CHECK(v.fit.C1 == doctest::Approx(C1).epsilon(1e-8));
    CHECK(v.fit.remainder_h > 0);
    CHECK(v.fit.remainder_g > v.fit.remainder_h);
}

TEST_CASE("fit constants satisfy the derivative identity") {
    const ChannelPotential cp(make_exponential(2.0));
    const auto sol = integrate_radial(cp, 0.0);
    const auto W = [&](double r) { return cp.total(r); };
    for (auto [t, s] : {std::pair{5.0, 10.0}, {2.0, 25.0}, {0.5, 18.0}}) {
        const cplx lhs = sol.derivative(s) - sol.derivative(t);
        const cplx rhs = -integrate_against(sol, t, s, W);
        CHECK(std::abs(lhs - rhs) < 1e-9 * std::abs(sol.derivative(s)) + 1e-12);
    }
}

TEST_CASE("complex mu: sinh solution with rescaling and a constant wronskian") {
    const ChannelPotential cp(make_zero());
    const auto sol = integrate_radial(cp, cplx(0.0, 1.0), 400.0, 1e-12);
    CHECK(sol.scaled());
    for (double r : {1.0, 10.0, 200.0, 300.0})
        CHECK(sol.value(r).real() == doctest::Approx(std::sinh(r)).epsilon(1e-9));

    const cplx mu(0.7, 0.2);
    const auto reg = integrate_radial(cp, mu, 40.0, 1e-12);
    RadialSolution out = reg;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const cplx e = std::exp(cplx(0, 1) * mu * out.r[i]);
        out.u[i] = e;
        out.du[i] = cplx(0, 1) * mu * e;
        out.ddu[i] = -mu * mu * e;
    }
    const auto w = wronskian(reg, out);
    double spread = 0.0;
    for (const auto& x : w) spread = std::max(spread, std::abs(x + 1.0));
    CHECK(spread < 1e-8);
}

TEST_CASE("classification is stable under tolerance refinement") {
    for (const auto& p : {make_exponential(1.0), make_square_well(pi * pi / 4, 1.0), make_exponential(0.01)}) {
        const ChannelPotential cp(p);
        RadialOptions a, b;
        a.tol = 1e-10;
        b.tol = 5e-11;
        CHECK(classify_zero_energy(cp, 1e-6, a).kind == classify_zero_energy(cp, 1e-6, b).kind);
    }
}

TEST_CASE("higher channels") {
    const ChannelPotential free1(make_zero(), 1.0);
    const auto sol = integrate_radial(free1, 0.0, 40.0, 1e-12);
    for (double r : {0.5, 3.0, 20.0}) CHECK(sol.value(r).real() / (r * r) == doctest::Approx(sol.value(1.0).real()).epsilon(1e-8));
    CHECK(classify_zero_energy(free1).kind == ZeroEnergyKind::regular);
}

TEST_CASE("bound states") {
    CHECK(bound_states(ChannelPotential(make_zero())).empty());
    CHECK(bound_states(ChannelPotential(make_exponential(1.0))).empty());

    const ChannelPotential deep(make_square_well(4.0, 2.0));
    const auto bs = bound_states(deep);
    REQUIRE(bs.size() == 1);

    // K cos(K a) + kappa sin(K a) = 0 with K^2 + kappa^2 = V0
    auto f = [](double kappa) {
        const double K = std::sqrt(4.0 - kappa * kappa);
        return K * std::cos(2.0 * K) + kappa * std::sin(2.0 * K);
    };
    boost::math::tools::eps_tolerance<double> tol(50);
    auto [lo, hi] = boost::math::tools::bisect(f, 1e-6, 2.0 - 1e-9, tol);
    const double kappa = 0.5 * (lo + hi);
    CHECK(bs[0].energy == doctest::Approx(-kappa * kappa).epsilon(1e-9));
    CHECK(bs[0].nodes == 0);

    const auto& ef = bs[0].eigenfunction;
    const double norm2 = integrate_against(ef, ef.r_min(), ef.r_max(), [&](double r) { return ef.value(r).real(); }).real();
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(count_nodes(deep, -0.5 * kappa * kappa) == 1);
    CHECK(count_nodes(deep, -2.0 * kappa * kappa) == 0);
}

}
