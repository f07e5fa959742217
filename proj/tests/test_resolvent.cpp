#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/SVD>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>
#include <doctest.h>

#include "reslab/radial_ode.hpp"
#include "reslab/resolvent.hpp"

using namespace reslab;
using std::numbers::pi;

namespace {

constexpr cplx I{0.0, 1.0};

// Jost function of the square well: e^{i mu a} (cos Ka - i mu sin(Ka)/K), K^2 = V0 + mu^2.
cplx jost(double V0, double a, cplx mu) {
    const cplx K = std::sqrt(V0 + mu * mu);
    return std::exp(I * mu * a) * (std::cos(K * a) - I * mu * std::sin(K * a) / K);
}

quad::PanelGrid unit_grid(double R, std::size_t n = 16) {
    std::vector<double> e;
    for (int k = 0; k <= int(R); ++k) e.push_back(k);
    return quad::PanelGrid(e, n);
}

double top_singular(const Eigen::MatrixXcd& A) {
    return Eigen::BDCSVD<Eigen::MatrixXcd>(A).singularValues()(0);
}

} // namespace

TEST_SUITE("resolvent") {

TEST_CASE("free resolvent: indicator data at mu = i") {
    const auto g = unit_grid(20);
    std::vector<double> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) f[k] = g.nodes()[k] < 1.0 ? 1.0 : 0.0;
    const auto u = free_resolvent_apply(I, f, g);
    // -u'' + u = 1_{[0,1]}, u(0) = 0, u decaying
    auto exact = [](double r) {
        if (r < 1.0) return std::exp(-r) * (std::cosh(r) - 1.0) + std::sinh(r) * (std::exp(-r) - std::exp(-1.0));
        return std::exp(-r) * (std::cosh(1.0) - 1.0);
    };
    double worst = 0.0, imag = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        worst = std::max(worst, std::abs(u[k].real() - exact(g.nodes()[k])));
        imag = std::max(imag, std::abs(u[k].imag()));
    }
    CHECK(worst < 1e-12);
    CHECK(imag < 1e-14);

    std::vector<double> re(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) re[k] = u[k].real();
    const auto d2 = g.derivative(g.derivative(re));
    double resid = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double r = g.nodes()[k];
        if (r > 15.0) continue;
        resid = std::max(resid, std::abs(-d2[k] + re[k] - f[k]));
    }
    CHECK(resid < 1e-8);
}

TEST_CASE("free resolvent: positive data at mu = i stays real") {
    const auto g = unit_grid(30);
    std::vector<double> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) f[k] = g.nodes()[k] * g.nodes()[k] * std::exp(-g.nodes()[k]);
    const auto u = free_resolvent_apply(I, f, g);
    for (const auto& x : u) CHECK(std::abs(x.imag()) < 1e-14);
}

TEST_CASE("free resolvent: zero-energy limit") {
    const auto g = unit_grid(4);
    std::vector<double> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) f[k] = g.nodes()[k] < 1.0 ? 1.0 : 0.0;
    const auto u = free_resolvent_apply(cplx(0.0), f, g);
    // min(r, s) kernel: u(r) = 1/2 for r >= 1
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.nodes()[k] > 1.0) CHECK(u[k].real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sin_over_mu(cplx(0.0), 2.5) == cplx(2.5));
    CHECK(std::abs(sin_over_mu(cplx(1e-9, 1e-9), 2.0) - 2.0) < 1e-15);
}

TEST_CASE("free resolvent: norm decays at least like 1/|mu|") {
    const auto g = unit_grid(40);
    std::vector<double> f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double r = g.nodes()[k];
        f[k] = r < 4.0 ? std::exp(-1.0 / (r * (4.0 - r))) * r : 0.0;
    }
    auto norm = [&](double m) {
        const auto u = free_resolvent_apply(cplx(m, 0.2), f, g);
        std::vector<double> a(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) a[k] = std::norm(u[k]);
        return std::sqrt(g.integral<double>(a));
    };
    const double n2 = norm(2.0);
    for (double m : {4.0, 8.0, 16.0}) CHECK(norm(m) <= 2.0 * n2 * 2.0 / m);
}

TEST_CASE("assembled operator") {
    const WeightFunction w(0.3);
    const auto zero = make_zero();
    const auto rz = make_nystrom_rule(zero, w, 64);
    CHECK(assemble_A(cplx(0.5, 0.1), zero, w, rz).cwiseAbs().maxCoeff() == 0.0);

    const auto e = make_exponential(1.0);
    const auto rule = make_nystrom_rule(e, w, 128);
    double last = 1e300;
    for (double m : {1.0, 4.0, 16.0}) {
        const double n = top_singular(assemble_A(cplx(m, 0.1), e, w, rule));
        CHECK(n < last);
        last = n;
    }
}

TEST_CASE("rule preconditions") {
    const auto e = make_exponential(1.0);
    CHECK_THROWS_AS(make_nystrom_rule(e, WeightFunction(0.5), 128), PreconditionError);
    CHECK_THROWS_AS(make_nystrom_rule(e, WeightFunction(0.3), 100), PreconditionError);
    CHECK_THROWS_AS(make_nystrom_rule(e, WeightFunction(0.3), 128, 5.0), TruncationError);
    CHECK(default_cutoff(e, WeightFunction(0.3)) >= 60.0);
    CHECK(default_cutoff(make_square_well(1.0, 2.0), WeightFunction(0.3)) == 2.0);
}

TEST_CASE("determinant equals the square-well Jost function") {
    const WeightFunction w(0.3);
    for (auto [V0, a] : {std::pair{4.0, 2.0}, {pi * pi / 4, 1.0}, {1.0, 3.0}}) {
        const auto p = make_square_well(V0, a);
        const auto rule = make_nystrom_rule(p, w, 128);
        for (cplx mu : {cplx(0.3, 0.1), cplx(-1.2, 0.25), cplx(0.05, -0.2), cplx(2.0, 0.0), cplx(0.0, 1.5)})
            CHECK(std::abs(fredholm_det(mu, p, w, rule) - jost(V0, a, mu)) < 1e-10);
    }
}

TEST_CASE("Nystrom self-convergence at random points") {
    const auto p = make_exponential(1.0);
    const WeightFunction w(0.3);
    const auto r64 = make_nystrom_rule(p, w, 64), r128 = make_nystrom_rule(p, w, 128),
               r256 = make_nystrom_rule(p, w, 256);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> re(-0.5, 0.5), im(-0.29, 0.3);
    for (int k = 0; k < 10; ++k) {
        const cplx mu(re(rng), im(rng));
        const cplx a = fredholm_det(mu, p, w, r64), b = fredholm_det(mu, p, w, r128),
                   c = fredholm_det(mu, p, w, r256);
        INFO("mu = " << mu);
        CHECK(std::abs(a - b) < 1e-6);
        CHECK(std::abs(b - c) < 1e-6);
        CHECK(std::abs(a - c) < 1e-6);
    }
}

TEST_CASE("determinant is analytic") {
    const auto p = make_exponential(1.0);
    const WeightFunction w(0.3);
    const auto rule = make_nystrom_rule(p, w, 128);
    const double h = 1e-4;
    for (cplx mu : {cplx(0.2, 0.1), cplx(-0.4, -0.2), cplx(0.0, 0.25), cplx(0.45, -0.05)}) {
        const cplx dx = (fredholm_det(mu + h, p, w, rule) - fredholm_det(mu - h, p, w, rule)) / (2 * h);
        const cplx dy = (fredholm_det(mu + I * h, p, w, rule) - fredholm_det(mu - I * h, p, w, rule)) / (2 * h);
        CHECK(std::abs(dx + I * dy) < 1e-5);
    }
}

TEST_CASE("scan: free case and small coupling") {
    const WeightFunction w(0.3);
    ScanRect rect;
    rect.n_re = 16;
    rect.n_im = 8;
    const auto z = determinant_scan(make_zero(), w, rect, 64);
    CHECK(z.max_abs_det_minus_one < 1e-10);
    CHECK(z.zeros.empty());
    CHECK(z.det.size() == 16 * 8);
    CHECK(z.im.front() > rect.im_lo);
    CHECK(z.im.back() == doctest::Approx(rect.im_hi));

    const auto s = determinant_scan(make_exponential(0.01), w, rect, 128);
    CHECK(s.zeros.empty());
    CHECK(s.boundary_winding == 0);
}

TEST_CASE("scan: threshold well has a zero at the origin") {
    const WeightFunction w(0.3);
    ScanRect rect;
    rect.re_max = 0.2;
    rect.im_lo = -0.2;
    rect.im_hi = 0.2;
    rect.n_re = 8;
    rect.n_im = 8;
    const auto s = determinant_scan(make_square_well(pi * pi / 4, 1.0), w, rect, 128);
    REQUIRE(s.zeros.size() == 1);
    CHECK(std::abs(s.zeros[0].mu) < 1e-2);
    CHECK(s.zeros[0].validated);
    CHECK(s.zeros[0].sigma_min < 1e-6);
}

TEST_CASE("exponential potential: threshold value and virtual state") {
    const auto p = make_exponential(1.0);
    const WeightFunction w(0.3);
    const auto rule = make_nystrom_rule(p, w, 128);
    CHECK(std::abs(fredholm_det(cplx(0.0), p, w, rule) - boost::math::cyl_bessel_j(0.0, 2.0)) < 1e-12);

    // det(-i kappa) vanishes where J_{-2 kappa}(2) = 0
    auto f = [](double k) { return boost::math::cyl_bessel_j(-2.0 * k, 2.0); };
    boost::math::tools::eps_tolerance<double> tol(50);
    const auto [lo, hi] = boost::math::tools::bisect(f, 0.05, 0.2, tol);
    const double kappa = 0.5 * (lo + hi);

    ScanRect rect;
    rect.re_max = 0.3;
    rect.im_lo = -0.27;
    rect.im_hi = 0.3;
    rect.n_re = 8;
    rect.n_im = 8;
    const auto s = determinant_scan(p, w, rect, 128);
    REQUIRE(s.zeros.size() == 1);
    CHECK(std::abs(s.zeros[0].mu - cplx(0.0, -kappa)) < 1e-9);
    CHECK(s.zeros[0].validated);
}

TEST_CASE("deep bound states of a slowly cut off potential") {
    const auto p = make_exponential(20.0);
    const WeightFunction w(0.3);
    const auto rule = make_nystrom_rule(p, w, 128);
    REQUIRE(rule.R_q > 100.0);
    for (double y : {1.0, 3.0, 6.0}) {
        const cplx d = fredholm_det(cplx(0.1, y), p, w, rule);
        CHECK(std::isfinite(d.real()));
        CHECK(std::isfinite(d.imag()));
    }
    const auto pc = bound_state_poles_crosscheck(p, w);
    CHECK(pc.eigenvalues.size() >= 2);
    CHECK(pc.matches.size() == pc.eigenvalues.size());
    CHECK(pc.max_error < 1e-4);
}

TEST_CASE("bound-state poles") {
    const WeightFunction w(0.3);
    const auto none = bound_state_poles_crosscheck(make_zero(), w);
    CHECK(none.eigenvalues.empty());
    CHECK(none.zeros.empty());
    const auto e = bound_state_poles_crosscheck(make_exponential(1.0), w);
    CHECK(e.eigenvalues.empty());
    CHECK(e.zeros.empty());

    const auto deep = bound_state_poles_crosscheck(make_square_well(4.0, 2.0), w);
    REQUIRE(deep.eigenvalues.size() == 1);
    REQUIRE(deep.matches.size() == 1);
    CHECK(deep.max_error < 1e-4);
    CHECK(std::abs(deep.matches[0].mu - I * std::sqrt(-deep.eigenvalues[0])) < 1e-6);
    CHECK(std::abs(jost(4.0, 2.0, deep.matches[0].mu)) < 1e-9);
    CHECK_FALSE(deep.delta_flag);
}

}
