#include <cmath>
#include <vector>

#include <doctest.h>

#include "reslab/quadrature.hpp"

using namespace reslab;

TEST_SUITE("quadrature") {

TEST_CASE("gauss-legendre is exact for polynomials of degree 2n-1") {
    const auto& gl = quad::gauss_legendre(8);
    double s = 0.0;
    for (std::size_t i = 0; i < 8; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 14);
    CHECK(s == doctest::Approx(2.0 / 15.0).epsilon(1e-14));
}

TEST_CASE("composite and piecewise integration") {
    CHECK(quad::integrate([](double x) { return std::exp(-x); }, 0.0, 30.0, 8) ==
          doctest::Approx(1.0 - std::exp(-30.0)).epsilon(1e-14));
    const std::vector<double> breaks{1.0};
    const auto step = [](double x) { return x < 1.0 ? 1.0 : 0.0; };
    CHECK(quad::integrate_piecewise(step, 0.0, 3.0, breaks) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("panel grid cumulative, derivative and interpolation") {
    const quad::PanelGrid g({0.0, 1.0, 2.5, 5.0}, 16);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::cos(g.nodes()[i]);
    const auto F = g.cumulative(f);
    const auto B = g.reverse_cumulative(f);
    const auto d = g.derivative(f);
    double e_cum = 0.0, e_rev = 0.0, e_der = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.nodes()[i];
        e_cum = std::max(e_cum, std::abs(F[i] - std::sin(x)));
        e_rev = std::max(e_rev, std::abs(B[i] - (std::sin(5.0) - std::sin(x))));
        e_der = std::max(e_der, std::abs(d[i] + std::sin(x)));
    }
    CHECK(e_cum < 1e-13);
    CHECK(e_rev < 1e-13);
    CHECK(e_der < 1e-9);
    CHECK(g.interpolate(f, 1.7) == doctest::Approx(std::cos(1.7)).epsilon(1e-12));

    const auto L = g.lower_matrix();
    double row = 0.0;
    const std::size_t k = g.size() - 1;
    for (std::size_t j = 0; j < g.size(); ++j) row += L[k * g.size() + j] * f[j];
    CHECK(row == doctest::Approx(F[k]).epsilon(1e-14));
}

TEST_CASE("graded grid honours breakpoints and width cap") {
    const std::vector<double> breaks{1.0, 7.5};
    const auto g = quad::PanelGrid::graded(0.0, 20.0, 6, 8, 1.6, breaks, 2.0);
    const auto& e = g.edges();
    CHECK(e.front() == 0.0);
    CHECK(e.back() == 20.0);
    bool has1 = false, has75 = false;
    for (std::size_t i = 1; i < e.size(); ++i) {
        CHECK(e[i] > e[i - 1]);
        CHECK(e[i] - e[i - 1] <= 2.0 + 1e-12);
        has1 |= std::abs(e[i] - 1.0) < 1e-11;
        has75 |= std::abs(e[i] - 7.5) < 1e-11;
    }
    CHECK(has1);
    CHECK(has75);
}

}
