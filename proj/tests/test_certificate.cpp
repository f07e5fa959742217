#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "reslab/certificate.hpp"
#include "reslab/errors.hpp"
#include "reslab/quadrature.hpp"

using namespace reslab;
using std::numbers::pi;

TEST_SUITE("certificate") {

TEST_CASE("test functions: closed forms and continuity") {
    const TestFunctions tf(6.0, 0.5);
    for (double r : {0.5, 1.0, 7.0, 35.9}) {
        CHECK(tf.g2(r) == doctest::Approx(std::pow(r, 6.0)).epsilon(1e-14));
        CHECK(tf.g(r) == doctest::Approx(std::pow(r, 8.0) / 56.0).epsilon(1e-13));
        CHECK(tf.G(r) == doctest::Approx(std::pow(r, 9.0) / 504.0).epsilon(1e-13));
    }
    CHECK(tf.g1(0.0) == 0.0);
    CHECK(tf.g2(40.0) == doctest::Approx(std::exp(-20.0)).epsilon(1e-14));
    const double j = tf.join();
    CHECK(j == 36.0);
    for (auto f : {&TestFunctions::g1, &TestFunctions::g, &TestFunctions::G}) {
        const double a = (tf.*f)(j * (1 - 1e-12)), b = (tf.*f)(j * (1 + 1e-12));
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
    CHECK(tf.g1(1e4) == doctest::Approx(tf.g1_limit()).epsilon(1e-12));
}

TEST_CASE("test functions: integral relations at random radii") {
    const TestFunctions tf(5.0, 0.7);
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> U(0.1, 60.0);
    const std::vector<double> brk{tf.join()};
    for (int k = 0; k < 20; ++k) {
        const double r = U(rng);
        const double g = quad::integrate_piecewise([&](double t) { return (r - t) * tf.g2(t); }, 0.0, r, brk, 8, 24);
        const double G = quad::integrate_piecewise([&](double t) { return 0.5 * (r - t) * (r - t) * tf.g2(t); }, 0.0, r, brk, 8, 24);
        INFO("r = " << r);
        CHECK(tf.g(r) == doctest::Approx(g).epsilon(1e-11));
        CHECK(tf.G(r) == doctest::Approx(G).epsilon(1e-11));
    }
}

TEST_CASE("phi: elementary cases") {
    const TestFunctions tf(10.0, 0.5);
    const ChannelPotential zero(make_zero());
    for (double r : {0.3, 2.0, 50.0}) CHECK(phi(r, zero, tf) == doctest::Approx(std::pow(r, 10.0) / 2).epsilon(1e-14));

    const ChannelPotential e(make_exponential(1.0));
    const double expect = 2.0 / 132.0 * std::exp(-1.0) - std::exp(-1.0) / 1716.0 + 0.5;
    CHECK(phi(1.0, e, tf) == doctest::Approx(expect).epsilon(1e-14));

    // centrifugal part on [0, M^2]: -2 r^M alpha(alpha+1) / ((M+3)(M+1))
    CHECK(phi_centrifugal(1.0, 1.0, tf) == doctest::Approx(-4.0 / 143.0).epsilon(1e-13));
    for (double r : {0.5, 3.0, 40.0, 99.0})
        CHECK(phi_centrifugal(r, 2.0, tf) == doctest::Approx(-12.0 * std::pow(r, 10.0) / 143.0).epsilon(1e-12));
}

TEST_CASE("middle region") {
    const ChannelPotential zero(make_zero());
    const TestFunctions t4(4.0, 0.5);
    CHECK(check_middle_region(zero, t4).margin > 0);

    const ChannelPotential e(make_exponential(1.0));
    const auto m12 = check_middle_region(e, TestFunctions(12.0, 0.5));
    CHECK(m12.margin >= 0);
    CHECK(m12.proof_bound >= 0);
    // sufficient condition 1 - 2 C* r^3 e^{-r} / ((M+3)(M+2)(M+1)), C* = 2
    CHECK(m12.proof_bound == doctest::Approx(1.0 - 4.0 * 27.0 * std::exp(-3.0) / 2730.0).epsilon(1e-6));
    const auto m1 = check_middle_region(e, TestFunctions(1.0, 0.5));
    // open interval: the minimum at r = M^2 is approached, not sampled
    const double closed = 1.0 - 4.0 * std::exp(-1.0) / 24.0;
    CHECK(m1.proof_bound >= closed);
    CHECK(m1.proof_bound - closed < 1e-4);
    CHECK(m1.margin >= 0);
}

TEST_CASE("large region") {
    const ChannelPotential zero(make_zero());
    CHECK(check_large_region(zero, TestFunctions(6.0, 0.5)).margin > 0);
    const ChannelPotential e(make_exponential(1.0));
    const TestFunctions t12(12.0, 0.5);
    const auto grid = region_grid(t12.join(), 300.0);
    CHECK(check_large_region(e, t12, grid).margin >= 0);
    CHECK(check_large_region(e, TestFunctions(2.0, 0.5)).proof_bound < 0);
}

TEST_CASE("certificate: exponential potentials") {
    for (double c : {1.0, 0.01}) {
        const ChannelPotential cp(make_exponential(c));
        const auto cert = certify_no_strong_resonance(cp);
        INFO("amplitude " << c);
        CHECK(cert.verdict == CertificateVerdict::certified);
        CHECK(cert.M_star <= 16);
        CHECK(cert.middle_margin >= 0);
        CHECK(cert.large_margin >= 0);
        CHECK(cert.contradiction_gap > 0);
        CHECK(cert.classification != ZeroEnergyKind::strong_resonance);
    }
}

TEST_CASE("certificate: relative margins do not fall beyond M*") {
    const ChannelPotential cp(make_exponential(1.0));
    const auto cert = certify_no_strong_resonance(cp);
    REQUIRE(cert.verdict == CertificateVerdict::certified);
    double mid = -1e300, large = -1e300;
    for (int M : {cert.M_star, cert.M_star + 2, cert.M_star + 4}) {
        const TestFunctions tf(M, cp.base.decay().rate / 2);
        const auto a = check_middle_region(cp, tf), b = check_large_region(cp, tf);
        CHECK(a.margin >= 0);
        CHECK(b.margin >= 0);
        CHECK(a.relative_margin >= mid - 1e-12);
        CHECK(b.relative_margin >= large - 1e-12);
        mid = a.relative_margin;
        large = b.relative_margin;
    }
}

TEST_CASE("certificate gate") {
    CHECK(certify_no_strong_resonance(ChannelPotential(make_bargmann_pair().potential)).verdict ==
          CertificateVerdict::inapplicable);
    CHECK(certify_no_strong_resonance(ChannelPotential(make_square_well(2.0, 1.0))).verdict ==
          CertificateVerdict::inapplicable);
}

TEST_CASE("phi identity: bargmann pair") {
    const auto bp = make_bargmann_pair();
    const ChannelPotential cp(bp.potential);
    const TestFunctions tf(6.0, 0.5);
    const auto a = verify_phi_identity(bp.u, 1.0, cp, tf, 0.05);
    const auto b = verify_phi_identity(bp.u, 1.0, cp, tf, 0.025);
    CHECK(a.boundary_term == doctest::Approx(0.5 * tf.g1_limit()).epsilon(1e-14));
    CHECK(a.integral == doctest::Approx(a.boundary_term).epsilon(1e-9));
    CHECK(b.flux_residual < 1e-6);
    CHECK(a.flux_residual >= 4.0 * b.flux_residual);
}

TEST_CASE("phi identity: mollified threshold well") {
    auto family = [](double V) { return make_smoothed_square_well(V, 1.0, 1e-3); };
    const double V = tune_to_threshold(family, pi * pi / 4, pi * pi / 4 * 1.001);
    const ChannelPotential cp(family(V));
    const auto sol = integrate_radial(cp, 0.0);
    const auto fit = asymptotic_fit(sol, cp);
    CHECK(std::abs(fit.C1) < 1e-12 * std::abs(fit.C0));
    const TestFunctions tf(6.0, 1.0);
    const auto a = verify_phi_identity(sol, cp, tf, 0.05);
    const auto b = verify_phi_identity(sol, cp, tf, 0.025);
    CHECK(b.flux_residual < 1e-4);
    CHECK(a.flux_residual >= 4.0 * b.flux_residual);
}

TEST_CASE("phi identity: degenerate and unbounded inputs") {
    const ChannelPotential cp(make_exponential(1.0));
    const TestFunctions tf(6.0, 0.5);
    const auto z = verify_phi_identity([](double) { return 0.0; }, 0.0, cp, tf);
    CHECK(z.residual == 0.0);
    const auto sol = integrate_radial(cp, 0.0);
    CHECK_THROWS_AS(verify_phi_identity(sol, cp, tf), PreconditionError);
}

}
