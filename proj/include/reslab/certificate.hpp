#pragma once

#include <string>
#include <vector>

#include "reslab/potential.hpp"
#include "reslab/radial_ode.hpp"

namespace reslab {

/// g'' = r^M on [0, M^2), e^{-delta r} beyond, with g(0) = g'(0) = G(0) = 0 and G' = g.
class TestFunctions {
public:
    TestFunctions(double M, double delta);

    double M() const { return M_; }
    double delta() const { return delta_; }
    double join() const { return r0_; } ///< M^2

    double g2(double r) const;
    double g1(double r) const;
    double g(double r) const;
    double G(double r) const;
    /// lim g'(r) as r -> infinity.
    double g1_limit() const { return g1_0_ + e0_ / delta_; }

private:
    double M_, delta_, r0_, e0_;
    double g1_0_, g_0_, G_0_;
};

/// Phi = Phi_1 + 2 g W_2 + G W_2' + g''/2 with Phi_1 = -alpha(alpha+1)(2g/r^2 - 2G/r^3).
double phi(double r, const ChannelPotential& cp, const TestFunctions& tf);
double phi_centrifugal(double r, double alpha, const TestFunctions& tf);

struct PhiIdentity {
    double integral = 0.0;       ///< int Phi u^2
    double abs_integral = 0.0;   ///< int |Phi| u^2
    double boundary_term = 0.0;  ///< g'(inf) u(inf)^2 / 2
    double residual = 0.0;       ///< |int Phi u^2| / int |Phi| u^2
    double flux_residual = 0.0;  ///< |int Phi u^2 - boundary_term| / int |Phi| u^2
    double step = 0.0;
    double truncation = 0.0;
};

/// Composite Simpson evaluation of int_0^inf Phi |u|^2 dr with step h (h * width inside
/// steep features). u is extended by its fitted constant beyond the sampled range.
PhiIdentity verify_phi_identity(const RadialSolution& sol, const ChannelPotential& cp,
                                const TestFunctions& tf, double h = 0.05);

/// Same, for a solution given in closed form.
PhiIdentity verify_phi_identity(const std::function<double(double)>& u, double u_inf,
                                const ChannelPotential& cp, const TestFunctions& tf,
                                double h = 0.05);

/// Radii on the open interval (lo, hi): log-spaced, `per_decade` per decade, merged with
/// `uniform` equally spaced interior points.
std::vector<double> region_grid(double lo, double hi, int per_decade = 64, int uniform = 2000);

struct RegionCheck {
    double margin = 0.0;          ///< min of the direct inequality
    double relative_margin = 0.0; ///< min of the inequality divided by its comparison term
    double proof_bound = 0.0;     ///< min of the proof's sufficient inequality (>= 0 when it applies)
    double worst_r = 0.0;
    std::size_t points = 0;
};

/// min over (0, M^2) of Phi - 2 g W_2; relative to g''/2.
RegionCheck check_middle_region(const ChannelPotential& cp, const TestFunctions& tf,
                                const std::vector<double>& grid);
RegionCheck check_middle_region(const ChannelPotential& cp, const TestFunctions& tf);

/// min over (M^2, R_out) of 2 e^{-eps0 r/2} - |Phi|; relative to 2 e^{-eps0 r/2}.
/// proof_bound is the min of 1 - envelope / (2 e^{-eps0 r/2}) for the proof's envelope
/// 4 C* e^{-eps0 r} r^2 r^{sqrt r} / delta + e^{-delta r}.
RegionCheck check_large_region(const ChannelPotential& cp, const TestFunctions& tf,
                               const std::vector<double>& grid);
RegionCheck check_large_region(const ChannelPotential& cp, const TestFunctions& tf);

double large_region_end(const Potential& p, double M);

enum class CertificateVerdict { certified, failed, inapplicable };
std::string to_string(CertificateVerdict v);

struct MarginTrace {
    int M = 0;
    RegionCheck middle;
    RegionCheck large;
};

struct PhiCertificate {
    CertificateVerdict verdict = CertificateVerdict::inapplicable;
    std::string reason;
    int M_star = 0;
    double delta = 0.0;
    double middle_margin = 0.0;
    double large_margin = 0.0;
    double middle_relative = 0.0;
    double large_relative = 0.0;
    double contradiction_gap = 0.0;
    double S = 0.0;
    double u_at_1 = 0.0;
    double R_out = 0.0;
    ZeroEnergyKind classification = ZeroEnergyKind::inconclusive;
    std::vector<MarginTrace> trace;
    std::size_t middle_points = 0;
    std::size_t large_points = 0;
};

PhiCertificate certify_no_strong_resonance(const ChannelPotential& cp, int M_lo = 4, int M_hi = 40);

/// Secant search on x so the zero-energy growth constant C1 of family(x) vanishes.
double tune_to_threshold(const std::function<Potential(double)>& family, double x0, double x1,
                         double tol = 1e-13);

} // namespace reslab
