#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "reslab/potential.hpp"

namespace reslab {

using cplx = std::complex<double>;

/// Samples of the regular solution of u'' + (W_2 - alpha(alpha+1)/r^2 + mu^2) u = 0.
///
/// The true solution is u[i] * exp(log_scale[i]); the stored values are rescaled
/// whenever they grow past 1e100.
struct RadialSolution {
    std::vector<double> r;
    std::vector<cplx> u;
    std::vector<cplx> du;
    std::vector<cplx> ddu;
    std::vector<double> log_scale;
    cplx mu{0.0, 0.0};
    double alpha = 0.0;
    double tol = 1e-12;

    std::size_t size() const { return r.size(); }
    double r_min() const { return r.front(); }
    double r_max() const { return r.back(); }
    bool scaled() const { return !log_scale.empty() && log_scale.back() != 0.0; }

    /// Quintic Hermite interpolation of the true solution (and its derivative).
    cplx value(double x) const;
    cplx derivative(double x) const;
};

struct RadialOptions {
    double r_max = 0.0; ///< 0 selects max(30, 20/eps0)
    double tol = 1e-12;
    double r_min = 0.0; ///< 0 selects 1e-6 (alpha = 0) or 1e-4 (alpha > 0)
};

double default_r_max(const Potential& p);

RadialSolution integrate_radial(const ChannelPotential& cp, cplx mu, double r_max, double tol);
RadialSolution integrate_radial(const ChannelPotential& cp, cplx mu, const RadialOptions& opt = {});

struct AsymptoticFit {
    double C0 = 0.0;
    double C1 = 0.0;
    double remainder_h = 0.0;
    double remainder_g = 0.0;
    double r_lo = 0.0;
    double r_hi = 0.0;
    double residual = 0.0;
    double alpha = 0.0;
};

/// Extracts the expansion constants at zero energy from the window [r_lo, r_hi].
/// alpha = 0: u ~ C0 + C1 s. alpha > 0: u ~ C0 r^{alpha+1}/(2 alpha+1) + C1 r^{-alpha}.
AsymptoticFit asymptotic_fit(const RadialSolution& sol, const ChannelPotential& cp,
                             double lo_frac = 0.6, double hi_frac = 0.9);

enum class ZeroEnergyKind { regular, strong_resonance, eigenvalue_threshold, inconclusive };

std::string to_string(ZeroEnergyKind k);

struct ZeroEnergyVerdict {
    ZeroEnergyKind kind = ZeroEnergyKind::inconclusive;
    AsymptoticFit fit;
    double tol = 1e-6;
    RadialSolution solution;
};

ZeroEnergyVerdict classify_zero_energy(const ChannelPotential& cp, double tol = 1e-6,
                                       const RadialOptions& opt = {});

struct BoundState {
    double energy = 0.0;
    RadialSolution eigenfunction; ///< L2-normalized, real, tail replaced by the decaying exponential
    double l2_norm = 1.0;
    std::size_t nodes = 0;
};

/// Number of eigenvalues below E < 0, by counting nodes of the regular solution.
std::size_t count_nodes(const ChannelPotential& cp, double energy, const RadialOptions& opt = {});

/// Eigenvalues in (e_lo, e_hi) with e_hi < 0, located by node counting and bisection.
std::vector<BoundState> bound_states(const ChannelPotential& cp, double e_lo, double e_hi,
                                     const RadialOptions& opt = {});
/// Search interval (-(max W) - 1, -1e-8) in the s-wave reading.
std::vector<BoundState> bound_states(const ChannelPotential& cp, const RadialOptions& opt = {});

/// u1 u2' - u1' u2 at every sample of s1 (both solutions at the same mu).
std::vector<cplx> wronskian(const RadialSolution& s1, const RadialSolution& s2);

/// Integral of f(r) * u(r) over [a, b] inside the sampled range, on the sample intervals.
cplx integrate_against(const RadialSolution& sol, double a, double b,
                       const std::function<double(double)>& f);

} // namespace reslab
