#pragma once

#include <string>
#include <vector>

namespace reslab {

/// Positive radial solution of -Lap chi + omega chi = chi^p in three dimensions.
struct GroundState {
    double p = 3.0;
    double omega = 1.0;
    std::vector<double> r;
    std::vector<double> chi;
    std::vector<double> dchi;
    double chi0 = 0.0;
    double tail_C0 = 0.0; ///< limit of r chi(r) e^{sqrt(omega) r}
    double l2_norm = 0.0; ///< full 3D norm, 4 pi included
    double tol = 1e-10;
    bool converged = false;

    /// Cubic Hermite interpolation of the profile; exponential tail beyond the last sample.
    double value(double x) const;
    double derivative(double x) const;
    double decay_rate() const;
};

struct GroundStateOptions {
    double tol = 1e-10;
    double chi0_lo = 1.0;
    double chi0_hi = 100.0;
    double r_min = 1e-4;
};

/// Shooting solve at omega = 1.
GroundState solve_ground_state(double p, const GroundStateOptions& opt = {});
/// Shooting solve at an arbitrary omega (used to check rescaling).
GroundState solve_ground_state_direct(double p, double omega, const GroundStateOptions& opt = {});

/// chi_omega(x) = omega^{1/(p-1)} chi_1(sqrt(omega) x).
GroundState rescale(const GroundState& gs, double omega);

/// L2 norm of chi_omega, from the omega = 1 state by the exact power law.
double mass(const GroundState& gs1, double omega);

struct MassCurve {
    std::vector<double> omegas;
    std::vector<double> norms;
    double slope = 0.0;
    double expected = 0.0;
};

/// Log-log fit of ||chi_omega|| against omega; each point is rescaled and re-integrated.
MassCurve mass_curve(const GroundState& gs1, const std::vector<double>& omegas);

/// omega with ||chi_omega||_{L2} = 1.
double find_omega_star(const GroundState& gs1, double lo = 1e-6, double hi = 1e6);

struct TailReport {
    double C0 = 0.0;
    double slope = 0.0;
    double slope_error = 0.0;      ///< |slope + sqrt(omega)|
    double derivative_ratio = 0.0; ///< (r chi)' / (r chi) on the window
    double derivative_error = 0.0;
    double correction_order = 0.0; ///< fitted decay exponent of r chi e^{k r} - C0
    double window_lo = 0.0;
    double window_hi = 0.0;
};

TailReport tail_asymptotics(const GroundState& gs);

struct KernelSplit {
    double c = 0.0;
    double residual = 0.0;
    double k1_slope = 0.0; ///< log-slope of K1 at large r
    double k2_slope = 0.0; ///< log-slope of K2 at large r
};

KernelSplit kernel_split_residual(const GroundState& gs1);

struct IdentityReport {
    double kinetic = 0.0;   ///< int |grad chi|^2
    double potential = 0.0; ///< int chi^{p+1}
    double mass2 = 0.0;     ///< int chi^2
    double energy = 0.0;    ///< kinetic/2 - potential/(p+1)
    double virial_residual = 0.0;
    double nehari_residual = 0.0;
    double strauss_margin = 0.0;     ///< min of ||chi||_{H1} - r chi(r)
    double log_derivative_max = 0.0; ///< max of chi'/chi
    double log_derivative_min = 0.0; ///< min of chi'/chi
};

/// Pohozaev, Nehari, Strauss and log-derivative checks on the solved profile.
IdentityReport check_identities(const GroundState& gs);

std::string ground_state_key(double p, double omega);

} // namespace reslab
