#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "reslab/errors.hpp"
#include "reslab/potential.hpp"
#include "reslab/resolvent.hpp"

namespace reslab {

enum class WaveBoundary { reflecting, sponge };

std::string to_string(WaveBoundary b);

/// Uniform mesh r_j = j h on [0, R_dom].
struct WaveMesh {
    double R_dom = 100.0;
    double h = 0.05;
    double cfl = 1.0;
    WaveBoundary boundary = WaveBoundary::reflecting;
    double sponge_strength = 2.0; ///< peak damping rate on the outer 20%

    std::size_t points() const;
    double dt() const { return cfl * h; }
};

/// u and u_t of the 3D radial field on the mesh; u = v / r with v = r u.
struct WaveState {
    std::vector<double> r;
    std::vector<double> u;
    std::vector<double> ut;
    std::vector<double> v;  ///< r u
    std::vector<double> vt; ///< r u_t
    double time = 0.0;
};

/// C-infinity bump centered at c with half-width w.
std::function<double(double)> make_bump(double c, double w, double amplitude = 1.0);

/// Leapfrog for v_tt = v_rr + (W_2 - alpha(alpha+1)/r^2) v with v(0) = 0.
class WaveSolver {
public:
    WaveSolver(const ChannelPotential& cp, const WaveMesh& mesh);

    /// Sets both time levels from mesh samples of v and v_t (Taylor start).
    void init(const std::vector<double>& v0, const std::vector<double>& vt0);
    void step();
    void run(double T);
    /// Swaps the two time levels: stepping afterwards runs time backwards.
    void reverse();

    WaveState state() const;
    double time() const { return double(steps_) * dt_; }
    /// 1/2 |(v^{n+1}-v^n)/dt|^2 + 1/2 <H v^{n+1}, v^n>, exactly conserved without sponge.
    double energy() const;
    const std::vector<double>& r() const { return r_; }
    const WaveMesh& mesh() const { return mesh_; }

private:
    std::vector<double> apply_H(const std::vector<double>& v) const;

    WaveMesh mesh_;
    std::vector<double> r_, q_, sigma_;
    std::vector<double> prev_, cur_;
    double dt_ = 0.0;
    long steps_ = 0;
    int sign_ = 1;
};

struct WaveRun {
    std::vector<WaveState> snapshots;
    std::vector<double> energy_times;
    std::vector<double> energy;
    WaveMesh mesh;
    double data_radius = 0.0; ///< support radius of the initial data
    double T = 0.0;
};

/// Evolves the data to time T, recording a snapshot every `snapshot_dt`.
WaveRun evolve(const ChannelPotential& cp, const std::function<double(double)>& u0,
               const std::function<double(double)>& v0, double T, const WaveMesh& mesh,
               double snapshot_dt = 0.25, bool project = false);

/// Mesh L2-normalized eigenvectors of H = -d^2/dr^2 - W on the mesh, for each negative
/// eigenvalue located by radial_ode, refined by Rayleigh quotient iteration.
struct DiscreteBoundState {
    double energy = 0.0;
    double continuum_energy = 0.0;
    std::vector<double> vector; ///< on interior and boundary nodes, zero at both ends
};
std::vector<DiscreteBoundState> discrete_bound_states(const ChannelPotential& cp, const WaveMesh& mesh);

/// Removes the eigenvector components from v and v_t samples.
std::pair<std::vector<double>, std::vector<double>>
project_ac(const std::vector<DiscreteBoundState>& states, std::vector<double> v0, std::vector<double> vt0,
           double h);
std::pair<std::vector<double>, std::vector<double>>
project_ac(const ChannelPotential& cp, const WaveMesh& mesh, std::vector<double> v0, std::vector<double> vt0);

/// Largest |<v, f_j>| over the eigenvectors.
double orthogonality_residual(const std::vector<DiscreteBoundState>& states, const std::vector<double>& v,
                              double h);

struct DecaySeries {
    std::vector<double> times;
    std::vector<double> norm_u;  ///< |phi u|_{L2(B_obs)}
    std::vector<double> norm_ut; ///< |phi u_t|_{L2(B_obs)}
    double rate = 0.0;
    double residual = 0.0;
    double rate_ut = 0.0;
    double residual_ut = 0.0;
    double t0 = 0.0;
    double t1 = 0.0;
    std::string notice;
};

/// Log-linear least squares of the phi-weighted norms over [t0, t1], on the ball r <= r_obs.
DecaySeries measure_decay(const WaveRun& run, const WeightFunction& w, double r_obs, double t0, double t1);

/// Default measurement weight 0.5 min(eps0 / 2, 1).
double default_wave_delta(const Potential& p);

} // namespace reslab
