#include "reslab/wave_decay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "reslab/radial_ode.hpp"

namespace reslab {

namespace {

// Solves the symmetric tridiagonal system (diag, off) x = y.
std::vector<double> thomas(const std::vector<double>& diag, double off, std::vector<double> y) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double d = diag[0];
    c[0] = off / d;
    y[0] /= d;
    for (std::size_t i = 1; i < n; ++i) {
        d = diag[i] - off * c[i - 1];
        c[i] = off / d;
        y[i] = (y[i] - off * y[i - 1]) / d;
    }
    for (std::size_t i = n - 1; i-- > 0;) y[i] -= c[i] * y[i + 1];
    return y;
}

double mesh_dot(const std::vector<double>& a, const std::vector<double>& b, double h) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return h * s;
}

struct LineFit {
    double slope = 0.0;
    double rms = 0.0;
};

LineFit fit_log(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ly = std::log(y[i]);
        st += t[i];
        sy += ly;
        stt += t[i] * t[i];
        sty += t[i] * ly;
    }
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    const double icpt = (sy - slope * st) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::log(y[i]) - (icpt + slope * t[i]);
        ss += e * e;
    }
    return {slope, std::sqrt(ss / n)};
}

} // namespace

std::string to_string(WaveBoundary b) { return b == WaveBoundary::reflecting ? "reflecting" : "sponge"; }

std::size_t WaveMesh::points() const { return std::size_t(std::lround(R_dom / h)) + 1; }

std::function<double(double)> make_bump(double c, double w, double amplitude) {
    return [=](double r) {
        const double x = (r - c) / w;
        if (std::abs(x) >= 1.0) return 0.0;
        return amplitude * std::exp(1.0 - 1.0 / (1.0 - x * x));
    };
}

WaveSolver::WaveSolver(const ChannelPotential& cp, const WaveMesh& mesh) : mesh_(mesh) {
    if (!(mesh.h > 0) || !(mesh.R_dom > 10 * mesh.h)) throw PreconditionError("wave mesh needs R_dom >> h > 0");
    if (!(mesh.cfl > 0) || mesh.cfl > 1.0)
        throw StabilityError("CFL number " + std::to_string(mesh.cfl) + " outside (0, 1]");
    const std::size_t n = mesh.points();
    dt_ = mesh.dt();
    r_.resize(n);
    q_.assign(n, 0.0);
    sigma_.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        r_[j] = double(j) * mesh.h;
        if (j > 0) q_[j] = cp.total(r_[j]);
        if (mesh.boundary == WaveBoundary::sponge && r_[j] > 0.8 * mesh.R_dom) {
            const double s = (r_[j] - 0.8 * mesh.R_dom) / (0.2 * mesh.R_dom);
            sigma_[j] = mesh.sponge_strength * s * s;
        }
    }
    prev_.assign(n, 0.0);
    cur_.assign(n, 0.0);
}

std::vector<double> WaveSolver::apply_H(const std::vector<double>& v) const {
    const std::size_t n = v.size();
    const double ih2 = 1.0 / (mesh_.h * mesh_.h);
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j)
        out[j] = -(v[j + 1] - 2.0 * v[j] + v[j - 1]) * ih2 - q_[j] * v[j];
    return out;
}

void WaveSolver::init(const std::vector<double>& v0, const std::vector<double>& vt0) {
    if (v0.size() != r_.size() || vt0.size() != r_.size()) throw PreconditionError("wave data size mismatch");
    prev_ = v0;
    prev_.front() = prev_.back() = 0.0;
    const auto Hv = apply_H(prev_);
    cur_.assign(r_.size(), 0.0);
    for (std::size_t j = 1; j + 1 < r_.size(); ++j)
        cur_[j] = prev_[j] + dt_ * vt0[j] - 0.5 * dt_ * dt_ * Hv[j];
    steps_ = 1;
    sign_ = 1;
}

void WaveSolver::step() {
    const auto Hv = apply_H(cur_);
    std::vector<double> next(r_.size(), 0.0);
    for (std::size_t j = 1; j + 1 < r_.size(); ++j) {
        const double s = 0.5 * sigma_[j] * dt_;
        next[j] = (2.0 * cur_[j] - (1.0 - s) * prev_[j] - dt_ * dt_ * Hv[j]) / (1.0 + s);
    }
    prev_ = std::move(cur_);
    cur_ = std::move(next);
    steps_ += sign_;
}

void WaveSolver::run(double T) {
    const auto steps = std::size_t(std::lround(T / dt_));
    for (std::size_t k = 0; k < steps; ++k) step();
}

void WaveSolver::reverse() {
    std::swap(prev_, cur_);
    sign_ = -sign_;
    steps_ += sign_;
}

WaveState WaveSolver::state() const {
    const auto Hv = apply_H(cur_);
    const std::size_t n = r_.size();
    WaveState s;
    s.r = r_;
    s.time = time();
    s.v = cur_;
    s.vt.assign(n, 0.0);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double h = 0.5 * sigma_[j] * dt_;
        const double next = (2.0 * cur_[j] - (1.0 - h) * prev_[j] - dt_ * dt_ * Hv[j]) / (1.0 + h);
        s.vt[j] = double(sign_) * (next - prev_[j]) / (2.0 * dt_);
    }
    s.u.resize(n);
    s.ut.resize(n);
    for (std::size_t j = 1; j < n; ++j) {
        s.u[j] = s.v[j] / r_[j];
        s.ut[j] = s.vt[j] / r_[j];
    }
    const double h = mesh_.h;
    s.u[0] = (4.0 * s.v[1] - s.v[2]) / (2.0 * h);
    s.ut[0] = (4.0 * s.vt[1] - s.vt[2]) / (2.0 * h);
    return s;
}

double WaveSolver::energy() const {
    const double h = mesh_.h;
    double kin = 0.0;
    for (std::size_t j = 0; j < r_.size(); ++j) {
        const double d = (cur_[j] - prev_[j]) / dt_;
        kin += d * d;
    }
    const auto Hc = apply_H(cur_);
    return 0.5 * h * kin + 0.5 * mesh_dot(Hc, prev_, h);
}

WaveRun evolve(const ChannelPotential& cp, const std::function<double(double)>& u0,
               const std::function<double(double)>& v0, double T, const WaveMesh& mesh, double snapshot_dt,
               bool project) {
    if (!(T > 0) || !(snapshot_dt > 0)) throw PreconditionError("evolve needs T > 0 and snapshot_dt > 0");
    WaveSolver solver(cp, mesh);
    const auto& r = solver.r();
    std::vector<double> v(r.size()), vt(r.size());
    WaveRun run;
    run.mesh = mesh;
    run.T = T;
    for (std::size_t j = 0; j < r.size(); ++j) {
        v[j] = r[j] * u0(r[j]);
        vt[j] = r[j] * v0(r[j]);
        if (v[j] != 0.0 || vt[j] != 0.0) run.data_radius = r[j];
    }
    if (run.data_radius > 0.5 * mesh.R_dom) throw PreconditionError("initial data must lie inside [0, R_dom/2]");
    if (project) std::tie(v, vt) = project_ac(cp, mesh, std::move(v), std::move(vt));

    const auto every = std::max<std::size_t>(1, std::size_t(std::lround(snapshot_dt / mesh.dt())));
    const auto steps = std::size_t(std::lround(T / mesh.dt()));

    // The first recorded state is t = 0: rebuild it from the data directly.
    {
        WaveState s0;
        s0.r = r;
        s0.v = v;
        s0.vt = vt;
        s0.v.front() = s0.v.back() = s0.vt.front() = s0.vt.back() = 0.0;
        s0.u.resize(r.size());
        s0.ut.resize(r.size());
        for (std::size_t j = 1; j < r.size(); ++j) {
            s0.u[j] = s0.v[j] / r[j];
            s0.ut[j] = s0.vt[j] / r[j];
        }
        s0.u[0] = u0(0.0);
        s0.ut[0] = v0(0.0);
        run.snapshots.push_back(std::move(s0));
    }
    solver.init(v, vt);
    run.energy_times.push_back(0.5 * mesh.dt());
    run.energy.push_back(solver.energy());
    for (std::size_t k = 1; k < steps; ++k) {
        if (k % every == 0) {
            run.snapshots.push_back(solver.state());
            run.energy_times.push_back(solver.time() - 0.5 * mesh.dt());
            run.energy.push_back(solver.energy());
        }
        solver.step();
    }
    run.snapshots.push_back(solver.state());
    return run;
}

std::vector<DiscreteBoundState> discrete_bound_states(const ChannelPotential& cp, const WaveMesh& mesh) {
    const auto states = bound_states(cp);
    std::vector<DiscreteBoundState> out;
    if (states.empty()) return out;
    const std::size_t n = mesh.points();
    const double h = mesh.h, ih2 = 1.0 / (h * h);
    std::vector<double> r(n), q(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        r[j] = double(j) * h;
        if (j > 0) q[j] = cp.total(r[j]);
    }
    const std::size_t m = n - 2; // interior nodes 1..n-2
    auto H = [&](const std::vector<double>& x) {
        std::vector<double> y(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double left = i > 0 ? x[i - 1] : 0.0, right = i + 1 < m ? x[i + 1] : 0.0;
            y[i] = -(right - 2.0 * x[i] + left) * ih2 - q[i + 1] * x[i];
        }
        return y;
    };
    auto normalize = [&](std::vector<double>& x) {
        const double nn = std::sqrt(h * std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
        for (double& v : x) v /= nn;
    };
    for (const auto& bs : states) {
        const auto& ef = bs.eigenfunction;
        std::vector<double> x(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double s = r[i + 1];
            x[i] = s < ef.r_min() ? s : (s > ef.r_max() ? 0.0 : ef.value(s).real());
        }
        normalize(x);
        double sigma = bs.energy;
        for (int it = 0; it < 40; ++it) {
            std::vector<double> diag(m);
            for (std::size_t i = 0; i < m; ++i) diag[i] = 2.0 * ih2 - q[i + 1] - sigma;
            auto y = thomas(diag, -ih2, x);
            normalize(y);
            const auto Hy = H(y);
            const double rq = mesh_dot(Hy, y, h);
            double res = 0.0;
            for (std::size_t i = 0; i < m; ++i) res = std::max(res, std::abs(Hy[i] - rq * y[i]));
            x = std::move(y);
            // Fixed shift first, then Rayleigh quotient shifts.
            if (it >= 2) sigma = rq;
            if (res < 1e-11 * std::max(1.0, std::abs(rq))) break;
        }
        DiscreteBoundState d;
        d.continuum_energy = bs.energy;
        d.energy = mesh_dot(H(x), x, h);
        const auto peak = std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
        const double sgn = *peak < 0 ? -1.0 : 1.0;
        d.vector.assign(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) d.vector[i + 1] = sgn * x[i];
        out.push_back(std::move(d));
    }
    // Gram-Schmidt against near-degenerate numerical overlap.
    for (std::size_t a = 0; a < out.size(); ++a) {
        for (std::size_t b = 0; b < a; ++b) {
            const double c = mesh_dot(out[a].vector, out[b].vector, h);
            for (std::size_t j = 0; j < n; ++j) out[a].vector[j] -= c * out[b].vector[j];
        }
        normalize(out[a].vector);
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>>
project_ac(const std::vector<DiscreteBoundState>& states, std::vector<double> v0, std::vector<double> vt0,
           double h) {
    for (const auto& s : states) {
        const double a = mesh_dot(v0, s.vector, h), b = mesh_dot(vt0, s.vector, h);
        for (std::size_t j = 0; j < v0.size(); ++j) {
            v0[j] -= a * s.vector[j];
            vt0[j] -= b * s.vector[j];
        }
    }
    return {std::move(v0), std::move(vt0)};
}

std::pair<std::vector<double>, std::vector<double>>
project_ac(const ChannelPotential& cp, const WaveMesh& mesh, std::vector<double> v0, std::vector<double> vt0) {
    const auto states = discrete_bound_states(cp, mesh);
    return project_ac(states, std::move(v0), std::move(vt0), mesh.h);
}

double orthogonality_residual(const std::vector<DiscreteBoundState>& states, const std::vector<double>& v,
                              double h) {
    double worst = 0.0;
    for (const auto& s : states) worst = std::max(worst, std::abs(mesh_dot(v, s.vector, h)));
    return worst;
}

DecaySeries measure_decay(const WaveRun& run, const WeightFunction& w, double r_obs, double t0, double t1) {
    if (!(t1 > t0) || t0 < 0 || t1 > run.T + 1e-12) throw FitWindowError("fit window outside the simulated horizon");
    if (run.mesh.boundary == WaveBoundary::reflecting) {
        const double t_return = 2.0 * run.mesh.R_dom - r_obs - run.data_radius;
        if (t1 > t_return) throw FitWindowError("fit window reaches the boundary reflection return time");
    }
    DecaySeries ds;
    ds.t0 = t0;
    ds.t1 = t1;
    const double h = run.mesh.h;
    for (const auto& s : run.snapshots) {
        double nu = 0.0, nut = 0.0;
        for (std::size_t j = 1; j < s.r.size() && s.r[j] <= r_obs; ++j) {
            const double ph = w(s.r[j]);
            nu += ph * ph * s.v[j] * s.v[j];
            nut += ph * ph * s.vt[j] * s.vt[j];
        }
        ds.times.push_back(s.time);
        ds.norm_u.push_back(std::sqrt(4.0 * std::numbers::pi * h * nu));
        ds.norm_ut.push_back(std::sqrt(4.0 * std::numbers::pi * h * nut));
    }
    // Each series is fitted on its own positive run inside the window.
    auto collect = [&](const std::vector<double>& norm, std::vector<double>& t, std::vector<double>& y) {
        for (std::size_t k = 0; k < ds.times.size(); ++k) {
            if (ds.times[k] < t0 - 1e-12 || ds.times[k] > t1 + 1e-12) continue;
            if (norm[k] > 1e-300) {
                t.push_back(ds.times[k]);
                y.push_back(norm[k]);
            } else if (!t.empty()) {
                ds.notice = "norm underflow; window trimmed at t = " + std::to_string(ds.times[k]);
                break;
            }
        }
    };
    std::vector<double> tu, yu, tv, yv;
    collect(ds.norm_u, tu, yu);
    collect(ds.norm_ut, tv, yv);
    if (tu.size() < 3) throw FitWindowError("fewer than three snapshots in the fit window");
    ds.t1 = tu.back();
    const auto fu = fit_log(tu, yu);
    ds.rate = -fu.slope;
    ds.residual = fu.rms;
    if (tv.size() >= 3) {
        const auto fv = fit_log(tv, yv);
        ds.rate_ut = -fv.slope;
        ds.residual_ut = fv.rms;
    }
    return ds;
}

double default_wave_delta(const Potential& p) { return 0.5 * std::min(0.5 * p.decay().rate, 1.0); }

} // namespace reslab
