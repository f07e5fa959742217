#include "reslab/ground_state.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "reslab/errors.hpp"
#include "reslab/ode.hpp"
#include "reslab/quadrature.hpp"

namespace reslab {

namespace {

using State = std::array<double, 2>;

double power(double x, double p) { return x >= 0 ? std::pow(x, p) : -std::pow(-x, p); }

double second_derivative(double p, double omega, double chi0, double r, double c, double dc) {
    if (r == 0.0) return (omega * chi0 - std::pow(chi0, p)) / 3.0;
    return -2.0 * dc / r + omega * c - power(c, p);
}

struct Sampled {
    std::vector<double> r, chi, dchi;
};

ode::StepControl control() {
    ode::StepControl c;
    c.rtol = 1e-12;
    c.atol = 1e-30;
    c.h_max = 0.02;
    c.h_init = 1e-4;
    return c;
}

enum class Shot { too_large, too_small, undecided };

Shot shoot(double p, double omega, double a, double r_min, double r_end, Sampled* keep = nullptr,
           double stop_at = 0.0) {
    const double b = (omega * a - std::pow(a, p)) / 6.0;
    State y{a + b * r_min * r_min, 2.0 * b * r_min};
    auto rhs = [&](double r, const State& s, State& d) {
        d[0] = s[1];
        d[1] = -2.0 * s[1] / r + omega * s[0] - power(s[0], p);
    };
    Shot verdict = Shot::undecided;
    auto ctl = control();
    ctl.h_max = std::min(ctl.h_max, 0.02 / std::sqrt(omega));
    const double end = stop_at > 0 ? stop_at : r_end;
    auto obs = [&](double r, const State& s) {
        if (keep) {
            keep->r.push_back(r);
            keep->chi.push_back(s[0]);
            keep->dchi.push_back(s[1]);
        }
        if (stop_at > 0) return true;
        if (s[0] < 0) {
            verdict = Shot::too_large;
            return false;
        }
        if (s[1] >= 0) {
            verdict = Shot::too_small;
            return false;
        }
        return true;
    };
    ode::integrate(rhs, r_min, end, y, ctl, obs);
    return verdict;
}

// Inward integration of the decaying branch from r_far, chi = C e^{-k r}/r there.
Sampled shoot_in(double p, double omega, double C, double r_far, double r_m) {
    const double k = std::sqrt(omega);
    const double c = C * std::exp(-k * r_far) / r_far;
    State y{c, -c * (k + 1.0 / r_far)};
    auto rhs = [&](double r, const State& s, State& d) {
        d[0] = s[1];
        d[1] = -2.0 * s[1] / r + omega * s[0] - power(s[0], p);
    };
    Sampled out;
    auto ctl = control();
    ctl.h_max = std::min(ctl.h_max, 0.02 / k);
    ode::integrate(rhs, r_far, r_m, y, ctl, [&](double r, const State& s) {
        out.r.push_back(r);
        out.chi.push_back(s[0]);
        out.dchi.push_back(s[1]);
        return true;
    });
    return out;
}

double integrate_profile(const GroundState& gs, const std::function<double(double, double, double)>& f) {
    const auto& gl = quad::gauss_legendre(8);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < gs.r.size(); ++i) {
        const double lo = gs.r[i], hi = gs.r[i + 1];
        if (!(hi > lo)) continue;
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double x = mid + half * gl.nodes[k];
            s += half * gl.weights[k] * f(x, gs.value(x), gs.derivative(x));
        }
    }
    return s;
}

double compute_l2(const GroundState& gs) {
    const double m = integrate_profile(gs, [](double r, double c, double) { return c * c * r * r; });
    return std::sqrt(4.0 * std::numbers::pi * m);
}

} // namespace

double GroundState::decay_rate() const { return std::sqrt(omega); }

double GroundState::value(double x) const {
    if (r.size() < 2) throw StaleInputError("ground state has no profile");
    const double k = decay_rate();
    if (x >= r.back()) {
        const double C = r.back() * chi.back() * std::exp(k * r.back());
        return C * std::exp(-k * x) / x;
    }
    if (x <= 0.0) return chi.front();
    auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t i = std::size_t(it - r.begin()) - 1;
    const double h = r[i + 1] - r[i];
    const double t = (x - r[i]) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double s0 = second_derivative(p, omega, chi0, r[i], chi[i], dchi[i]);
    const double s1 = second_derivative(p, omega, chi0, r[i + 1], chi[i + 1], dchi[i + 1]);
    return (1 - 10 * t3 + 15 * t4 - 6 * t5) * chi[i] + h * (t - 6 * t3 + 8 * t4 - 3 * t5) * dchi[i] +
           h * h * 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * s0 + h * h * 0.5 * (t3 - 2 * t4 + t5) * s1 +
           h * (-4 * t3 + 7 * t4 - 3 * t5) * dchi[i + 1] + (10 * t3 - 15 * t4 + 6 * t5) * chi[i + 1];
}

double GroundState::derivative(double x) const {
    if (r.size() < 2) throw StaleInputError("ground state has no profile");
    const double k = decay_rate();
    if (x >= r.back()) return -value(x) * (k + 1.0 / x);
    if (x <= 0.0) return 0.0;
    auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t i = std::size_t(it - r.begin()) - 1;
    const double h = r[i + 1] - r[i];
    const double t = (x - r[i]) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double s0 = second_derivative(p, omega, chi0, r[i], chi[i], dchi[i]);
    const double s1 = second_derivative(p, omega, chi0, r[i + 1], chi[i + 1], dchi[i + 1]);
    return ((-30 * t2 + 60 * t3 - 30 * t4) * chi[i] + h * (1 - 18 * t2 + 32 * t3 - 15 * t4) * dchi[i] +
            h * h * 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4) * s0 +
            h * h * 0.5 * (3 * t2 - 8 * t3 + 5 * t4) * s1 +
            h * (-12 * t2 + 28 * t3 - 15 * t4) * dchi[i + 1] + (30 * t2 - 60 * t3 + 30 * t4) * chi[i + 1]) /
           h;
}

GroundState solve_ground_state(double p, const GroundStateOptions& opt) {
    return solve_ground_state_direct(p, 1.0, opt);
}

GroundState solve_ground_state_direct(double p, double omega, const GroundStateOptions& opt) {
    if (!(p > 1.0 && p < 5.0)) throw PreconditionError("ground state needs 1 < p < 5");
    if (!(omega > 0)) throw PreconditionError("ground state needs omega > 0");
    if (!(opt.tol > 1e-12 && opt.tol < 1e-6)) throw PreconditionError("ground state tol out of range");
    const double k = std::sqrt(omega);
    const double scale = std::pow(omega, 1.0 / (p - 1.0));
    const double r_min = opt.r_min / k;
    const double r_end = 40.0 / k;

    // Bisection on chi(0); the bracket is given for omega = 1 and scaled.
    double lo = opt.chi0_lo * scale, hi = opt.chi0_hi * scale;
    if (shoot(p, omega, lo, r_min, r_end) != Shot::too_small ||
        shoot(p, omega, hi, r_min, r_end) != Shot::too_large)
        throw BracketError("no shooting bracket for chi(0) in the search interval");
    for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Shot s = shoot(p, omega, mid, r_min, r_end);
        if (s == Shot::too_large)
            hi = mid;
        else if (s == Shot::too_small)
            lo = mid;
        else {
            lo = hi = mid;
            break;
        }
    }
    double a = 0.5 * (lo + hi);

    // Two-sided matching: outward from the origin and inward along the decaying branch.
    const double r_m = 6.0 / k;
    auto outward = [&](double a0) {
        Sampled s;
        shoot(p, omega, a0, r_min, r_end, &s, r_m);
        return s;
    };
    Sampled out = outward(a);
    double C = r_m * out.chi.back() * std::exp(k * r_m);
    auto mismatch = [&](double a0, double C0) {
        const Sampled o = outward(a0);
        const Sampled i = shoot_in(p, omega, C0, r_end, r_m);
        return Eigen::Vector2d(o.chi.back() - i.chi.back(), o.dchi.back() - i.dchi.back());
    };
    double resid = 0.0;
    for (int it = 0; it < 30; ++it) {
        const Eigen::Vector2d F = mismatch(a, C);
        resid = F.norm() / std::max(1e-300, std::abs(out.chi.back()));
        if (resid < 1e-13) break;
        const double ha = 1e-7 * a, hc = 1e-7 * C;
        Eigen::Matrix2d J;
        J.col(0) = (mismatch(a + ha, C) - F) / ha;
        J.col(1) = (mismatch(a, C + hc) - F) / hc;
        const Eigen::Vector2d d = J.fullPivLu().solve(-F);
        a += d(0);
        C += d(1);
        if (!std::isfinite(a) || !std::isfinite(C)) throw EvaluationError("ground state matching diverged");
    }

    GroundState gs;
    gs.p = p;
    gs.omega = omega;
    gs.chi0 = a;
    gs.tol = opt.tol;
    out = outward(a);
    const Sampled in = shoot_in(p, omega, C, r_end, r_m);
    gs.r.push_back(0.0);
    gs.chi.push_back(a);
    gs.dchi.push_back(0.0);
    for (std::size_t i = 0; i < out.r.size(); ++i) {
        gs.r.push_back(out.r[i]);
        gs.chi.push_back(out.chi[i]);
        gs.dchi.push_back(out.dchi[i]);
    }
    // Inward samples run from r_far to r_m; skip the shared matching point.
    for (std::size_t j = in.r.size() - 1; j-- > 0;) {
        gs.r.push_back(in.r[j]);
        gs.chi.push_back(in.chi[j]);
        gs.dchi.push_back(in.dchi[j]);
    }
    gs.tail_C0 = C;
    gs.l2_norm = compute_l2(gs);
    gs.converged = resid < opt.tol;
    if (!gs.converged) throw EvaluationError("ground state matching did not reach tolerance");
    return gs;
}

GroundState rescale(const GroundState& gs, double omega) {
    if (!gs.converged) throw StaleInputError("rescaling an unsolved ground state");
    if (!(omega > 0)) throw PreconditionError("omega must be positive");
    const double rel = omega / gs.omega;
    const double k = std::sqrt(rel);
    const double amp = std::pow(rel, 1.0 / (gs.p - 1.0));
    GroundState out = gs;
    out.omega = omega;
    for (std::size_t i = 0; i < gs.r.size(); ++i) {
        out.r[i] = gs.r[i] / k;
        out.chi[i] = amp * gs.chi[i];
        out.dchi[i] = amp * k * gs.dchi[i];
    }
    out.chi0 = amp * gs.chi0;
    out.tail_C0 = amp / k * gs.tail_C0;
    out.l2_norm = std::pow(rel, 1.0 / (gs.p - 1.0) - 0.75) * gs.l2_norm;
    return out;
}

double mass(const GroundState& gs1, double omega) {
    return std::pow(omega / gs1.omega, 1.0 / (gs1.p - 1.0) - 0.75) * gs1.l2_norm;
}

MassCurve mass_curve(const GroundState& gs1, const std::vector<double>& omegas) {
    if (omegas.size() < 2) throw PreconditionError("mass curve needs at least two frequencies");
    MassCurve mc;
    mc.omegas = omegas;
    mc.expected = 1.0 / (gs1.p - 1.0) - 0.75;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double w : omegas) {
        const double n = compute_l2(rescale(gs1, w));
        mc.norms.push_back(n);
        const double x = std::log(w), y = std::log(n);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = double(omegas.size());
    mc.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return mc;
}

double find_omega_star(const GroundState& gs1, double lo, double hi) {
    if (!(gs1.p > 1.0 && gs1.p < 7.0 / 3.0))
        throw PreconditionError("omega* needs 1 < p < 7/3 so the mass is increasing");
    auto f = [&](double w) { return mass(gs1, w) - 1.0; };
    if (f(lo) > 0 || f(hi) < 0) throw RangeError("unit mass is not reached on the search interval");
    double a = std::log(lo), b = std::log(hi);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        (f(std::exp(m)) < 0 ? a : b) = m;
    }
    return std::exp(0.5 * (a + b));
}

TailReport tail_asymptotics(const GroundState& gs) {
    const double k = gs.decay_rate();
    const double R = gs.r.back();
    if (!(R * gs.chi.back() < 1e-10)) throw FitWindowError("profile does not reach r chi < 1e-10");
    TailReport rep;
    rep.window_lo = 12.0 / k;
    rep.window_hi = 30.0 / k;
    if (rep.window_hi > R) throw FitWindowError("tail window extends past the profile");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0, ratio = 0;
    for (std::size_t i = 0; i < gs.r.size(); ++i) {
        const double r = gs.r[i];
        if (r < rep.window_lo || r > rep.window_hi) continue;
        const double y = std::log(r * gs.chi[i]);
        sx += r;
        sy += y;
        sxx += r * r;
        sxy += r * y;
        n += 1;
        ratio += (gs.chi[i] + r * gs.dchi[i]) / (r * gs.chi[i]);
    }
    if (n < 10) throw FitWindowError("too few samples in the tail window");
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.slope_error = std::abs(rep.slope + k);
    // The far end of the profile sits deepest in the asymptotic regime.
    rep.C0 = R * gs.chi.back() * std::exp(k * R);
    rep.derivative_ratio = ratio / n;
    rep.derivative_error = std::abs(rep.derivative_ratio + k);

    // Decay exponent of r chi - C0 e^{-k r}, on the window where its relative size
    // e^{-(p-1) k r} lies between 1e-1 and 1e-6.
    const double c_lo = std::log(10.0) / ((gs.p - 1.0) * k);
    const double c_hi = std::log(1e6) / ((gs.p - 1.0) * k);
    sx = sy = sxx = sxy = n = 0;
    for (std::size_t i = 0; i < gs.r.size(); ++i) {
        const double r = gs.r[i];
        if (r < c_lo || r > std::min(c_hi, R)) continue;
        const double c = std::abs(r * gs.chi[i] - rep.C0 * std::exp(-k * r));
        if (!(c > 0)) continue;
        const double y = std::log(c);
        sx += r;
        sy += y;
        sxx += r * r;
        sxy += r * y;
        n += 1;
    }
    rep.correction_order = n >= 3 ? -(n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
    return rep;
}

KernelSplit kernel_split_residual(const GroundState& gs1) {
    if (!gs1.converged) throw StaleInputError("kernel split on an unsolved ground state");
    const double k = gs1.decay_rate();
    const double R = gs1.r.back();
    const auto grid = quad::PanelGrid::graded(0.0, R, 1, 16, 1.0, {}, 0.25 / k);
    const auto& x = grid.nodes();
    std::vector<double> f1(x.size()), f2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = std::pow(gs1.value(x[i]), gs1.p);
        f1[i] = std::sinh(k * x[i]) * F * x[i];
        f2[i] = std::exp(-k * x[i]) * F * x[i];
    }
    const auto c1 = grid.cumulative(std::span<const double>(f1));
    const auto c2 = grid.reverse_cumulative(std::span<const double>(f2));
    std::vector<double> K1(x.size()), K2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        K1[i] = std::exp(-k * x[i]) * c1[i];
        K2[i] = std::sinh(k * x[i]) * c2[i];
    }
    KernelSplit ks;
    // Calibrate c at r = 1.
    const double r1 = 1.0 / k;
    const double model1 = (grid.interpolate(K1, r1) + grid.interpolate(K2, r1)) / r1;
    ks.c = gs1.value(r1) / model1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.5 / k || x[i] > 10.0 / k) continue;
        const double chi = gs1.value(x[i]);
        const double model = ks.c * (K1[i] + K2[i]) / x[i];
        ks.residual = std::max(ks.residual, std::abs(chi - model) / chi);
    }
    const double ra = 15.0 / k, rb = 20.0 / k;
    ks.k1_slope = std::log(grid.interpolate(K1, rb) / grid.interpolate(K1, ra)) / (rb - ra);
    const double sa = 8.0 / k, sb = 12.0 / k;
    ks.k2_slope = std::log(grid.interpolate(K2, sb) / grid.interpolate(K2, sa)) / (sb - sa);
    return ks;
}

IdentityReport check_identities(const GroundState& gs) {
    const double p = gs.p, w = gs.omega;
    IdentityReport rep;
    const double fp = 4.0 * std::numbers::pi;
    rep.kinetic = fp * integrate_profile(gs, [](double r, double, double d) { return d * d * r * r; });
    rep.mass2 = fp * integrate_profile(gs, [](double r, double c, double) { return c * c * r * r; });
    rep.potential =
        fp * integrate_profile(gs, [p](double r, double c, double) { return std::pow(c, p + 1.0) * r * r; });
    rep.energy = 0.5 * rep.kinetic - rep.potential / (p + 1.0);
    const double lhs = 0.5 * rep.kinetic + 1.5 * w * rep.mass2;
    const double rhs = 3.0 / (p + 1.0) * rep.potential;
    rep.virial_residual = std::abs(lhs - rhs) / rhs;
    rep.nehari_residual = std::abs(rep.kinetic + w * rep.mass2 - rep.potential) / rep.potential;
    const double h1 = std::sqrt(rep.kinetic + rep.mass2);
    rep.strauss_margin = std::numeric_limits<double>::infinity();
    rep.log_derivative_max = -std::numeric_limits<double>::infinity();
    rep.log_derivative_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < gs.r.size(); ++i) {
        const double r = gs.r[i];
        rep.strauss_margin = std::min(rep.strauss_margin, h1 - r * gs.chi[i]);
        const double ld = gs.dchi[i] / gs.chi[i];
        rep.log_derivative_max = std::max(rep.log_derivative_max, ld);
        rep.log_derivative_min = std::min(rep.log_derivative_min, ld);
    }
    return rep;
}

std::string ground_state_key(double p, double omega) {
    std::ostringstream os;
    os.precision(17);
    os << "p=" << p << ";omega=" << omega;
    return os.str();
}

} // namespace reslab
