#include "reslab/radial_ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "reslab/errors.hpp"
#include "reslab/ode.hpp"
#include "reslab/quadrature.hpp"

namespace reslab {

namespace {

constexpr double kRescaleAt = 1e100;

struct Hermite5 {
    double h0, h1, h2, h3, h4, h5;
};

Hermite5 basis(double t) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    return {1 - 10 * t3 + 15 * t4 - 6 * t5,   t - 6 * t3 + 8 * t4 - 3 * t5,
            0.5 * (t2 - 3 * t3 + 3 * t4 - t5), 0.5 * (t3 - 2 * t4 + t5),
            -4 * t3 + 7 * t4 - 3 * t5,         10 * t3 - 15 * t4 + 6 * t5};
}

Hermite5 dbasis(double t) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    return {-30 * t2 + 60 * t3 - 30 * t4,     1 - 18 * t2 + 32 * t3 - 15 * t4,
            0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4), 0.5 * (3 * t2 - 8 * t3 + 5 * t4),
            -12 * t2 + 28 * t3 - 15 * t4,     30 * t2 - 60 * t3 + 30 * t4};
}

std::size_t locate(const std::vector<double>& r, double x) {
    if (x <= r.front()) return 0;
    if (x >= r.back()) {
        std::size_t i = r.size() - 2;
        while (i > 0 && r[i + 1] == r[i]) --i;
        return i;
    }
    auto it = std::upper_bound(r.begin(), r.end(), x);
    return std::size_t(it - r.begin()) - 1;
}

cplx hermite_eval(const RadialSolution& s, double x, bool deriv) {
    if (s.r.size() < 2) throw PreconditionError("radial solution has fewer than two samples");
    const std::size_t i = locate(s.r, x);
    const double h = s.r[i + 1] - s.r[i];
    const double ls0 = s.log_scale[i];
    const double rel = std::exp(s.log_scale[i + 1] - ls0);
    const cplx p1 = s.u[i + 1] * rel, d1 = s.du[i + 1] * rel, s1 = s.ddu[i + 1] * rel;
    const double t = (x - s.r[i]) / h;
    cplx v;
    if (!deriv) {
        const auto b = basis(t);
        v = b.h0 * s.u[i] + h * b.h1 * s.du[i] + h * h * b.h2 * s.ddu[i] + h * h * b.h3 * s1 +
            h * b.h4 * d1 + b.h5 * p1;
    } else {
        const auto b = dbasis(t);
        v = (b.h0 * s.u[i] + h * b.h1 * s.du[i] + h * h * b.h2 * s.ddu[i] + h * h * b.h3 * s1 +
             h * b.h4 * d1 + b.h5 * p1) /
            h;
    }
    return ls0 == 0.0 ? v : v * std::exp(ls0);
}

// Integral over [0, r0] of g(s) via Gauss-Legendre; g may be singular like 1/s at 0.
template <class F>
cplx small_interval(F&& g, double r0) {
    const auto& gl = quad::gauss_legendre(16);
    cplx s{};
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double x = 0.5 * r0 * (gl.nodes[i] + 1.0);
        s += 0.5 * r0 * gl.weights[i] * g(x);
    }
    return s;
}

struct Piece {
    double a, b, h_max;
};

std::vector<Piece> make_pieces(const Potential& p, double r_min, double r_max) {
    std::vector<double> cuts{r_min, r_max};
    std::vector<std::pair<double, double>> fine;
    for (const auto& f : p.features()) {
        if (f.width == 0.0) {
            cuts.push_back(f.at);
        } else {
            const double lo = f.at - 20.0 * f.width, hi = f.at + 20.0 * f.width;
            cuts.push_back(lo);
            cuts.push_back(f.at);
            cuts.push_back(hi);
            fine.emplace_back(lo, hi);
        }
    }
    if (std::isfinite(p.support_radius()) && p.support_radius() > 0) cuts.push_back(p.support_radius());
    std::vector<double> c;
    for (double x : cuts)
        if (x >= r_min && x <= r_max) c.push_back(x);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    std::vector<Piece> out;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
        double hm = std::numeric_limits<double>::infinity();
        for (const auto& [lo, hi] : fine)
            if (c[i] >= lo && c[i + 1] <= hi) hm = (hi - lo) / 160.0;
        out.push_back({c[i], c[i + 1], hm});
    }
    return out;
}

} // namespace

cplx RadialSolution::value(double x) const { return hermite_eval(*this, x, false); }
cplx RadialSolution::derivative(double x) const { return hermite_eval(*this, x, true); }

double default_r_max(const Potential& p) { return std::max(30.0, 20.0 / p.decay().rate); }

RadialSolution integrate_radial(const ChannelPotential& cp, cplx mu, double r_max, double tol) {
    RadialOptions o;
    o.r_max = r_max;
    o.tol = tol;
    return integrate_radial(cp, mu, o);
}

RadialSolution integrate_radial(const ChannelPotential& cp, cplx mu, const RadialOptions& opt) {
    const Potential& W = cp.base;
    const double alpha = cp.alpha;
    const double eps0 = W.decay().rate;
    const double r_max = opt.r_max > 0 ? opt.r_max : default_r_max(W);
    const double tol = opt.tol;
    if (!(r_max > 10.0 * std::max(1.0, 1.0 / eps0)))
        throw PreconditionError("r_max must exceed 10 max(1, 1/eps0)");
    if (!(tol > 1e-14 && tol < 1e-4)) throw PreconditionError("integrator tolerance out of range");
    if (alpha > 0 && !W.traits().bounded_at_origin)
        throw UnsupportedError("origin-singular potential in a channel with alpha > 0");

    const cplx mu2 = mu * mu;
    const double cent = alpha * (alpha + 1.0);
    RadialSolution sol;
    sol.mu = mu;
    sol.alpha = alpha;
    sol.tol = tol;

    // Start values at r_min.
    double r0;
    std::array<cplx, 2> y;
    if (alpha == 0.0) {
        r0 = opt.r_min > 0 ? opt.r_min : 1e-6;
        // First Picard iterate of u = r - int (r-s) q(s) u(s) ds with u ~ s.
        auto q = [&](double s) { return W(s) + mu2; };
        const cplx i1 = small_interval([&](double s) { return s * q(s); }, r0);
        const cplx i2 = small_interval([&](double s) { return (r0 - s) * s * q(s); }, r0);
        y = {r0 - i2, 1.0 - i1};
    } else {
        r0 = opt.r_min > 0 ? opt.r_min : 1e-4;
        const cplx c2 = -(W(0.0) + mu2) / (4.0 * alpha + 6.0);
        const double ra = std::pow(r0, alpha);
        y = {ra * r0 * (1.0 + c2 * r0 * r0),
             (alpha + 1.0) * ra + c2 * (alpha + 3.0) * ra * r0 * r0};
    }

    double log_scale = 0.0;
    ode::StepControl ctl;
    ctl.rtol = tol;
    ctl.atol = tol * 1e-3;
    ctl.max_steps = 5'000'000;

    const auto pieces = make_pieces(W, r0, r_max);
    bool first = true;
    for (const auto& pc : pieces) {
        const double lo = std::nextafter(pc.a, pc.b), hi = std::nextafter(pc.b, pc.a);
        auto wtot = [&](double r) {
            const double re = std::clamp(r, lo, hi);
            return W(re) - cent / (r * r);
        };
        auto rhs = [&](double r, const std::array<cplx, 2>& s, std::array<cplx, 2>& d) {
            d[0] = s[1];
            d[1] = -(wtot(r) + mu2) * s[0];
        };
        double t = pc.a;
        ctl.h_max = pc.h_max;
        ctl.h_init = std::isfinite(pc.h_max) ? pc.h_max : std::min(1e-2, 0.1 * (pc.b - pc.a));
        if (first) ctl.h_init = std::min(ctl.h_init, r0);
        first = false;
        // Each piece records its start again, so a jump in W leaves two samples at the
        // same radius carrying the one-sided second derivatives.
        bool restart = false;
        while (true) {
            bool stop_for_scale = false;
            auto obs = [&](double r, const std::array<cplx, 2>& s) {
                t = r;
                if (restart) {
                    restart = false;
                    return true;
                }
                sol.r.push_back(r);
                sol.u.push_back(s[0]);
                sol.du.push_back(s[1]);
                sol.ddu.push_back(-(wtot(r) + mu2) * s[0]);
                sol.log_scale.push_back(log_scale);
                if (std::max(std::abs(s[0]), std::abs(s[1])) > kRescaleAt) {
                    stop_for_scale = true;
                    return false;
                }
                return true;
            };
            ode::integrate(rhs, t, pc.b, y, ctl, obs);
            if (!stop_for_scale) break;
            const double m = std::max(std::abs(y[0]), std::abs(y[1]));
            y[0] /= m;
            y[1] /= m;
            log_scale += std::log(m);
            sol.r.push_back(t);
            sol.u.push_back(y[0]);
            sol.du.push_back(y[1]);
            sol.ddu.push_back(-(wtot(t) + mu2) * y[0]);
            sol.log_scale.push_back(log_scale);
            if (t >= pc.b) break;
            restart = true;
            ctl.h_init = 0.0;
        }
    }
    return sol;
}

cplx integrate_against(const RadialSolution& sol, double a, double b,
                       const std::function<double(double)>& f) {
    const auto& gl = quad::gauss_legendre(8);
    cplx total{};
    for (std::size_t i = 0; i + 1 < sol.r.size(); ++i) {
        const double lo = std::max(a, sol.r[i]), hi = std::min(b, sol.r[i + 1]);
        if (!(hi > lo)) continue;
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            // Evaluate inside the interval to pick the correct side of any jump.
            const double x = mid + half * gl.nodes[k];
            const double h = sol.r[i + 1] - sol.r[i];
            const double t = (x - sol.r[i]) / h;
            const auto bb = basis(t);
            const double rel = std::exp(sol.log_scale[i + 1] - sol.log_scale[i]);
            const cplx v = bb.h0 * sol.u[i] + h * bb.h1 * sol.du[i] + h * h * bb.h2 * sol.ddu[i] +
                           h * h * bb.h3 * sol.ddu[i + 1] * rel + h * bb.h4 * sol.du[i + 1] * rel +
                           bb.h5 * sol.u[i + 1] * rel;
            total += half * gl.weights[k] * f(x) * v * std::exp(sol.log_scale[i]);
        }
    }
    return total;
}

AsymptoticFit asymptotic_fit(const RadialSolution& sol, const ChannelPotential& cp, double lo_frac,
                             double hi_frac) {
    if (sol.mu != cplx(0.0, 0.0)) throw PreconditionError("asymptotic fit needs mu = 0");
    const Potential& W = cp.base;
    const double alpha = cp.alpha;
    const double eps0 = W.decay().rate;
    const double R = sol.r_max();
    AsymptoticFit fit;
    fit.alpha = alpha;
    fit.r_lo = lo_frac * R;
    fit.r_hi = hi_frac * R;
    const double r_lo = fit.r_lo;
    const auto breaks = W.breakpoints();

    // Remainders, with a convergence check on doubling the truncation.
    auto tail = [&](int power, double L) {
        return quad::integrate_piecewise(
            [&](double s) { return std::pow(1.0 + s, power) * W(s); }, r_lo, r_lo + L, breaks, 16);
    };
    const double L = 60.0 / eps0;
    fit.remainder_h = tail(1, L);
    fit.remainder_g = tail(2, L);
    const double g2 = tail(2, 2.0 * L);
    if (!std::isfinite(fit.remainder_g) || !std::isfinite(g2) ||
        std::abs(g2 - fit.remainder_g) > 1e-8 * std::max(1.0, std::abs(g2)))
        throw DecayAssumptionError("tail integrals do not converge under the declared decay");

    const double u_lo = sol.value(r_lo).real();
    const double du_lo = sol.derivative(r_lo).real();
    const double uR = sol.u.back().real() * std::exp(sol.log_scale.back());
    const double duR = sol.du.back().real() * std::exp(sol.log_scale.back());

    // Closure of a tail integral beyond the sampled range.
    const double far = R + L;
    const bool compact = W.support_radius() <= R;
    auto beyond = [&](const std::function<double(double)>& kernel) {
        if (compact) return 0.0;
        return quad::integrate(
            [&](double s) {
                const double ue = alpha == 0.0 ? uR + duR * (s - R) : uR * std::pow(s / R, alpha + 1.0);
                return kernel(s) * W(s) * ue;
            },
            R, far, 64, 16);
    };

    if (alpha == 0.0) {
        const double I1 = integrate_against(sol, r_lo, R, [&](double s) { return W(s); }).real() +
                          beyond([](double) { return 1.0; });
        const double I2 =
            integrate_against(sol, r_lo, R, [&](double s) { return (s - r_lo) * W(s); }).real() +
            beyond([&](double s) { return s - r_lo; });
        fit.C1 = du_lo - I1;
        fit.C0 = u_lo - fit.C1 * r_lo + I2;
    } else {
        const double a21 = 2.0 * alpha + 1.0;
        const double q = std::pow(r_lo, -alpha) * (du_lo + alpha * u_lo / r_lo);
        const double Ia =
            integrate_against(sol, r_lo, R, [&](double s) { return std::pow(s, -alpha) * W(s); })
                .real() +
            beyond([&](double s) { return std::pow(s, -alpha); });
        const double B = (alpha + 1.0) * std::pow(r_lo, alpha) * u_lo / a21 -
                         std::pow(r_lo, alpha + 1.0) * du_lo / a21;
        const double Ib =
            integrate_against(sol, r_lo, R,
                              [&](double s) { return std::pow(s, alpha + 1.0) * W(s); })
                .real() +
            beyond([&](double s) { return std::pow(s, alpha + 1.0); });
        fit.C0 = q - Ia;
        fit.C1 = B + Ib / a21;
    }

    // Residual of the model on the window.
    double dev = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < sol.r.size(); ++i) {
        const double s = sol.r[i];
        if (s < fit.r_lo || s > fit.r_hi) continue;
        const double u = sol.u[i].real() * std::exp(sol.log_scale[i]);
        const double model = alpha == 0.0
                                 ? fit.C0 + fit.C1 * s
                                 : fit.C0 * std::pow(s, alpha + 1.0) / (2.0 * alpha + 1.0) +
                                       fit.C1 * std::pow(s, -alpha);
        dev = std::max(dev, std::abs(u - model));
        mag = std::max(mag, std::abs(u));
    }
    fit.residual = mag > 0 ? dev / mag : 0.0;
    return fit;
}

std::string to_string(ZeroEnergyKind k) {
    switch (k) {
    case ZeroEnergyKind::regular: return "regular";
    case ZeroEnergyKind::strong_resonance: return "strong_resonance";
    case ZeroEnergyKind::eigenvalue_threshold: return "eigenvalue_threshold";
    case ZeroEnergyKind::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

ZeroEnergyVerdict classify_zero_energy(const ChannelPotential& cp, double tol,
                                       const RadialOptions& opt) {
    ZeroEnergyVerdict v;
    v.tol = tol;
    v.solution = integrate_radial(cp, 0.0, opt);
    v.fit = asymptotic_fit(v.solution, cp);
    const double c0 = std::abs(v.fit.C0), c1 = std::abs(v.fit.C1);
    const double scale = std::max(c0, c1);
    if (cp.alpha == 0.0) {
        // C0 bounded part, C1 linear growth.
        if (c1 <= tol * c0 && c0 > tol)
            v.kind = ZeroEnergyKind::strong_resonance;
        else if (c1 > tol * scale)
            v.kind = ZeroEnergyKind::regular;
        else
            v.kind = ZeroEnergyKind::inconclusive;
    } else {
        // C0 multiplies the growing power, C1 the decaying one.
        if (c0 <= tol * c1 && c1 > tol)
            v.kind = cp.alpha > 0.5 ? ZeroEnergyKind::eigenvalue_threshold
                                    : ZeroEnergyKind::strong_resonance;
        else if (c0 > tol * scale)
            v.kind = ZeroEnergyKind::regular;
        else
            v.kind = ZeroEnergyKind::inconclusive;
    }
    return v;
}

std::size_t count_nodes(const ChannelPotential& cp, double energy, const RadialOptions& opt) {
    if (!(energy < 0)) throw PreconditionError("node counting needs a negative energy");
    const double kappa = std::sqrt(-energy);
    const auto sol = integrate_radial(cp, cplx(0.0, kappa), opt);
    std::size_t nodes = 0;
    for (std::size_t i = 1; i < sol.size(); ++i) {
        const double a = sol.u[i - 1].real(), b = sol.u[i].real();
        if ((a > 0 && b <= 0) || (a < 0 && b >= 0)) ++nodes;
    }
    // Growing component beyond r_max, A e^{kappa r}: opposite sign to u means one more node.
    const double uR = sol.u.back().real(), duR = sol.du.back().real();
    const double A = (kappa * uR + duR) / (2.0 * kappa);
    if (A * uR < 0) ++nodes;
    return nodes;
}

namespace {

BoundState make_eigenfunction(const ChannelPotential& cp, double energy, std::size_t nodes,
                              const RadialOptions& opt) {
    const double kappa = std::sqrt(-energy);
    RadialSolution sol = integrate_radial(cp, cplx(0.0, kappa), opt);
    // Last sign change, then the minimum of |u| beyond it.
    std::size_t last_node = 0;
    for (std::size_t i = 1; i < sol.size(); ++i) {
        const double a = sol.u[i - 1].real(), b = sol.u[i].real();
        if ((a > 0 && b <= 0) || (a < 0 && b >= 0)) last_node = i;
    }
    // Skip past the peak after the last node before looking for the minimum.
    std::size_t peak = last_node;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = last_node; i < sol.size(); ++i) {
        const double lm = std::log(std::abs(sol.u[i].real()) + 1e-300) + sol.log_scale[i];
        if (lm > best) {
            best = lm;
            peak = i;
        }
        if (sol.u[i].real() * sol.du[i].real() < 0) break;
    }
    std::size_t cut = peak;
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t i = peak; i < sol.size(); ++i) {
        const double lm = std::log(std::abs(sol.u[i].real()) + 1e-300) + sol.log_scale[i];
        if (lm < low) {
            low = lm;
            cut = i;
        }
    }
    sol.r.resize(cut + 1);
    sol.u.resize(cut + 1);
    sol.du.resize(cut + 1);
    sol.ddu.resize(cut + 1);
    sol.log_scale.resize(cut + 1);
    // Undo the scaling (the cut lies before any large growth) and append the decaying tail.
    for (std::size_t i = 0; i <= cut; ++i) {
        const double f = std::exp(sol.log_scale[i]);
        sol.u[i] = sol.u[i].real() * f;
        sol.du[i] = sol.du[i].real() * f;
        sol.ddu[i] = sol.ddu[i].real() * f;
        sol.log_scale[i] = 0.0;
    }
    const double rc = sol.r[cut], uc = sol.u[cut].real();
    const double tail_end = std::max(rc, sol.r.back()) + 40.0 / kappa;
    sol.du[cut] = -kappa * uc;
    sol.ddu[cut] = kappa * kappa * uc;
    const int extra = 200;
    for (int k = 1; k <= extra; ++k) {
        const double r = rc + (tail_end - rc) * k / extra;
        const double v = uc * std::exp(-kappa * (r - rc));
        sol.r.push_back(r);
        sol.u.push_back(v);
        sol.du.push_back(-kappa * v);
        sol.ddu.push_back(kappa * kappa * v);
        sol.log_scale.push_back(0.0);
    }
    // Norm of the interpolant, sample interval by sample interval.
    double norm2 = 0.0;
    {
        const auto& gl = quad::gauss_legendre(8);
        for (std::size_t i = 0; i + 1 < sol.size(); ++i) {
            const double lo = sol.r[i], hi = sol.r[i + 1];
            if (!(hi > lo)) continue;
            const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                const double v = sol.value(mid + half * gl.nodes[k]).real();
                norm2 += half * gl.weights[k] * v * v;
            }
        }
        norm2 += uc * uc * std::exp(-2.0 * kappa * (tail_end - rc)) / (2.0 * kappa);
    }
    const double nrm = std::sqrt(norm2);
    for (std::size_t i = 0; i < sol.size(); ++i) {
        sol.u[i] /= nrm;
        sol.du[i] /= nrm;
        sol.ddu[i] /= nrm;
    }
    BoundState bs;
    bs.energy = energy;
    bs.eigenfunction = std::move(sol);
    bs.l2_norm = 1.0;
    bs.nodes = nodes;
    return bs;
}

} // namespace

std::vector<BoundState> bound_states(const ChannelPotential& cp, double e_lo, double e_hi,
                                     const RadialOptions& opt) {
    if (!(e_lo < e_hi) || !(e_hi < 0)) throw PreconditionError("bound-state interval must lie in (-inf, 0)");
    // Monotonicity of the node count on a coarse energy ladder.
    const int ladder = 24;
    std::vector<std::size_t> counts(ladder + 1);
    for (int k = 0; k <= ladder; ++k) {
        const double e = e_lo + (e_hi - e_lo) * k / ladder;
        counts[k] = count_nodes(cp, e, opt);
        if (k > 0 && counts[k] < counts[k - 1])
            throw MeshRefinementError("node count is not monotone in the energy; refine the mesh");
    }
    std::vector<BoundState> out;
    for (std::size_t target = counts.front(); target < counts.back(); ++target) {
        // Eigenvalue number `target`: largest energy with count <= target.
        double lo = e_lo, hi = e_hi;
        for (int k = 0; k <= ladder; ++k) {
            const double e = e_lo + (e_hi - e_lo) * k / ladder;
            if (counts[k] <= target) lo = e;
            else {
                hi = e;
                break;
            }
        }
        for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (count_nodes(cp, mid, opt) <= target ? lo : hi) = mid;
        }
        out.push_back(make_eigenfunction(cp, 0.5 * (lo + hi), target, opt));
    }
    return out;
}

std::vector<BoundState> bound_states(const ChannelPotential& cp, const RadialOptions& opt) {
    double wmax = 0.0;
    for (double r : log_grid(1e-4, default_r_max(cp.base), 400)) wmax = std::max(wmax, cp.base(r));
    return bound_states(cp, -wmax - 1.0, -1e-8, opt);
}

std::vector<cplx> wronskian(const RadialSolution& s1, const RadialSolution& s2) {
    std::vector<cplx> w;
    w.reserve(s1.size());
    for (std::size_t i = 0; i < s1.size(); ++i) {
        const double r = s1.r[i];
        if (r < s2.r_min() || r > s2.r_max()) continue;
        const cplx u1 = s1.u[i] * std::exp(s1.log_scale[i]);
        const cplx d1 = s1.du[i] * std::exp(s1.log_scale[i]);
        w.push_back(u1 * s2.derivative(r) - d1 * s2.value(r));
    }
    return w;
}

} // namespace reslab
