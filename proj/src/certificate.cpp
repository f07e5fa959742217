#include "reslab/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "reslab/errors.hpp"
#include "reslab/parallel.hpp"

namespace reslab {

namespace {

// 1 - e^{-y}, y - (1 - e^{-y}), y^2/2 - y + 1 - e^{-y}, with series for small y.
double em1(double y) { return -std::expm1(-y); }
double em2(double y) {
    if (y < 1e-2) return y * y * (0.5 - y / 6.0 + y * y / 24.0 - y * y * y / 120.0);
    return y - em1(y);
}
double em3(double y) {
    if (y < 1e-2) return y * y * y * (1.0 / 6.0 - y / 24.0 + y * y / 120.0 - y * y * y / 720.0);
    return 0.5 * y * y - y + em1(y);
}

double simpson(const std::function<double(double)>& f, double a, double b, double h) {
    if (!(b > a)) return 0.0;
    std::size_t n = std::size_t(std::ceil((b - a) / h));
    n = std::max<std::size_t>(2, n + (n % 2));
    const double dx = (b - a) / double(n);
    // Endpoints are taken from inside so a jump at a segment edge is seen one-sided.
    double s = f(a > 0 ? std::nextafter(a, b) : a) + f(std::nextafter(b, a));
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + dx * double(i));
    return s * dx / 3.0;
}

template <class F>
void grid_eval(const std::vector<double>& grid, std::vector<double>& out, F&& f) {
    out.resize(grid.size());
    const std::size_t block = 256;
    const std::size_t nb = (grid.size() + block - 1) / block;
    parallel_for(nb, [&](std::size_t b) {
        const std::size_t hi = std::min(grid.size(), (b + 1) * block);
        for (std::size_t i = b * block; i < hi; ++i) out[i] = f(grid[i]);
    });
}

} // namespace

TestFunctions::TestFunctions(double M, double delta) : M_(M), delta_(delta), r0_(M * M) {
    if (!(M >= 1)) throw PreconditionError("test functions need M >= 1");
    if (!(delta > 0)) throw PreconditionError("test functions need delta > 0");
    e0_ = std::exp(-delta * r0_);
    g1_0_ = std::pow(r0_, M + 1) / (M + 1);
    g_0_ = std::pow(r0_, M + 2) / ((M + 2) * (M + 1));
    G_0_ = std::pow(r0_, M + 3) / ((M + 3) * (M + 2) * (M + 1));
}

double TestFunctions::g2(double r) const {
    return r < r0_ ? std::pow(r, M_) : std::exp(-delta_ * r);
}

double TestFunctions::g1(double r) const {
    if (r <= r0_) return std::pow(r, M_ + 1) / (M_ + 1);
    return g1_0_ + e0_ * em1(delta_ * (r - r0_)) / delta_;
}

double TestFunctions::g(double r) const {
    if (r <= r0_) return std::pow(r, M_ + 2) / ((M_ + 2) * (M_ + 1));
    const double x = r - r0_, d = delta_;
    return g_0_ + g1_0_ * x + e0_ * em2(d * x) / (d * d);
}

double TestFunctions::G(double r) const {
    if (r <= r0_) return std::pow(r, M_ + 3) / ((M_ + 3) * (M_ + 2) * (M_ + 1));
    const double x = r - r0_, d = delta_;
    return G_0_ + g_0_ * x + 0.5 * g1_0_ * x * x + e0_ * em3(d * x) / (d * d * d);
}

double phi_centrifugal(double r, double alpha, const TestFunctions& tf) {
    if (alpha == 0.0) return 0.0;
    return -alpha * (alpha + 1.0) * (2.0 * tf.g(r) / (r * r) - 2.0 * tf.G(r) / (r * r * r));
}

double phi(double r, const ChannelPotential& cp, const TestFunctions& tf) {
    if (r == 0.0) return 0.0;
    return phi_centrifugal(r, cp.alpha, tf) + 2.0 * tf.g(r) * cp.base(r) +
           tf.G(r) * cp.base.derivative(r) + 0.5 * tf.g2(r);
}

PhiIdentity verify_phi_identity(const std::function<double(double)>& u, double u_inf,
                                const ChannelPotential& cp, const TestFunctions& tf, double h) {
    if (!(h > 0)) throw PreconditionError("step must be positive");
    PhiIdentity out;
    out.step = h;
    out.truncation = tf.join() + 60.0 / tf.delta();
    std::vector<double> cuts{0.0, tf.join(), out.truncation};
    std::vector<std::pair<double, double>> fine;
    for (const auto& f : cp.base.features()) {
        if (f.width == 0.0) {
            cuts.push_back(f.at);
        } else {
            cuts.push_back(f.at - 20.0 * f.width);
            cuts.push_back(f.at + 20.0 * f.width);
            fine.emplace_back(f.at - 20.0 * f.width, f.width);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto integrand = [&](double r) {
        if (r == 0.0) return 0.0;
        const double v = u(r);
        return phi(r, cp, tf) * v * v;
    };
    auto abs_integrand = [&](double r) {
        if (r == 0.0) return 0.0;
        const double v = u(r);
        return std::abs(phi(r, cp, tf)) * v * v;
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (a < 0 || b > out.truncation) continue;
        double step = h;
        for (const auto& [lo, w] : fine)
            if (std::abs(a - lo) < 1e-14) step = h * w;
        out.integral += simpson(integrand, a, b, step);
        out.abs_integral += simpson(abs_integrand, a, b, step);
    }
    out.boundary_term = 0.5 * tf.g1_limit() * u_inf * u_inf;
    if (out.abs_integral == 0.0) return out;
    out.residual = std::abs(out.integral) / out.abs_integral;
    out.flux_residual = std::abs(out.integral - out.boundary_term) / out.abs_integral;
    return out;
}

PhiIdentity verify_phi_identity(const RadialSolution& sol, const ChannelPotential& cp,
                                const TestFunctions& tf, double h) {
    bool zero = true;
    for (const auto& v : sol.u)
        if (v != cplx(0.0, 0.0)) zero = false;
    if (zero) return PhiIdentity{};
    const AsymptoticFit fit = asymptotic_fit(sol, cp);
    if (cp.alpha == 0.0 ? std::abs(fit.C1) > 1e-6 * std::abs(fit.C0)
                        : std::abs(fit.C0) > 1e-6 * std::abs(fit.C1))
        throw PreconditionError("the Phi identity needs a bounded zero-energy solution");
    const double rmin = sol.r_min(), rmax = sol.r_max();
    const double umin = sol.value(rmin).real();
    const double alpha = cp.alpha;
    auto u = [&](double r) {
        if (r < rmin) return umin * std::pow(r / rmin, alpha + 1.0);
        if (r <= rmax) return sol.value(r).real();
        return alpha == 0.0 ? fit.C0 + fit.C1 * r : fit.C1 * std::pow(r, -alpha);
    };
    const double u_inf = alpha == 0.0 ? fit.C0 : 0.0;
    return verify_phi_identity(u, u_inf, cp, tf, h);
}

std::vector<double> region_grid(double lo, double hi, int per_decade, int uniform) {
    std::vector<double> g;
    const double start = lo > 0 ? lo : std::min(1e-4, 1e-3 * hi);
    const double decades = std::log10(hi / start);
    const int n = std::max(2, int(std::ceil(decades * per_decade)));
    for (int i = 0; i <= n; ++i) g.push_back(start * std::pow(10.0, decades * i / n));
    for (int i = 1; i < uniform; ++i) g.push_back(lo + (hi - lo) * i / uniform);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    // Open interval.
    std::vector<double> out;
    for (double x : g)
        if (x > lo && x < hi) out.push_back(x);
    return out;
}

RegionCheck check_middle_region(const ChannelPotential& cp, const TestFunctions& tf,
                                const std::vector<double>& grid) {
    if (!cp.base.traits().bounded_at_origin)
        throw PreconditionError("middle-region check needs a potential bounded at the origin");
    const double M = tf.M();
    const double a2 = cp.alpha * (cp.alpha + 1.0);
    const double Cs = cp.base.decay().amplitude, eps0 = cp.base.decay().rate;
    const double denom = (M + 3) * (M + 2) * (M + 1);
    std::vector<double> direct, rel, proof;
    grid_eval(grid, direct, [&](double r) { return phi(r, cp, tf) - 2.0 * tf.g(r) * cp.base(r); });
    grid_eval(grid, rel, [&](double r) {
        return (phi(r, cp, tf) - 2.0 * tf.g(r) * cp.base(r)) / (0.5 * tf.g2(r));
    });
    grid_eval(grid, proof, [&](double r) {
        return 1.0 - 4.0 * a2 / ((M + 3) * (M + 1)) -
               2.0 * Cs * r * r * r * std::exp(-eps0 * r) / denom;
    });
    RegionCheck rc;
    rc.points = grid.size();
    rc.margin = rc.relative_margin = rc.proof_bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(direct[i])) throw EvaluationError("non-finite Phi in the middle region");
        if (direct[i] < rc.margin) {
            rc.margin = direct[i];
            rc.worst_r = grid[i];
        }
        rc.relative_margin = std::min(rc.relative_margin, rel[i]);
        rc.proof_bound = std::min(rc.proof_bound, proof[i]);
    }
    return rc;
}

RegionCheck check_middle_region(const ChannelPotential& cp, const TestFunctions& tf) {
    return check_middle_region(cp, tf, region_grid(0.0, tf.join()));
}

double large_region_end(const Potential& p, double M) { return M * M + 60.0 / p.decay().rate; }

RegionCheck check_large_region(const ChannelPotential& cp, const TestFunctions& tf,
                               const std::vector<double>& grid) {
    const double Cs = cp.base.decay().amplitude, eps0 = cp.base.decay().rate;
    const double d = tf.delta();
    std::vector<double> direct, rel, proof;
    grid_eval(grid, direct, [&](double r) { return 2.0 * std::exp(-0.5 * eps0 * r) - std::abs(phi(r, cp, tf)); });
    grid_eval(grid, rel, [&](double r) {
        return 1.0 - std::abs(phi(r, cp, tf)) / (2.0 * std::exp(-0.5 * eps0 * r));
    });
    grid_eval(grid, proof, [&](double r) {
        // Envelope over 2 e^{-eps0 r/2}, in logarithms.
        const double lr = std::log(r);
        const double t1 = std::exp(std::log(4.0 * Cs / d) - eps0 * r + 2.0 * lr + std::sqrt(r) * lr +
                                   0.5 * eps0 * r - std::log(2.0));
        const double t2 = 0.5 * std::exp(-d * r + 0.5 * eps0 * r);
        return 1.0 - (Cs > 0 ? t1 : 0.0) - t2;
    });
    RegionCheck rc;
    rc.points = grid.size();
    rc.margin = rc.relative_margin = rc.proof_bound = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(direct[i])) throw EvaluationError("non-finite Phi in the large region");
        if (direct[i] < rc.margin) {
            rc.margin = direct[i];
            rc.worst_r = grid[i];
        }
        rc.relative_margin = std::min(rc.relative_margin, rel[i]);
        rc.proof_bound = std::min(rc.proof_bound, proof[i]);
    }
    return rc;
}

RegionCheck check_large_region(const ChannelPotential& cp, const TestFunctions& tf) {
    return check_large_region(cp, tf, region_grid(tf.join(), large_region_end(cp.base, tf.M())));
}

std::string to_string(CertificateVerdict v) {
    switch (v) {
    case CertificateVerdict::certified: return "certified";
    case CertificateVerdict::failed: return "failed";
    case CertificateVerdict::inapplicable: return "inapplicable";
    }
    return "inapplicable";
}

PhiCertificate certify_no_strong_resonance(const ChannelPotential& cp, int M_lo, int M_hi) {
    PhiCertificate cert;
    const Potential& W = cp.base;
    const auto& tr = W.traits();
    cert.delta = 0.5 * W.decay().rate;
    if (!tr.bounded_at_origin) {
        cert.verdict = CertificateVerdict::inapplicable;
        cert.reason = "potential is unbounded at the origin";
        return cert;
    }
    if (!tr.smooth) {
        cert.verdict = CertificateVerdict::inapplicable;
        cert.reason = "potential is not C1";
        return cert;
    }
    if (!tr.positive || !tr.decreasing)
        throw PreconditionError("certificate needs a positive, decreasing potential");
    if (M_lo < 1 || M_hi < M_lo) throw PreconditionError("bad M search range");

    const auto verdict = classify_zero_energy(cp);
    cert.classification = verdict.kind;
    const auto& sol = verdict.solution;
    const auto& fit = verdict.fit;
    const double eps0 = W.decay().rate;
    cert.u_at_1 = std::abs(sol.value(1.0));
    // sup |u| over [0, R]; the fitted model continues u past the sampled range.
    auto sup_u = [&](double R) {
        double S = 0.0;
        for (std::size_t i = 0; i < sol.size(); ++i)
            if (sol.r[i] <= R) S = std::max(S, std::abs(sol.u[i]) * std::exp(sol.log_scale[i]));
        if (R > sol.r_max()) {
            for (double r : {sol.r_max(), R}) {
                const double v = cp.alpha == 0.0
                                     ? fit.C0 + fit.C1 * r
                                     : fit.C0 * std::pow(r, cp.alpha + 1) / (2 * cp.alpha + 1) +
                                           fit.C1 * std::pow(r, -cp.alpha);
                S = std::max(S, std::abs(v));
            }
        }
        return S;
    };

    // Increasing M until both regions pass and the contradiction gap opens.
    std::ostringstream trace;
    bool regions_passed = false;
    for (int M = M_lo; M <= M_hi; ++M) {
        const TestFunctions tf(M, cert.delta);
        const auto mid_grid = region_grid(0.0, tf.join());
        const auto big_grid = region_grid(tf.join(), large_region_end(W, M));
        MarginTrace t{M, check_middle_region(cp, tf, mid_grid), check_large_region(cp, tf, big_grid)};
        cert.trace.push_back(t);
        trace << "M=" << M << " middle=" << t.middle.margin << " large=" << t.large.margin;
        if (!(t.middle.margin >= 0 && t.large.margin >= 0)) {
            trace << "\n";
            continue;
        }
        cert.M_star = M;
        cert.middle_margin = t.middle.margin;
        cert.large_margin = t.large.margin;
        cert.middle_relative = t.middle.relative_margin;
        cert.large_relative = t.large.relative_margin;
        cert.middle_points = mid_grid.size();
        cert.large_points = big_grid.size();
        cert.R_out = large_region_end(W, M);
        cert.S = sup_u(cert.R_out);
        cert.contradiction_gap = W(1.0) * cert.u_at_1 * cert.u_at_1 -
                                 2.0 * cert.S * cert.S * std::exp(-eps0 * double(M) * M / 2.0) / eps0;
        trace << " gap=" << cert.contradiction_gap << "\n";
        regions_passed = true;
        if (cert.contradiction_gap > 0) break;
    }
    if (!regions_passed)
        throw InconclusiveError("no M in the search range passes both region checks", trace.str());

    if (verdict.kind == ZeroEnergyKind::strong_resonance) {
        cert.verdict = CertificateVerdict::failed;
        cert.reason = "region checks pass but the classifier finds a strong resonance";
    } else if (cert.contradiction_gap > 0) {
        cert.verdict = CertificateVerdict::certified;
    } else {
        cert.verdict = CertificateVerdict::failed;
        cert.reason = "contradiction gap is not positive for any M in the search range";
    }
    return cert;
}

double tune_to_threshold(const std::function<Potential(double)>& family, double x0, double x1,
                         double tol) {
    auto c1 = [&](double x, double* c0) {
        const ChannelPotential cp(family(x));
        const auto sol = integrate_radial(cp, 0.0);
        const auto fit = asymptotic_fit(sol, cp);
        if (c0) *c0 = fit.C0;
        return fit.C1;
    };
    double f0 = c1(x0, nullptr), f1 = c1(x1, nullptr);
    for (int it = 0; it < 60; ++it) {
        if (f1 == f0) break;
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        double C0 = 0.0;
        f1 = c1(x1, &C0);
        if (std::abs(f1) <= tol * std::abs(C0)) return x1;
    }
    if (!std::isfinite(x1)) throw EvaluationError("threshold tuning diverged");
    return x1;
}

} // namespace reslab
