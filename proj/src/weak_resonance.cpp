#include "reslab/weak_resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reslab/radial_ode.hpp"

namespace reslab {

namespace {

double norm_radius(const Potential& p) { return 40.0 / p.decay().rate; }

// int_a^b f over [a, b], split at the potential's breakpoints.
double piece(const Potential& p, const std::function<double(double)>& f, double a, double b) {
    const auto br = p.breakpoints();
    return quad::integrate_piecewise(f, a, b, br, 1, 16);
}

void check_tail(const Potential& p) {
    const double L = 60.0 / p.decay().rate;
    auto f = [&](double s) { return (1.0 + s) * (1.0 + s) * std::abs(p(s)); };
    const auto br = p.breakpoints();
    const double a = quad::integrate_piecewise(f, 0.0, L, br, 64, 16);
    const double b = a + quad::integrate_piecewise(f, L, 2.0 * L, br, 64, 16);
    if (!std::isfinite(a) || !std::isfinite(b) || std::abs(b - a) > 1e-8 * std::max(1.0, std::abs(b)))
        throw DecayAssumptionError("(1+s)^2 W is not integrable under the declared decay");
}

} // namespace

double LinearGrowthFunction::norm() const {
    double n = 0.0;
    const auto& x = grid->nodes();
    for (std::size_t i = 0; i < x.size(); ++i) n = std::max(n, std::abs(values[i]) / x[i]);
    return n;
}

double LinearGrowthFunction::operator()(double s) const {
    if (s <= 0) return 0.0;
    return grid->interpolate(values, std::min(s, grid->upper()));
}

std::shared_ptr<const quad::PanelGrid> norm_grid(const Potential& p, std::size_t nodes_per_panel) {
    const double R = norm_radius(p);
    std::vector<double> edges{0.0, 1e-4};
    while (edges.back() < R) {
        const double e = edges.back();
        double next = std::min(e * 1.5, e + 1.0);
        if (next > R || R - next < 0.25 * (next - e)) next = R;
        edges.push_back(next);
    }
    for (double b : p.breakpoints()) {
        if (!(b > 0 && b < R)) continue;
        auto it = std::upper_bound(edges.begin(), edges.end(), b);
        if (std::abs(*(it - 1) - b) < 1e-12 || std::abs(*it - b) < 1e-12) continue;
        edges.insert(it, b);
    }
    return std::make_shared<const quad::PanelGrid>(std::move(edges), nodes_per_panel);
}

LinearGrowthFunction make_function(std::shared_ptr<const quad::PanelGrid> grid,
                                   const std::function<double(double)>& f) {
    LinearGrowthFunction u{std::move(grid), {}};
    for (double s : u.grid->nodes()) u.values.push_back(f(s));
    return u;
}

DResult compute_D(const Potential& p) {
    check_tail(p);
    auto f = [&](double s) { return s * s * p(s); };
    const auto M = log_grid(1e-3, 200.0 / p.decay().rate, 64 * 6);
    std::vector<double> F(M.size());
    F[0] = piece(p, f, 0.0, M[0]);
    for (std::size_t i = 1; i < M.size(); ++i) F[i] = F[i - 1] + piece(p, f, M[i - 1], M[i]);
    std::size_t best = 0;
    for (std::size_t i = 1; i < M.size(); ++i)
        if (F[i] / M[i] > F[best] / M[best]) best = i;
    DResult res;
    if (F[best] == 0.0) return res;
    if (best == 0 || best + 1 == M.size()) {
        res.D = F[best] / M[best];
        res.argmax_M = M[best];
        return res;
    }
    // Golden-section refinement on the bracketing cells.
    const double base = F[best - 1], m0 = M[best - 1];
    auto D = [&](double m) { return (base + piece(p, f, m0, m)) / m; };
    double a = M[best - 1], b = M[best + 1];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = D(c), fd = D(d);
    for (int it = 0; it < 200 && b - a > 1e-13 * b; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = D(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = D(d);
        }
    }
    res.argmax_M = 0.5 * (a + b);
    res.D = std::max({D(res.argmax_M), fc, fd});
    return res;
}

double operator_bound(const Potential& p) {
    const double L = 120.0 / p.decay().rate;
    return quad::integrate_piecewise([&](double s) { return s * std::abs(p(s)); }, 0.0, L,
                                     p.breakpoints(), 64, 16);
}

LinearGrowthFunction apply_K(const LinearGrowthFunction& u, const Potential& p) {
    const auto& g = *u.grid;
    const auto& x = g.nodes();
    std::vector<double> f1(x.size()), f2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = p(x[i]);
        f2[i] = w * u.values[i];
        f1[i] = x[i] * f2[i];
    }
    const auto A = g.cumulative(std::span<const double>(f1));
    const auto B = g.reverse_cumulative(std::span<const double>(f2));
    const double R = g.upper();
    const double eps0 = p.decay().rate;
    const double uR = g.interpolate(u.values, R);
    const double tail = p(R) * (uR / R) * (R / eps0 + 1.0 / (eps0 * eps0));
    LinearGrowthFunction out{u.grid, std::vector<double>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = A[i] + x[i] * (B[i] + tail);
    return out;
}

ContractionReport picard_construct(const Potential& p, double C1, const PicardOptions& opt) {
    if (C1 == 0.0) throw PreconditionError("Picard construction needs C1 != 0");
    ContractionReport rep;
    const auto d = compute_D(p);
    rep.D = d.D;
    rep.argmax_M = d.argmax_M;
    rep.C1 = C1;
    rep.operator_bound = operator_bound(p);

    const auto grid = norm_grid(p);
    const auto lin = make_function(grid, [C1](double s) { return C1 * s; });
    LinearGrowthFunction u = lin;
    for (std::size_t n = 0; n < opt.n_max; ++n) {
        LinearGrowthFunction next = apply_K(u, p);
        for (std::size_t i = 0; i < next.values.size(); ++i) next.values[i] += lin.values[i];
        LinearGrowthFunction diff{grid, next.values};
        for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= u.values[i];
        const double inc = diff.norm();
        if (!rep.increments.empty())
            rep.ratios.push_back(rep.increments.back() > 0 ? inc / rep.increments.back() : 0.0);
        rep.increments.push_back(inc);
        u = std::move(next);
        rep.iterations = n + 1;
        if (inc <= opt.tol * std::abs(C1)) {
            rep.converged = true;
            break;
        }
        if (!std::isfinite(inc) || inc > 1e30 * std::abs(C1)) break;
    }
    if (!rep.converged) {
        const auto& inc = rep.increments;
        const bool growing = inc.size() >= 2 && inc.back() > inc.front();
        if (growing || !std::isfinite(inc.back()))
            throw NonContractiveError("Picard increments grow; no contraction", rep);
        return rep;
    }

    // Fixed-point residual.
    {
        LinearGrowthFunction r = apply_K(u, p);
        for (std::size_t i = 0; i < r.values.size(); ++i)
            r.values[i] = u.values[i] - lin.values[i] - r.values[i];
        rep.fixed_point_residual = r.norm();
    }
    const auto& x = grid->nodes();
    if (opt.cross_check) {
        // ODE residual from spectral derivatives.
        const auto du = grid->derivative(u.values);
        const auto ddu = grid->derivative(du);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double wu = p(x[i]) * u.values[i];
            num = std::max(num, std::abs(ddu[i] + wu));
            den = std::max(den, std::abs(wu));
        }
        rep.ode_residual = den > 0 ? num / den : num;

        // Slope at the origin and comparison with direct integration.
        std::vector<double> wu(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) wu[i] = p(x[i]) * u.values[i];
        const double R = grid->upper(), eps0 = p.decay().rate;
        const double uR = grid->interpolate(u.values, R);
        rep.slope = C1 + grid->integral(std::span<const double>(wu)) +
                    p(R) * (uR / R) * (R / eps0 + 1.0 / (eps0 * eps0));
        const ChannelPotential cp(p);
        const double r_max = std::max(R, 10.0 * std::max(1.0, 1.0 / eps0) * 1.01);
        const auto sol = integrate_radial(cp, 0.0, r_max, 1e-12);
        double mm = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = x[i];
            const double uo = s < sol.r_min() ? s : sol.value(s).real();
            mm = std::max(mm, std::abs(u.values[i] - rep.slope * uo) / s);
        }
        rep.ode_mismatch = mm;
    }
    rep.limit = std::move(u);
    return rep;
}

} // namespace reslab
