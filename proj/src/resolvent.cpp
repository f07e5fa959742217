#include "reslab/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "reslab/parallel.hpp"
#include "reslab/radial_ode.hpp"

namespace reslab {

namespace {

constexpr cplx I{0.0, 1.0};

double arg_step(cplx from, cplx to) { return std::arg(to / from); }

struct Evaluator {
    const Potential& p;
    const WeightFunction& w;
    const NystromRule& rule;
    cplx operator()(cplx mu) const { return fredholm_det(mu, p, w, rule); }
};

struct EdgeResult {
    double darg = 0.0;
    bool unresolved = false;
    std::vector<cplx> hits; ///< points where |det| underflows the phase
};

void edge_walk(const Evaluator& det, cplx z0, cplx z1, cplx d0, cplx d1, int depth, EdgeResult& out) {
    constexpr double tiny = 1e-12;
    if (std::abs(d0) < tiny || std::abs(d1) < tiny) {
        out.hits.push_back(std::abs(d0) < std::abs(d1) ? z0 : z1);
        return;
    }
    const double step = arg_step(d0, d1);
    if (std::abs(step) < std::numbers::pi / 4) {
        out.darg += step;
        return;
    }
    if (depth == 0) {
        out.unresolved = true;
        out.darg += step;
        return;
    }
    const cplx zm = 0.5 * (z0 + z1);
    const cplx dm = det(zm);
    edge_walk(det, z0, zm, d0, dm, depth - 1, out);
    edge_walk(det, zm, z1, dm, d1, depth - 1, out);
}

EdgeResult edge(const Evaluator& det, cplx z0, cplx z1, cplx d0, cplx d1) {
    EdgeResult r;
    edge_walk(det, z0, z1, d0, d1, 10, r);
    return r;
}

int winding_of(const Evaluator& det, cplx lo, cplx hi, bool& unresolved) {
    const cplx c[4] = {lo, {hi.real(), lo.imag()}, hi, {lo.real(), hi.imag()}};
    cplx d[4];
    for (int k = 0; k < 4; ++k) d[k] = det(c[k]);
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        const auto e = edge(det, c[k], c[(k + 1) % 4], d[k], d[(k + 1) % 4]);
        unresolved = unresolved || e.unresolved || !e.hits.empty();
        total += e.darg;
    }
    return int(std::lround(total / (2.0 * std::numbers::pi)));
}

struct Polish {
    cplx z;
    cplx d;
    std::size_t it = 0;
    bool ok = false;
};

// Secant on det(mu) / prod (mu - z_k) over the zeros already found.
Polish secant(const Evaluator& det, cplx z0, cplx z1, const std::vector<cplx>& found) {
    auto f = [&](cplx z) {
        cplx v = det(z);
        for (cplx q : found) v /= (z - q);
        return v;
    };
    cplx f0 = f(z0), f1 = f(z1);
    Polish res{z1, det(z1), 0, false};
    for (std::size_t it = 1; it <= 30; ++it) {
        if (f1 == f0) break;
        const cplx z2 = z1 - f1 * (z1 - z0) / (f1 - f0);
        if (!std::isfinite(z2.real()) || !std::isfinite(z2.imag())) break;
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f(z1);
        res = {z1, det(z1), it, false};
        if (std::abs(res.d) < 1e-10 || std::abs(z1 - z0) < 1e-14 * std::max(1.0, std::abs(z1))) {
            res.ok = true;
            break;
        }
    }
    return res;
}

} // namespace

WeightFunction::WeightFunction(double delta) : delta_(delta) {
    if (!(delta > 0) || !std::isfinite(delta)) throw PreconditionError("weight needs delta > 0");
}

cplx sin_over_mu(cplx mu, double s) {
    const cplx z = mu * s;
    if (std::abs(z) < 1e-4) {
        const cplx z2 = z * z;
        return s * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
    }
    return std::sin(z) / mu;
}

std::vector<cplx> free_resolvent_apply(cplx mu, std::span<const double> f, const quad::PanelGrid& grid) {
    const auto& x = grid.nodes();
    if (f.size() != x.size()) throw PreconditionError("free_resolvent_apply: size mismatch");
    std::vector<cplx> bf(x.size()), af(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        bf[i] = sin_over_mu(mu, x[i]) * f[i];
        af[i] = std::exp(I * mu * x[i]) * f[i];
    }
    const auto B = grid.cumulative(std::span<const cplx>(bf));
    const auto A = grid.reverse_cumulative(std::span<const cplx>(af));
    std::vector<cplx> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        u[i] = std::exp(I * mu * x[i]) * B[i] + sin_over_mu(mu, x[i]) * A[i];
    return u;
}

double default_cutoff(const Potential& p, const WeightFunction& w) {
    const double sr = p.support_radius();
    if (std::isfinite(sr)) return sr > 0 ? sr : 1.0;
    const double gap = p.decay().rate - 2.0 * w.delta();
    return std::max(60.0, 40.0 / std::min(w.delta(), gap));
}

namespace {

NystromRule build_rule(const Potential& p, std::size_t order, double R_q, double max_width, double gap) {
    if (order < 16 || order % 16 != 0) throw PreconditionError("Nystrom order must be a multiple of 16");
    NystromRule rule;
    rule.R_q = R_q;
    rule.max_width = max_width;
    const double sr = p.support_radius();
    if (std::isfinite(sr) && sr <= rule.R_q)
        rule.envelope = 0.0;
    else
        rule.envelope = p.decay().amplitude * std::max(1.0, rule.R_q) * std::exp(-gap * rule.R_q);
    if (!(rule.envelope <= 1e-12))
        throw TruncationError("kernel envelope " + std::to_string(rule.envelope) + " beyond R_q");
    const auto br = p.breakpoints();
    rule.grid = std::make_shared<const quad::PanelGrid>(
        quad::PanelGrid::graded(0.0, rule.R_q, order / 16, 16, 1.5, br, max_width));
    rule.L = rule.grid->lower_matrix();
    rule.U = rule.grid->upper_matrix();
    return rule;
}

} // namespace

NystromRule make_nystrom_rule(const Potential& p, const WeightFunction& w, std::size_t order, double R_q,
                              double max_width) {
    if (!(w.delta() < 0.5 * p.decay().rate))
        throw PreconditionError("weight needs delta < eps0 / 2");
    return build_rule(p, order, R_q > 0 ? R_q : default_cutoff(p, w), max_width,
                      p.decay().rate - 2.0 * w.delta());
}

namespace {

// e^{i mu x} = ah * e^{ea}, sin(mu x)/mu = bh * e^{eb}, with |ah|, |bh| <= 1 up to 1/|mu|.
struct Factors {
    std::vector<cplx> ah, bh;
    std::vector<double> ea, eb;
};

Factors factors(cplx mu, const std::vector<double>& x) {
    const double y = mu.imag(), s = std::abs(y);
    Factors f;
    f.ah.resize(x.size());
    f.bh.resize(x.size());
    f.ea.resize(x.size());
    f.eb.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        f.ah[i] = std::exp(I * mu.real() * x[i]);
        f.ea[i] = -y * x[i];
        f.eb[i] = s * x[i];
        if (std::abs(mu * x[i]) < 1e-4 || s * x[i] < 1.0) {
            f.bh[i] = sin_over_mu(mu, x[i]) * std::exp(-s * x[i]);
        } else {
            const cplx p = std::exp(I * mu * x[i] - s * x[i]), m = std::exp(-I * mu * x[i] - s * x[i]);
            f.bh[i] = (p - m) / (2.0 * I * mu);
        }
    }
    return f;
}

} // namespace

double conjugation_rate(cplx mu, const WeightFunction& w) { return std::max(0.0, mu.imag() - w.delta()); }

Eigen::MatrixXcd assemble_A(cplx mu, const Potential& p, const WeightFunction& w, const NystromRule& rule) {
    const auto& x = rule.grid->nodes();
    const std::size_t n = x.size();
    const double d = w.delta(), k = conjugation_rate(mu, w);
    const auto f = factors(mu, x);
    std::vector<double> W(n);
    for (std::size_t i = 0; i < n; ++i) W[i] = p(x[i]);
    Eigen::MatrixXcd A(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* Li = rule.L.data() + i * n;
        const double* Ui = rule.U.data() + i * n;
        const double row1 = f.ea[i] - (d + k) * x[i], row2 = f.eb[i] - (d + k) * x[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (W[j] == 0.0) {
                A(i, j) = 0.0;
                continue;
            }
            const double col1 = f.eb[j] + (d + k) * x[j], col2 = f.ea[j] + (d + k) * x[j];
            cplx v = 0.0;
            if (Li[j] != 0.0) v += f.ah[i] * Li[j] * f.bh[j] * std::exp(row1 + col1);
            if (Ui[j] != 0.0) v += f.bh[i] * Ui[j] * f.ah[j] * std::exp(row2 + col2);
            A(i, j) = v * W[j];
        }
    }
    return A;
}

cplx fredholm_det(cplx mu, const Potential& p, const WeightFunction& w, const NystromRule& rule) {
    // A = R + V with R(x, y) = phi(x) b(x) a(y) W(y) / phi(y) of rank one and V of Volterra type,
    // so det(I - A) = det(I - V) (1 - <r, (I - V)^{-1} c>) with det(I - V) = 1.
    const auto& x = rule.grid->nodes();
    const auto& q = rule.grid->weights();
    const std::size_t n = x.size();
    const double d = w.delta(), k = conjugation_rate(mu, w);
    const auto f = factors(mu, x);
    Eigen::MatrixXcd M = -assemble_A(mu, p, w, rule);
    M.diagonal().array() += 1.0;
    Eigen::VectorXcd c(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        c(i) = f.bh[i] * std::exp(f.eb[i] - (d + k) * x[i]);
        const double W = p(x[i]);
        r(i) = W == 0.0 ? cplx(0.0) : f.ah[i] * W * q[i] * std::exp(f.ea[i] + (d + k) * x[i]);
    }
    M += c * r.transpose();
    const Eigen::VectorXcd y = M.partialPivLu().solve(c);
    return 1.0 - (r.transpose() * y)(0);
}

double sigma_min(cplx mu, const Potential& p, const WeightFunction& w, const NystromRule& rule) {
    Eigen::MatrixXcd M = -assemble_A(mu, p, w, rule);
    M.diagonal().array() += 1.0;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M);
    return svd.singularValues().minCoeff();
}

ResonanceScan determinant_scan(const Potential& p, const WeightFunction& w, const ScanRect& rect,
                               std::size_t order) {
    return determinant_scan(p, w, rect, make_nystrom_rule(p, w, order));
}

ResonanceScan determinant_scan(const Potential& p, const WeightFunction& w, const ScanRect& rect,
                               const NystromRule& rule) {
    if (!(rect.im_lo >= -w.delta()) || !(rect.im_hi > rect.im_lo) || !(rect.re_max > 0) ||
        rect.n_re < 2 || rect.n_im < 2)
        throw PreconditionError("scan rectangle must lie in Im mu > -delta");
    const Evaluator det{p, w, rule};

    ResonanceScan scan;
    scan.rect = rect;
    scan.quadrature_order = rule.order();
    scan.R_q = rule.R_q;
    scan.delta = w.delta();
    const std::size_t nr = rect.n_re, ni = rect.n_im;
    for (std::size_t i = 0; i < nr; ++i)
        scan.re.push_back(-rect.re_max + 2.0 * rect.re_max * double(i) / double(nr - 1));
    for (std::size_t j = 0; j < ni; ++j)
        scan.im.push_back(rect.im_lo + (rect.im_hi - rect.im_lo) * double(j + 1) / double(ni));
    auto node = [&](std::size_t i, std::size_t j) { return cplx(scan.re[i], scan.im[j]); };

    scan.det.resize(nr * ni);
    parallel_for(nr * ni, [&](std::size_t k) { scan.det[k] = det(node(k % nr, k / nr)); });
    for (cplx d : scan.det) scan.max_abs_det_minus_one = std::max(scan.max_abs_det_minus_one, std::abs(d - 1.0));

    // Edge phase increments: horizontal H(i,j) from (i,j) to (i+1,j), vertical V(i,j) to (i,j+1).
    const std::size_t nh = (nr - 1) * ni, nv = nr * (ni - 1);
    std::vector<EdgeResult> H(nh), V(nv);
    parallel_for(nh + nv, [&](std::size_t k) {
        if (k < nh) {
            const std::size_t i = k % (nr - 1), j = k / (nr - 1);
            H[k] = edge(det, node(i, j), node(i + 1, j), scan.det[j * nr + i], scan.det[j * nr + i + 1]);
        } else {
            const std::size_t m = k - nh, i = m % nr, j = m / nr;
            V[m] = edge(det, node(i, j), node(i, j + 1), scan.det[j * nr + i], scan.det[(j + 1) * nr + i]);
        }
    });
    for (const auto& e : H)
        if (e.unresolved) throw ResolutionError("determinant phase unresolved along a scan edge");
    for (const auto& e : V)
        if (e.unresolved) throw ResolutionError("determinant phase unresolved along a scan edge");

    double boundary = 0.0;
    for (std::size_t i = 0; i + 1 < nr; ++i) boundary += H[i].darg - H[(ni - 1) * (nr - 1) + i].darg;
    for (std::size_t j = 0; j + 1 < ni; ++j) boundary += V[j * nr + nr - 1].darg - V[j * nr].darg;
    scan.boundary_winding = int(std::lround(boundary / (2.0 * std::numbers::pi)));

    struct Cell {
        std::size_t i, j;
        int w;
        std::vector<cplx> hits;
    };
    std::vector<Cell> cells;
    for (std::size_t j = 0; j + 1 < ni; ++j)
        for (std::size_t i = 0; i + 1 < nr; ++i) {
            const auto& h0 = H[j * (nr - 1) + i];
            const auto& h1 = H[(j + 1) * (nr - 1) + i];
            const auto& v0 = V[j * nr + i];
            const auto& v1 = V[j * nr + i + 1];
            const double t = h0.darg + v1.darg - h1.darg - v0.darg;
            Cell c{i, j, int(std::lround(t / (2.0 * std::numbers::pi))), {}};
            for (const auto* e : {&h0, &h1, &v0, &v1})
                c.hits.insert(c.hits.end(), e->hits.begin(), e->hits.end());
            if (c.w != 0 || !c.hits.empty()) cells.push_back(std::move(c));
        }

    // Refinement check on 2x2 subcells, then polish.
    std::vector<std::vector<ResonanceZero>> per(cells.size());
    parallel_for(cells.size(), [&](std::size_t k) {
        const auto& c = cells[k];
        const cplx lo = node(c.i, c.j), hi = node(c.i + 1, c.j + 1);
        const cplx mid = 0.5 * (lo + hi);
        if (c.hits.empty()) {
            bool unresolved = false;
            const int sub = winding_of(det, lo, mid, unresolved) +
                            winding_of(det, {mid.real(), lo.imag()}, {hi.real(), mid.imag()}, unresolved) +
                            winding_of(det, {lo.real(), mid.imag()}, {mid.real(), hi.imag()}, unresolved) +
                            winding_of(det, mid, hi, unresolved);
            if (!unresolved && sub != c.w)
                throw ResolutionError("winding number changes under cell refinement");
        }
        const cplx h = hi - lo;
        const int want = std::max(c.w, c.hits.empty() ? 0 : 1);
        std::vector<cplx> found;
        for (int n = 0; n < want; ++n) {
            const cplx start = c.hits.empty() ? mid + 0.1 * double(n) * h : c.hits.front();
            const auto pz = secant(det, start, start + 0.05 * h, found);
            const bool inside = std::abs(pz.z.real() - mid.real()) <= 0.75 * std::abs(h.real()) &&
                                std::abs(pz.z.imag() - mid.imag()) <= 0.75 * std::abs(h.imag());
            if (!pz.ok || !inside) continue;
            found.push_back(pz.z);
            ResonanceZero z;
            z.mu = pz.z;
            z.det = pz.d;
            z.iterations = pz.it;
            z.winding = c.w;
            per[k].push_back(z);
        }
    });

    auto fine = build_rule(p, 2 * rule.order(), rule.R_q, 0.5 * rule.max_width, INFINITY);
    fine.envelope = rule.envelope;
    for (auto& v : per)
        for (auto& z : v) {
            const bool dup = std::any_of(scan.zeros.begin(), scan.zeros.end(), [&](const ResonanceZero& q) {
                return std::abs(q.mu - z.mu) < 1e-8 * std::max(1.0, std::abs(z.mu));
            });
            if (dup) continue;
            z.sigma_min = sigma_min(z.mu, p, w, rule);
            z.det_refined = fredholm_det(z.mu, p, w, fine);
            z.validated = z.sigma_min < 1e-6;
            scan.zeros.push_back(z);
        }
    std::sort(scan.zeros.begin(), scan.zeros.end(), [](const ResonanceZero& a, const ResonanceZero& b) {
        return a.mu.imag() != b.mu.imag() ? a.mu.imag() > b.mu.imag() : a.mu.real() < b.mu.real();
    });
    return scan;
}

PoleCrosscheck bound_state_poles_crosscheck(const Potential& p, const WeightFunction& w, std::size_t order,
                                            double tol) {
    if (!(w.delta() < 0.5 * p.decay().rate))
        throw PreconditionError("weight needs delta < eps0 / 2");
    PoleCrosscheck rep;
    const auto states = bound_states(ChannelPotential(p));
    for (const auto& s : states) rep.eigenvalues.push_back(s.energy);
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end());

    double kmax = 0.5;
    for (double e : rep.eigenvalues) {
        kmax = std::max(kmax, std::sqrt(-e) + 0.25);
        if (w.delta() >= std::sqrt(-e)) rep.delta_flag = true;
    }
    if (rep.delta_flag) rep.note = "delta >= sqrt|E| for a bound state; phi P_ac phi^{-1} is not controlled";

    ScanRect rect;
    rect.re_max = 0.2;
    rect.n_re = 6;
    rect.im_lo = -0.5 * w.delta();
    rect.im_hi = kmax;
    rect.n_im = std::size_t(std::ceil((rect.im_hi - rect.im_lo) / 0.04)) + 1;
    // Cutoff for |Im mu| <= delta / 2, panels short against e^{kmax x}.
    const double gap = p.decay().rate - w.delta();
    double R = 20.0;
    const double sr = p.support_radius();
    if (std::isfinite(sr)) {
        R = sr > 0 ? sr : 1.0;
    } else {
        while (p.decay().amplitude * R * std::exp(-gap * R) > 1e-12) R += 1.0;
    }
    const auto rule = build_rule(p, order, R, 6.0 / kmax, gap);
    const auto scan = determinant_scan(p, w, rect, rule);
    for (const auto& z : scan.zeros)
        if (z.mu.imag() > 1e-8) rep.zeros.push_back(z.mu);

    if (rep.zeros.size() != rep.eigenvalues.size())
        throw ConsistencyError(std::to_string(rep.eigenvalues.size()) + " eigenvalues but " +
                               std::to_string(rep.zeros.size()) + " determinant zeros in Im mu > 0");
    // Zeros are sorted by decreasing Im mu, eigenvalues by increasing E.
    for (std::size_t k = 0; k < rep.zeros.size(); ++k) {
        const cplx mu = rep.zeros[k];
        PoleMatch m{rep.eigenvalues[k], mu, std::abs(mu * mu - rep.eigenvalues[k])};
        rep.max_error = std::max(rep.max_error, m.energy_error);
        rep.matches.push_back(m);
        if (m.energy_error > tol)
            throw ConsistencyError("determinant zero does not match eigenvalue " +
                                   std::to_string(m.energy) + " (error " + std::to_string(m.energy_error) + ")");
    }
    return rep;
}

} // namespace reslab
