#include "reslab/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include "reslab/certificate.hpp"
#include "reslab/errors.hpp"
#include "reslab/ground_state.hpp"
#include "reslab/radial_ode.hpp"
#include "reslab/resolvent.hpp"
#include "reslab/wave_decay.hpp"
#include "reslab/weak_resonance.hpp"

namespace reslab::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kOriginTol = 1e-2; ///< a scan zero this close to 0 is the threshold itself

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

class Csv {
public:
    explicit Csv(const std::string& header) { os_ << header << '\n'; }
    template <class... T>
    void row(T... v) {
        bool first = true;
        ((os_ << (first ? "" : ",") << num(double(v)), first = false), ...);
        os_ << '\n';
    }
    void save(const fs::path& p) const { write_text(p, os_.str()); }

private:
    std::ostringstream os_;
};

template <class T>
T get_or(const json& cfg, const char* key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

const json& require(const json& cfg, const char* key) {
    if (!cfg.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
    return cfg.at(key);
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

struct Outcome {
    int code = ExitCode::ok;
    json verdicts = json::object();
    json conflicts = json::array();
};

struct Context {
    std::string command;
    json config;
    fs::path out;
    fs::path base;
    std::ostream& log;

    json header() const {
        return json{{"command", command},
                    {"toolkit", {{"name", toolkit_name}, {"version", toolkit_version}}},
                    {"config_hash", config_hash(config)}};
    }
    ChannelPotential potential() const { return parse_potential(require(config, "potential"), base); }
};

// ---------------------------------------------------------------- classify

Outcome run_classify(const Context& cx) {
    check_keys(cx.config, {"potential", "tol", "r_max", "seed"}, "classify config");
    const auto cp = cx.potential();
    RadialOptions opt;
    opt.r_max = get_or(cx.config, "r_max", 0.0);
    const auto v = classify_zero_energy(cp, get_or(cx.config, "tol", 1e-6), opt);

    json rep = cx.header();
    rep["potential"] = cp.base.description();
    rep["alpha"] = cp.alpha;
    rep["kind"] = to_string(v.kind);
    rep["C0"] = v.fit.C0;
    rep["C1"] = v.fit.C1;
    rep["tol"] = v.tol;
    rep["fit"] = {{"r_lo", v.fit.r_lo},
                  {"r_hi", v.fit.r_hi},
                  {"residual", v.fit.residual},
                  {"remainder_h", v.fit.remainder_h},
                  {"remainder_g", v.fit.remainder_g}};
    write_json(cx.out / "verdict.json", rep);

    const auto& s = v.solution;
    Csv csv("r,u,du");
    double max_scale = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double sc = s.log_scale.empty() ? 0.0 : s.log_scale[i];
        max_scale = std::max(max_scale, sc);
        csv.row(s.r[i], (s.u[i] * std::exp(sc)).real(), (s.du[i] * std::exp(sc)).real());
    }
    csv.save(cx.out / "solution.csv");
    json side = cx.header();
    side["mu"] = cplx_json(s.mu);
    side["alpha"] = s.alpha;
    side["tol"] = s.tol;
    side["points"] = s.size();
    side["r_min"] = s.r_min();
    side["r_max"] = s.r_max();
    side["scale_factors"] = {{"rescaled", s.scaled()}, {"max_log_scale", max_scale}};
    write_json(cx.out / "solution.json", side);

    cx.log << "classification: " << to_string(v.kind) << " (C0 = " << v.fit.C0 << ", C1 = " << v.fit.C1 << ")\n";
    Outcome o;
    o.verdicts["classification"] = to_string(v.kind);
    if (v.kind == ZeroEnergyKind::inconclusive) o.code = ExitCode::inconclusive;
    return o;
}

// ---------------------------------------------------------------- certify

Outcome run_certify(const Context& cx) {
    check_keys(cx.config, {"potential", "M_lo", "M_hi", "scan", "seed"}, "certify config");
    const auto cp = cx.potential();
    const auto cert = certify_no_strong_resonance(cp, get_or(cx.config, "M_lo", 4), get_or(cx.config, "M_hi", 40));

    json rep = cx.header();
    rep["potential"] = cp.base.description();
    rep["alpha"] = cp.alpha;
    rep["verdict"] = to_string(cert.verdict);
    rep["reason"] = cert.reason;
    rep["classification"] = to_string(cert.classification);
    rep["M_star"] = cert.M_star;
    rep["delta"] = cert.delta;
    rep["margins"] = {{"middle", cert.middle_margin},
                      {"large", cert.large_margin},
                      {"middle_relative", cert.middle_relative},
                      {"large_relative", cert.large_relative}};
    rep["contradiction_gap"] = cert.contradiction_gap;
    rep["S"] = cert.S;
    rep["u_at_1"] = cert.u_at_1;
    rep["grids_metadata"] = {{"R_out", cert.R_out},
                             {"middle_points", cert.middle_points},
                             {"large_points", cert.large_points}};
    json trace = json::array();
    for (const auto& t : cert.trace)
        trace.push_back({{"M", t.M},
                         {"middle_margin", t.middle.margin},
                         {"middle_relative", t.middle.relative_margin},
                         {"large_margin", t.large.margin},
                         {"large_relative", t.large.relative_margin}});
    rep["trace"] = trace;

    Outcome o;
    o.verdicts["certificate"] = to_string(cert.verdict);
    o.verdicts["classification"] = to_string(cert.classification);
    const bool certified = cert.verdict == CertificateVerdict::certified;
    if (certified && cert.classification == ZeroEnergyKind::strong_resonance)
        o.conflicts.push_back("certified but the classifier reports a strong resonance");

    if (cert.M_star > 0) {
        const TestFunctions tf(cert.M_star, cert.delta);
        const double join = tf.join(), eps0 = cp.base.decay().rate;
        Csv csv("r,phi,two_g_w,envelope");
        for (double r : region_grid(1e-3, join, 16, 400))
            csv.row(r, phi(r, cp, tf), 2.0 * tf.g(r) * cp.base(r), 0.5 * tf.g2(r));
        for (double r : region_grid(join, cert.R_out, 16, 400))
            csv.row(r, phi(r, cp, tf), 2.0 * tf.g(r) * cp.base(r), 2.0 * std::exp(-0.5 * eps0 * r));
        csv.save(cx.out / "phi.csv");
    }

    if (cx.config.contains("scan")) {
        const auto& sc = cx.config.at("scan");
        check_keys(sc, {"delta", "order", "n_re", "n_im"}, "certify.scan");
        if (cp.alpha != 0.0) throw ConfigError("the determinant scan is limited to alpha = 0");
        const double eps0 = cp.base.decay().rate;
        const WeightFunction w(get_or(sc, "delta", 0.3 * eps0));
        ScanRect rect;
        rect.re_max = w.delta();
        rect.im_lo = -0.9 * w.delta();
        rect.im_hi = w.delta();
        rect.n_re = get_or<std::size_t>(sc, "n_re", 16);
        rect.n_im = get_or<std::size_t>(sc, "n_im", 16);
        const auto scan = determinant_scan(cp.base, w, rect, get_or<std::size_t>(sc, "order", 128));
        json zs = json::array();
        std::size_t at_origin = 0;
        double free_radius = w.delta();
        for (const auto& z : scan.zeros) {
            zs.push_back(cplx_json(z.mu));
            free_radius = std::min(free_radius, std::abs(z.mu));
            if (std::abs(z.mu) <= kOriginTol) ++at_origin;
        }
        // Zeros away from the origin (virtual states) only shrink the zero-free disc.
        rep["scan"] = {{"delta", w.delta()}, {"zeros", zs}, {"zero_free_radius", free_radius}};
        o.verdicts["scan_zeros_at_origin"] = at_origin;
        o.verdicts["scan_zero_free_radius"] = free_radius;
        if (certified && at_origin > 0) o.conflicts.push_back("certified but the scan finds a zero at mu = 0");
    }
    write_json(cx.out / "certificate.json", rep);
    cx.log << "certificate: " << to_string(cert.verdict) << " (M* = " << cert.M_star
           << ", gap = " << cert.contradiction_gap << ")\n";
    if (!o.conflicts.empty()) o.code = ExitCode::inconsistent;
    return o;
}

// ---------------------------------------------------------------- weakres

json contraction_json(const ContractionReport& r) {
    return json{{"D", r.D},
                {"argmax_M", r.argmax_M},
                {"C1", r.C1},
                {"operator_bound", r.operator_bound},
                {"converged", r.converged},
                {"iterations", r.iterations},
                {"increments", r.increments},
                {"ratios", r.ratios},
                {"residuals",
                 {{"fixed_point", r.fixed_point_residual}, {"ode", r.ode_residual}, {"ode_mismatch", r.ode_mismatch}}},
                {"slope", r.slope}};
}

Outcome run_weakres(const Context& cx) {
    check_keys(cx.config, {"potential", "C1", "tol", "n_max", "seed"}, "weakres config");
    const auto cp = cx.potential();
    if (cp.alpha != 0.0) throw ConfigError("weakres works in the s-wave channel only");
    PicardOptions opt;
    opt.tol = get_or(cx.config, "tol", opt.tol);
    opt.n_max = get_or(cx.config, "n_max", opt.n_max);
    json rep = cx.header();
    rep["potential"] = cp.base.description();
    Outcome o;
    std::optional<ContractionReport> res;
    try {
        res = picard_construct(cp.base, get_or(cx.config, "C1", 1.0), opt);
        rep.update(contraction_json(*res));
        rep["outcome"] = res->converged ? "contractive" : "not_converged";
    } catch (const NonContractiveError& e) {
        rep.update(contraction_json(e.report()));
        rep["outcome"] = "non_contractive";
        rep["message"] = e.what();
    }
    o.verdicts["weakres"] = rep["outcome"];
    write_json(cx.out / "weakres.json", rep);
    if (res && res->limit) {
        Csv csv("s,u");
        const auto& l = *res->limit;
        for (std::size_t i = 0; i < l.values.size(); ++i) csv.row(l.grid->nodes()[i], l.values[i]);
        csv.save(cx.out / "limit.csv");
    }
    cx.log << "weakres: " << rep["outcome"].get<std::string>() << " (D = " << rep["D"].get<double>() << ")\n";
    if (rep["outcome"] == "not_converged") o.code = ExitCode::inconclusive;
    return o;
}

// ---------------------------------------------------------------- groundstate

Outcome run_groundstate(const Context& cx) {
    check_keys(cx.config, {"p", "omega", "tol", "mass_omegas", "seed"}, "groundstate config");
    const double p = get_or(cx.config, "p", 3.0), omega = get_or(cx.config, "omega", 1.0);
    GroundStateOptions opt;
    opt.tol = get_or(cx.config, "tol", opt.tol);
    const auto gs1 = solve_ground_state(p, opt);
    const auto gs = omega == 1.0 ? gs1 : rescale(gs1, omega);
    const auto omegas = get_or(cx.config, "mass_omegas", std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0});

    Csv csv("r,chi,dchi");
    for (std::size_t i = 0; i < gs.r.size(); ++i) csv.row(gs.r[i], gs.chi[i], gs.dchi[i]);
    csv.save(cx.out / "profile.csv");

    json reg = cx.header();
    reg["states"][ground_state_key(p, gs.omega)] = {
        {"p", p}, {"omega", gs.omega}, {"chi0", gs.chi0}, {"tail_C0", gs.tail_C0}, {"l2_norm", gs.l2_norm}};
    write_json(cx.out / "registry.json", reg);

    const auto mc = mass_curve(gs1, omegas);
    const auto tail = tail_asymptotics(gs);
    const auto ks = kernel_split_residual(gs1);
    const auto id = check_identities(gs);
    json rep = cx.header();
    rep["p"] = p;
    rep["omega"] = gs.omega;
    rep["converged"] = gs.converged;
    rep["chi0"] = gs.chi0;
    rep["l2_norm"] = gs.l2_norm;
    rep["mass_curve"] = {{"omegas", mc.omegas}, {"norms", mc.norms}, {"slope", mc.slope}, {"expected", mc.expected}};
    rep["tail"] = {{"C0", tail.C0},
                   {"slope", tail.slope},
                   {"slope_error", tail.slope_error},
                   {"correction_order", tail.correction_order},
                   {"window", {tail.window_lo, tail.window_hi}}};
    rep["kernel_split"] = {{"c", ks.c}, {"residual", ks.residual}, {"k1_slope", ks.k1_slope}, {"k2_slope", ks.k2_slope}};
    rep["identities"] = {{"virial_residual", id.virial_residual},
                         {"nehari_residual", id.nehari_residual},
                         {"strauss_margin", id.strauss_margin},
                         {"log_derivative_min", id.log_derivative_min},
                         {"log_derivative_max", id.log_derivative_max}};
    if (p < 7.0 / 3.0) rep["omega_star"] = find_omega_star(gs1);
    write_json(cx.out / "groundstate.json", rep);
    cx.log << "groundstate: p = " << p << ", chi(0) = " << gs.chi0 << ", mass slope = " << mc.slope << "\n";
    Outcome o;
    o.verdicts["groundstate"] = gs.converged ? "converged" : "not_converged";
    if (!gs.converged) o.code = ExitCode::inconclusive;
    return o;
}

// ---------------------------------------------------------------- scan

Outcome run_scan(const Context& cx) {
    check_keys(cx.config, {"potential", "delta", "rect", "order", "crosscheck", "seed", "convergence_samples"},
               "scan config");
    const auto cp = cx.potential();
    if (cp.alpha != 0.0) throw ConfigError("the determinant scan is limited to alpha = 0");
    const auto& p = cp.base;
    const WeightFunction w(get_or(cx.config, "delta", 0.3 * p.decay().rate));
    ScanRect rect;
    rect.im_lo = -w.delta();
    rect.im_hi = w.delta();
    if (cx.config.contains("rect")) {
        const auto& r = cx.config.at("rect");
        check_keys(r, {"re_max", "im_lo", "im_hi", "n_re", "n_im"}, "scan.rect");
        rect.re_max = get_or(r, "re_max", rect.re_max);
        rect.im_lo = get_or(r, "im_lo", rect.im_lo);
        rect.im_hi = get_or(r, "im_hi", rect.im_hi);
        rect.n_re = get_or(r, "n_re", rect.n_re);
        rect.n_im = get_or(r, "n_im", rect.n_im);
    }
    const std::size_t order = get_or<std::size_t>(cx.config, "order", 128);
    const auto scan = determinant_scan(p, w, rect, order);

    Csv csv("re_mu,im_mu,re_det,im_det,abs_det");
    for (std::size_t j = 0; j < scan.im.size(); ++j)
        for (std::size_t i = 0; i < scan.re.size(); ++i) {
            const cplx d = scan.det[j * scan.re.size() + i];
            csv.row(scan.re[i], scan.im[j], d.real(), d.imag(), std::abs(d));
        }
    csv.save(cx.out / "scan.csv");

    json rep = cx.header();
    rep["potential"] = p.description();
    rep["grid"] = {{"re_max", rect.re_max}, {"im_lo", rect.im_lo},   {"im_hi", rect.im_hi},
                   {"n_re", rect.n_re},     {"n_im", rect.n_im},     {"quadrature_order", scan.quadrature_order},
                   {"R_q", scan.R_q},       {"delta", scan.delta}};
    rep["boundary_winding"] = scan.boundary_winding;
    rep["max_abs_det_minus_one"] = scan.max_abs_det_minus_one;
    json zs = json::array();
    bool all_valid = true;
    for (const auto& z : scan.zeros) {
        zs.push_back({{"mu", cplx_json(z.mu)},
                      {"abs_det", std::abs(z.det)},
                      {"sigma_min", z.sigma_min},
                      {"abs_det_refined", std::abs(z.det_refined)},
                      {"winding", z.winding},
                      {"iterations", z.iterations},
                      {"validated", z.validated}});
        all_valid = all_valid && z.validated;
    }
    rep["zeros"] = zs;

    // Self-convergence at seeded random points of the rectangle.
    const auto samples = get_or<std::size_t>(cx.config, "convergence_samples", 10);
    std::mt19937_64 rng(get_or<std::uint64_t>(cx.config, "seed", 0));
    std::uniform_real_distribution<double> ure(-rect.re_max, rect.re_max), uim(rect.im_lo, rect.im_hi);
    const auto r1 = make_nystrom_rule(p, w, order, scan.R_q), r2 = make_nystrom_rule(p, w, 2 * order, scan.R_q);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double re = ure(rng);
        const double im = uim(rng);
        const cplx mu{re, im};
        worst = std::max(worst, std::abs(fredholm_det(mu, p, w, r1) - fredholm_det(mu, p, w, r2)));
    }
    rep["convergence"] = {{"samples", samples}, {"max_det_change_on_doubling", worst}};

    Outcome o;
    o.verdicts["scan_zeros"] = scan.zeros.size();
    if (!all_valid) o.conflicts.push_back("a located zero failed the singular-value check");
    if (get_or(cx.config, "crosscheck", false)) {
        try {
            const auto pc = bound_state_poles_crosscheck(p, w, order);
            json m = json::array();
            for (const auto& x : pc.matches)
                m.push_back({{"energy", x.energy}, {"mu", cplx_json(x.mu)}, {"energy_error", x.energy_error}});
            rep["crosscheck"] = {{"eigenvalues", pc.eigenvalues},
                                 {"matches", m},
                                 {"max_error", pc.max_error},
                                 {"delta_flag", pc.delta_flag},
                                 {"note", pc.note}};
            o.verdicts["pole_crosscheck"] = "consistent";
        } catch (const ConsistencyError& e) {
            rep["crosscheck"] = {{"error", e.what()}};
            o.verdicts["pole_crosscheck"] = "inconsistent";
            o.conflicts.push_back(e.what());
        }
    }
    write_json(cx.out / "zeros.json", rep);
    cx.log << "scan: " << scan.zeros.size() << " zero(s), max |det - 1| = " << scan.max_abs_det_minus_one << "\n";
    if (!o.conflicts.empty()) o.code = ExitCode::inconsistent;
    return o;
}

// ---------------------------------------------------------------- wave

Outcome run_wave(const Context& cx) {
    check_keys(cx.config,
               {"potential", "mesh", "T", "delta", "r_obs", "window", "data", "project", "snapshot_dt",
                "snapshot_every", "seed"},
               "wave config");
    const auto cp = cx.potential();
    const double T = get_or(cx.config, "T", 60.0);
    const double r_obs = get_or(cx.config, "r_obs", 10.0);
    const double delta = get_or(cx.config, "delta", default_wave_delta(cp.base));
    const auto window = get_or(cx.config, "window", std::vector<double>{15.0, 40.0});
    if (window.size() != 2) throw ConfigError("window must be [t0, t1]");
    WaveMesh mesh;
    mesh.R_dom = r_obs + T + 10.0;
    if (cx.config.contains("mesh")) {
        const auto& m = cx.config.at("mesh");
        check_keys(m, {"R_dom", "h", "cfl", "boundary", "sponge_strength"}, "wave.mesh");
        mesh.R_dom = get_or(m, "R_dom", mesh.R_dom);
        mesh.h = get_or(m, "h", mesh.h);
        mesh.cfl = get_or(m, "cfl", mesh.cfl);
        mesh.sponge_strength = get_or(m, "sponge_strength", mesh.sponge_strength);
        const auto b = get_or<std::string>(m, "boundary", "reflecting");
        if (b == "reflecting") mesh.boundary = WaveBoundary::reflecting;
        else if (b == "sponge") mesh.boundary = WaveBoundary::sponge;
        else throw ConfigError("boundary must be reflecting or sponge");
    }
    double c = 3.0, width = 2.0, amp = 1.0;
    if (cx.config.contains("data")) {
        const auto& d = cx.config.at("data");
        check_keys(d, {"center", "width", "amplitude"}, "wave.data");
        c = get_or(d, "center", c);
        width = get_or(d, "width", width);
        amp = get_or(d, "amplitude", amp);
    }
    const bool project = get_or(cx.config, "project", false);
    const double snap_dt = get_or(cx.config, "snapshot_dt", 0.25);
    const auto every = get_or<std::size_t>(cx.config, "snapshot_every", 40);
    const auto bump = make_bump(c, width, amp);
    const auto zero = [](double) { return 0.0; };
    const WeightFunction w(delta);

    const auto states = discrete_bound_states(cp, mesh);
    json rep = cx.header();
    rep["run"] = {{"potential", cp.base.description()},
                  {"alpha", cp.alpha},
                  {"mesh", {{"R_dom", mesh.R_dom}, {"h", mesh.h}, {"sponge_strength", mesh.sponge_strength}}},
                  {"T", T},
                  {"cfl", mesh.cfl},
                  {"boundary", to_string(mesh.boundary)},
                  {"delta", delta}};
    json bs = json::array();
    for (const auto& s : states) bs.push_back({{"energy", s.energy}, {"continuum_energy", s.continuum_energy}});
    rep["bound_states"] = bs;
    rep["projected"] = project;

    Outcome o;
    json cases = json::object();
    for (const char* which : {"displacement", "velocity"}) {
        const bool disp = std::string(which) == "displacement";
        const auto run = evolve(cp, disp ? bump : zero, disp ? zero : bump, T, mesh, snap_dt, project);
        const auto ds = measure_decay(run, w, r_obs, window[0], window[1]);
        double e0 = run.energy.front(), drift = 0.0;
        for (double e : run.energy) drift = std::max(drift, std::abs(e - e0) / std::max(std::abs(e0), 1e-300));
        cases[which] = {{"rate", ds.rate},
                        {"residual", ds.residual},
                        {"rate_ut", ds.rate_ut},
                        {"residual_ut", ds.residual_ut},
                        {"window", {ds.t0, ds.t1}},
                        {"energy_drift", drift},
                        {"notice", ds.notice}};
        Csv csv("t,norm_u,norm_ut");
        for (std::size_t k = 0; k < ds.times.size(); ++k) csv.row(ds.times[k], ds.norm_u[k], ds.norm_ut[k]);
        csv.save(cx.out / (disp ? "decay.csv" : "decay_velocity.csv"));
        if (disp) {
            fs::create_directories(cx.out / "snapshots");
            for (std::size_t k = 0; k < run.snapshots.size(); k += std::max<std::size_t>(every, 1)) {
                const auto& s = run.snapshots[k];
                Csv sc("r,u,ut");
                for (std::size_t j = 0; j < s.r.size(); ++j) sc.row(s.r[j], s.u[j], s.ut[j]);
                char name[40];
                std::snprintf(name, sizeof name, "snapshot_%04zu.csv", k);
                sc.save(cx.out / "snapshots" / name);
            }
        }
        o.verdicts[std::string("rate_") + which] = ds.rate;
    }
    rep["cases"] = cases;
    write_json(cx.out / "wave.json", rep);
    cx.log << "wave: rate " << cases["displacement"]["rate"].get<double>() << " (displacement), "
           << cases["velocity"]["rate"].get<double>() << " (velocity)\n";
    return o;
}

} // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string config_hash(const json& config) { return fnv1a_hex(config.dump()); }

json load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    try {
        json j = json::parse(is);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON config: ") + e.what());
    }
}

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("unknown key '" + k + "' in " + where);
}

ChannelPotential parse_potential(const json& decl, const fs::path& base_dir) {
    if (!decl.is_object() || !decl.contains("kind")) throw ConfigError("potential needs a 'kind'");
    const auto kind = decl.at("kind").get<std::string>();
    if (kind == "zero") {
        check_keys(decl, {"kind"}, "potential");
        return ChannelPotential(make_zero());
    }
    if (kind == "exponential") {
        check_keys(decl, {"kind", "amplitude", "rate"}, "potential");
        const double a = get_or(decl, "amplitude", 1.0);
        return ChannelPotential(a == 0.0 ? make_zero() : make_exponential(a, get_or(decl, "rate", 1.0)));
    }
    if (kind == "square_well") {
        check_keys(decl, {"kind", "depth", "radius", "mollify"}, "potential");
        const double V0 = require(decl, "depth").get<double>(), a = require(decl, "radius").get<double>();
        if (decl.contains("mollify")) return ChannelPotential(make_smoothed_square_well(V0, a, decl.at("mollify").get<double>()));
        return ChannelPotential(make_square_well(V0, a));
    }
    if (kind == "bargmann") {
        check_keys(decl, {"kind"}, "potential");
        return ChannelPotential(make_bargmann_pair().potential);
    }
    if (kind == "tabulated") {
        check_keys(decl, {"kind", "path"}, "potential");
        fs::path p = require(decl, "path").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return ChannelPotential(load_tabulated_csv(p.string()));
    }
    if (kind == "linearized_nls") {
        check_keys(decl, {"kind", "p", "omega", "branch"}, "potential");
        const double p = get_or(decl, "p", 2.0), omega = get_or(decl, "omega", 1.0);
        const auto branch = get_or<std::string>(decl, "branch", "minus");
        if (branch != "minus" && branch != "plus") throw ConfigError("branch must be minus or plus");
        auto gs = solve_ground_state(p);
        if (omega != 1.0) gs = rescale(gs, omega);
        const auto [wm, wp] = make_linearized_potentials(gs);
        return ChannelPotential(branch == "minus" ? wm : wp);
    }
    if (kind == "centrifugal_composite") {
        check_keys(decl, {"kind", "base", "alpha"}, "potential");
        auto inner = parse_potential(require(decl, "base"), base_dir);
        if (inner.alpha != 0.0) throw ConfigError("nested centrifugal_composite");
        const double alpha = require(decl, "alpha").get<double>();
        if (!(alpha >= 0)) throw ConfigError("alpha must be >= 0");
        return ChannelPotential(inner.base, alpha);
    }
    throw ConfigError("unknown potential kind '" + kind + "'");
}

json potential_shorthand(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    std::vector<std::string> args;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        for (std::string item; std::getline(ss, item, ',');) args.push_back(item);
    }
    auto number = [&](std::size_t i) {
        try {
            std::size_t used = 0;
            const double v = std::stod(args.at(i), &used);
            if (used != args[i].size()) throw std::invalid_argument(args[i]);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad number in potential shorthand '" + text + "'");
        }
    };
    json j{{"kind", kind}};
    if (kind == "zero" || kind == "bargmann") {
        if (!args.empty()) throw ConfigError(kind + " takes no parameters");
    } else if (kind == "exponential") {
        if (args.empty() || args.size() > 2) throw ConfigError("exponential:amplitude[,rate]");
        j["amplitude"] = number(0);
        if (args.size() > 1) j["rate"] = number(1);
    } else if (kind == "square_well") {
        if (args.size() < 2 || args.size() > 3) throw ConfigError("square_well:depth,radius[,mollify]");
        j["depth"] = number(0);
        j["radius"] = number(1);
        if (args.size() > 2) j["mollify"] = number(2);
    } else if (kind == "tabulated") {
        if (args.size() != 1) throw ConfigError("tabulated:path");
        j["path"] = args[0];
    } else if (kind == "linearized_nls") {
        if (args.empty() || args.size() > 3) throw ConfigError("linearized_nls:p[,omega[,minus|plus]]");
        j["p"] = number(0);
        if (args.size() > 1) j["omega"] = number(1);
        if (args.size() > 2) j["branch"] = args[2];
    } else {
        throw ConfigError("unknown potential kind '" + kind + "'");
    }
    return j;
}

std::vector<std::string> commands() { return {"classify", "certify", "weakres", "groundstate", "scan", "wave"}; }

int run_command(const std::string& command, const json& config, const fs::path& out_dir, std::ostream& log,
                const fs::path& base_dir) {
    const Context cx{command, config, out_dir, base_dir, log};
    json summary = cx.header();
    Outcome o;
    try {
        fs::create_directories(out_dir);
        if (command == "classify") o = run_classify(cx);
        else if (command == "certify") o = run_certify(cx);
        else if (command == "weakres") o = run_weakres(cx);
        else if (command == "groundstate") o = run_groundstate(cx);
        else if (command == "scan") o = run_scan(cx);
        else if (command == "wave") o = run_wave(cx);
        else throw ConfigError("unknown command '" + command + "'");
    } catch (const ConsistencyError& e) {
        o.code = ExitCode::inconsistent;
        o.conflicts.push_back(e.what());
    } catch (const ConfigError& e) {
        o.code = ExitCode::usage;
        summary["error"] = e.what();
    } catch (const PreconditionError& e) {
        o.code = ExitCode::usage;
        summary["error"] = e.what();
    } catch (const StabilityError& e) {
        o.code = ExitCode::usage;
        summary["error"] = e.what();
    } catch (const UnsupportedError& e) {
        o.code = ExitCode::usage;
        summary["error"] = e.what();
    } catch (const json::exception& e) {
        o.code = ExitCode::usage;
        summary["error"] = std::string("config: ") + e.what();
    } catch (const Error& e) {
        o.code = ExitCode::inconclusive;
        summary["error"] = e.what();
    } catch (const fs::filesystem_error& e) {
        o.code = ExitCode::usage;
        summary["error"] = e.what();
    }
    if (summary.contains("error")) log << "error: " << summary["error"].get<std::string>() << "\n";
    for (const auto& c : o.conflicts) log << "conflict: " << c.get<std::string>() << "\n";
    summary["verdicts"] = o.verdicts;
    summary["conflicts"] = o.conflicts;
    summary["consistent"] = o.conflicts.empty();
    summary["exit_code"] = o.code;
    std::error_code ec;
    if (fs::is_directory(out_dir, ec)) {
        try {
            write_json(out_dir / "summary.json", summary);
        } catch (const Error&) {
        }
    }
    return o.code;
}

} // namespace reslab::cli
