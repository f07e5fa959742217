#include "reslab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

// The 1.74 pchip header calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "reslab/errors.hpp"
#include "reslab/ground_state.hpp"

namespace reslab {

Potential::Potential(Spec spec) {
    if (!spec.value || !spec.derivative)
        throw PreconditionError("potential needs both an evaluator and a derivative");
    if (!(spec.decay.rate > 0)) throw PreconditionError("decay rate must be positive");
    std::sort(spec.features.begin(), spec.features.end(),
              [](const Feature& a, const Feature& b) { return a.at < b.at; });
    d_ = std::make_shared<const Spec>(std::move(spec));
}

std::vector<double> Potential::breakpoints() const {
    std::vector<double> out;
    for (const auto& f : d_->features) out.push_back(f.at);
    return out;
}

Potential Potential::scaled(double c) const {
    Spec s = *d_;
    auto v = d_->value;
    auto dv = d_->derivative;
    s.value = [v, c](double r) { return c * v(r); };
    s.derivative = [dv, c](double r) { return c * dv(r); };
    s.decay.amplitude *= std::abs(c);
    s.traits.positive = d_->traits.positive && c > 0;
    s.traits.decreasing = d_->traits.decreasing && c >= 0;
    std::ostringstream os;
    os << c << "*(" << d_->description << ")";
    s.description = os.str();
    return Potential(std::move(s));
}

ChannelPotential::ChannelPotential(Potential p, double a) : base(std::move(p)), alpha(a) {
    if (!(alpha >= 0.0)) throw PreconditionError("channel alpha must be >= 0");
}

DecayReport verify_decay_bounds(const Potential& p, std::span<const double> grid) {
    const auto& d = p.decay();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < d.radius) throw PreconditionError("decay grid starts below r0");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw PreconditionError("decay grid must be strictly increasing");
    }
    DecayReport rep;
    for (double r : grid) {
        const double w = p.value(r), dw = p.derivative(r);
        if (!std::isfinite(w) || !std::isfinite(dw))
            throw EvaluationError("non-finite potential value at r = " + std::to_string(r));
        const double env = d.amplitude * std::exp(-d.rate * r);
        const double lhs = std::abs(w) + std::abs(dw);
        double ratio;
        if (env > 0)
            ratio = lhs / env;
        else
            ratio = lhs == 0 ? 0.0 : std::numeric_limits<double>::infinity();
        rep.max_violation = std::max(rep.max_violation, ratio);
    }
    rep.holds = rep.max_violation <= 1.0 + 1e-12;
    return rep;
}

bool sampled_positive(const Potential& p, std::span<const double> grid) {
    return std::all_of(grid.begin(), grid.end(), [&](double r) { return p(r) > 0; });
}

bool sampled_nonincreasing(const Potential& p, std::span<const double> grid) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (p(grid[i]) > p(grid[i - 1])) return false;
    return true;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
    g.back() = hi;
    return g;
}

Potential make_zero() {
    Potential::Spec s;
    s.description = "zero";
    s.value = [](double) { return 0.0; };
    s.derivative = [](double) { return 0.0; };
    s.decay = {0.0, 1.0, 0.0};
    s.traits = {true, true, false, true};
    s.support_radius = 0.0;
    return Potential(std::move(s));
}

Potential make_exponential(double amplitude, double rate) {
    if (!(rate > 0)) throw PreconditionError("exponential rate must be positive");
    Potential::Spec s;
    std::ostringstream os;
    os << amplitude << "*exp(-" << rate << " r)";
    s.description = os.str();
    s.value = [amplitude, rate](double r) { return amplitude * std::exp(-rate * r); };
    s.derivative = [amplitude, rate](double r) { return -rate * amplitude * std::exp(-rate * r); };
    s.decay = {std::abs(amplitude) * (1.0 + rate), rate, 0.0};
    s.traits = {true, true, amplitude > 0, amplitude >= 0};
    return Potential(std::move(s));
}

Potential make_square_well(double depth, double radius) {
    if (!(depth > 0) || !(radius > 0)) throw PreconditionError("square well needs V0 > 0, a > 0");
    Potential::Spec s;
    std::ostringstream os;
    os << "square_well(" << depth << "," << radius << ")";
    s.description = os.str();
    s.value = [depth, radius](double r) { return r < radius ? depth : 0.0; };
    // The jump at r = a is carried by the feature list.
    s.derivative = [](double) { return 0.0; };
    s.decay = {depth * std::exp(radius), 1.0, 0.0};
    s.traits = {true, false, false, true};
    s.features = {{radius, 0.0}};
    s.support_radius = radius;
    return Potential(std::move(s));
}

Potential make_smoothed_square_well(double depth, double radius, double width) {
    if (!(depth > 0) || !(radius > 0) || !(width > 0))
        throw PreconditionError("smoothed well needs V0, a, width > 0");
    const double k = 2.0 / width;
    auto sig = [radius, k](double r) {
        const double z = k * (r - radius);
        return z > 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    };
    Potential::Spec s;
    std::ostringstream os;
    os << "smoothed_square_well(" << depth << "," << radius << "," << width << ")";
    s.description = os.str();
    s.value = [depth, sig](double r) { return depth * sig(r); };
    s.derivative = [depth, k, sig](double r) {
        const double q = sig(r);
        return -depth * k * q * (1.0 - q);
    };
    // Envelope with rate 1: sampled through the transition, the ratio falls off beyond it.
    double amp = 0.0;
    const double hi = radius + 60.0 * width;
    for (int i = 0; i <= 20000; ++i) {
        const double r = hi * i / 20000.0;
        const double q = sig(r);
        amp = std::max(amp, depth * (q + k * q * (1.0 - q)) * std::exp(r));
    }
    s.decay = {1.05 * amp, 1.0, 0.0};
    s.traits = {true, true, true, true};
    s.features = {{radius, width}};
    return Potential(std::move(s));
}

BargmannPair make_bargmann_pair() {
    Potential::Spec s;
    s.description = "bargmann";
    s.value = [](double r) { return 1.0 / std::expm1(r); };
    s.derivative = [](double r) {
        const double w = 1.0 / std::expm1(r);
        return -w * (1.0 + w);
    };
    // For r >= 1: W e^r <= 1/(1-e^{-1}) and |W| + |W'| = W (2 + W).
    const double b = 1.0 / (1.0 - std::exp(-1.0));
    s.decay = {std::ceil(b * (2.0 + 1.0 / std::expm1(1.0)) * 10.0) / 10.0, 1.0, 1.0};
    s.traits = {false, true, true, true};
    BargmannPair out{Potential(std::move(s)), nullptr, nullptr, nullptr};
    out.u = [](double r) { return -std::expm1(-r); };
    out.du = [](double r) { return std::exp(-r); };
    out.ddu = [](double r) { return -std::exp(-r); };
    return out;
}

Potential make_tabulated(std::vector<double> r, std::vector<double> w, std::string description) {
    if (r.size() != w.size() || r.size() < 4)
        throw ConfigError("tabulated potential needs at least 4 (r, W) samples");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!std::isfinite(r[i]) || !std::isfinite(w[i]))
            throw ConfigError("tabulated potential has non-finite samples");
        if (i > 0 && !(r[i] > r[i - 1])) throw ConfigError("tabulated r must be strictly increasing");
    }
    if (r.front() < 0) throw ConfigError("tabulated r must be >= 0");

    const std::size_t n = r.size();
    const double r_first = r.front(), r_last = r.back(), w_last = w.back();
    // Exponential tail from the last two samples.
    double lambda = 1.0;
    if (w[n - 1] > 0 && w[n - 2] > w[n - 1])
        lambda = std::log(w[n - 2] / w[n - 1]) / (r[n - 1] - r[n - 2]);
    else if (w_last != 0.0)
        throw ConfigError("tabulated potential must decrease towards its last sample");

    std::vector<double> rs = r, ws = w;
    using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
    auto spline = std::make_shared<Pchip>(std::move(rs), std::move(ws));

    auto value = [spline, r_first, r_last, w_last, lambda](double x) {
        if (x >= r_last) return w_last * std::exp(-lambda * (x - r_last));
        return (*spline)(std::max(x, r_first));
    };
    auto derivative = [spline, r_first, r_last, w_last, lambda](double x) {
        if (x >= r_last) return -lambda * w_last * std::exp(-lambda * (x - r_last));
        if (x < r_first) return 0.0;
        return spline->prime(x);
    };

    double amp = 0.0;
    bool positive = true, decreasing = true;
    double prev = value(0.0);
    const double hi = r_last + 1.0;
    for (int i = 0; i <= 20000; ++i) {
        const double x = hi * i / 20000.0;
        const double v = value(x);
        amp = std::max(amp, (std::abs(v) + std::abs(derivative(x))) * std::exp(lambda * x));
        positive = positive && v > 0;
        decreasing = decreasing && v <= prev;
        prev = v;
    }
    Potential::Spec s;
    s.description = std::move(description);
    s.value = value;
    s.derivative = derivative;
    s.decay = {1.05 * amp, lambda, 0.0};
    s.traits = {true, true, positive, decreasing};
    if (w_last == 0.0) s.support_radius = r_last;
    return Potential(std::move(s));
}

Potential load_tabulated_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tabulated potential " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty tabulated potential " + path);
    line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
    if (line != "r,W") throw ConfigError("tabulated potential header must be `r,W`");
    std::vector<double> r, w;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b))
            throw ConfigError("malformed row in " + path + ": " + line);
        try {
            r.push_back(std::stod(a));
            w.push_back(std::stod(b));
        } catch (const std::exception&) {
            throw ConfigError("malformed number in " + path + ": " + line);
        }
    }
    return make_tabulated(std::move(r), std::move(w), "tabulated:" + path);
}

std::pair<Potential, Potential> make_linearized_potentials(const GroundState& gs) {
    if (!gs.converged || gs.r.size() < 4)
        throw StaleInputError("ground state has not been solved to tolerance");
    auto state = std::make_shared<const GroundState>(gs);
    const double p = gs.p;
    auto base = [state, p](double r) { return std::pow(state->value(r), p); };
    auto dbase = [state, p](double r) {
        const double c = state->value(r);
        return p * std::pow(c, p - 1.0) * state->derivative(r);
    };
    const double rate = p * gs.decay_rate();
    double amp = 0.0;
    const double hi = gs.r.back();
    for (int i = 0; i <= 20000; ++i) {
        const double x = hi * i / 20000.0;
        amp = std::max(amp, (std::abs(base(x)) + std::abs(dbase(x))) * std::exp(rate * x));
    }

    auto build = [&](double factor, const std::string& name) {
        Potential::Spec s;
        std::ostringstream os;
        os << name << "(p=" << p << ",omega=" << gs.omega << ")";
        s.description = os.str();
        s.value = [base, factor](double r) { return factor * base(r); };
        s.derivative = [dbase, factor](double r) { return factor * dbase(r); };
        s.decay = {1.05 * factor * amp, rate, 0.0};
        s.traits = {true, true, true, true};
        return Potential(std::move(s));
    };
    return {build(1.0, "chi^p"), build(p, "p*chi^p")};
}

} // namespace reslab
