#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace reslab {

struct GroundState;

/// Envelope |W(r)| + |W'(r)| <= amplitude * exp(-rate * r) for r >= radius.
struct DecayMeta {
    double amplitude = 0.0; ///< C*
    double rate = 1.0;      ///< epsilon_0
    double radius = 0.0;    ///< r_0
};

struct PotentialTraits {
    bool bounded_at_origin = true;
    bool smooth = true; ///< C^1 on (0, inf)
    bool positive = true;
    bool decreasing = true;
};

/// A location where W or W' is not smooth. width == 0 marks a genuine jump,
/// width > 0 a steep but smooth transition of that length scale.
struct Feature {
    double at = 0.0;
    double width = 0.0;
};

/// Immutable radial potential W(r) with derivative and decay metadata.
class Potential {
public:
    using Fn = std::function<double(double)>;

    struct Spec {
        std::string description;
        Fn value;
        Fn derivative;
        DecayMeta decay;
        PotentialTraits traits;
        std::vector<Feature> features;
        double support_radius = std::numeric_limits<double>::infinity();
    };

    explicit Potential(Spec spec);

    double operator()(double r) const { return d_->value(r); }
    double value(double r) const { return d_->value(r); }
    double derivative(double r) const { return d_->derivative(r); }

    const DecayMeta& decay() const { return d_->decay; }
    const PotentialTraits& traits() const { return d_->traits; }
    const std::vector<Feature>& features() const { return d_->features; }
    const std::string& description() const { return d_->description; }
    /// W vanishes identically beyond this radius (infinity when not compactly supported).
    double support_radius() const { return d_->support_radius; }

    /// Locations of jumps and steep transitions, sorted.
    std::vector<double> breakpoints() const;

    /// c * W with metadata scaled accordingly.
    Potential scaled(double c) const;

private:
    std::shared_ptr<const Spec> d_;
};

/// W_2(r) - alpha(alpha+1)/r^2: a base potential in an angular channel.
struct ChannelPotential {
    Potential base;
    double alpha = 0.0;

    ChannelPotential(Potential p, double a = 0.0);

    double centrifugal(double r) const { return -alpha * (alpha + 1.0) / (r * r); }
    double total(double r) const { return base(r) + centrifugal(r); }
};

struct DecayReport {
    double max_violation = 0.0; ///< largest ratio (|W|+|W'|) / (C* e^{-eps0 r})
    bool holds = true;
};

/// Checks the exponential envelope on a strictly increasing grid inside [r_0, inf).
DecayReport verify_decay_bounds(const Potential& p, std::span<const double> grid);

/// Sampled checks of the positivity / monotonicity declarations.
bool sampled_positive(const Potential& p, std::span<const double> grid);
bool sampled_nonincreasing(const Potential& p, std::span<const double> grid);

/// n log-spaced radii on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

Potential make_zero();
/// amplitude * exp(-rate * r).
Potential make_exponential(double amplitude, double rate = 1.0);
/// depth for r < radius, 0 beyond. Not C^1.
Potential make_square_well(double depth, double radius);
/// depth / (1 + exp(2 (r - radius) / width)): a C-infinity square well.
Potential make_smoothed_square_well(double depth, double radius, double width);

struct BargmannPair {
    Potential potential;
    std::function<double(double)> u;   ///< 1 - e^{-r}
    std::function<double(double)> du;  ///< e^{-r}
    std::function<double(double)> ddu; ///< -e^{-r}
};

/// W(r) = e^{-r} / (1 - e^{-r}) with zero-energy solution u = 1 - e^{-r}.
BargmannPair make_bargmann_pair();

/// Monotone cubic interpolation of (r, W) samples with an exponential tail.
Potential make_tabulated(std::vector<double> r, std::vector<double> w,
                         std::string description = "tabulated");
/// Reads a CSV file with header `r,W`.
Potential load_tabulated_csv(const std::string& path);

/// (W_minus, W_plus) = (chi^p, p chi^p) for the given ground state.
std::pair<Potential, Potential> make_linearized_potentials(const GroundState& gs);

} // namespace reslab
