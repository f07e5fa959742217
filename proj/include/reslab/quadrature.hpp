#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace reslab::quad {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights of the n-point rule (cached per n).
const GaussLegendre& gauss_legendre(std::size_t n);

/// Integral of f over [a, b] with a composite rule of `panels` equal panels.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::size_t panels = 1, std::size_t order = 16);

/// Integral of f over [a, b] split at the given interior breakpoints.
double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breaks, std::size_t panels_per_piece = 8,
                           std::size_t order = 16);

/// Composite Gauss-Legendre grid on [a, b] built from panels.
///
/// Each panel carries the spectral integration matrices of its node set, so
/// cumulative integrals from the left end (or to the right end) are computed
/// to the accuracy of polynomial interpolation on the panel.
class PanelGrid {
public:
    PanelGrid() = default;
    PanelGrid(std::vector<double> edges, std::size_t nodes_per_panel);

    /// Panels whose widths grow geometrically away from `a`, capped at `max_width`,
    /// then split at the given breakpoints.
    static PanelGrid graded(double a, double b, std::size_t panels, std::size_t nodes_per_panel,
                            double ratio, std::span<const double> breaks = {},
                            double max_width = 0.0);

    std::size_t size() const { return nodes_.size(); }
    std::size_t panel_count() const { return edges_.size() - 1; }
    std::size_t nodes_per_panel() const { return n_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& edges() const { return edges_; }
    double lower() const { return edges_.front(); }
    double upper() const { return edges_.back(); }

    template <class T>
    T integral(std::span<const T> f) const {
        T s{};
        for (std::size_t i = 0; i < f.size(); ++i) s += weights_[i] * f[i];
        return s;
    }

    /// F_i = integral of f from lower() to nodes()[i].
    std::vector<double> cumulative(std::span<const double> f) const;
    std::vector<std::complex<double>> cumulative(std::span<const std::complex<double>> f) const;
    /// F_i = integral of f from nodes()[i] to upper().
    std::vector<double> reverse_cumulative(std::span<const double> f) const;
    std::vector<std::complex<double>>
    reverse_cumulative(std::span<const std::complex<double>> f) const;

    /// Dense matrices L, U with (L f)_i = cumulative(f)_i and (U f)_i = reverse_cumulative(f)_i.
    /// Row-major, size()*size().
    std::vector<double> lower_matrix() const;
    std::vector<double> upper_matrix() const;

    /// Derivative of the panel-wise interpolant at the nodes.
    std::vector<double> derivative(std::span<const double> f) const;

    /// Barycentric Lagrange interpolation of nodal values at x (within [lower, upper]).
    double interpolate(std::span<const double> f, double x) const;

private:
    template <class T>
    std::vector<T> cumulative_impl(std::span<const T> f, bool reverse) const;

    std::size_t n_ = 0;
    std::vector<double> edges_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    // Reference-panel integration matrices on [-1,1], row-major n*n:
    // left_(i,j) = int_{-1}^{x_i} l_j, right_(i,j) = int_{x_i}^{1} l_j.
    std::vector<double> left_;
    std::vector<double> right_;
    std::vector<double> bary_;
    std::vector<double> diff_; // reference-panel differentiation matrix, row-major n*n
};

} // namespace reslab::quad
