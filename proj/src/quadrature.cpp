#include "reslab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace reslab::quad {

namespace {

// Legendre polynomials P_0..P_n at x.
std::vector<double> legendre_values(std::size_t n, double x) {
    std::vector<double> p(n + 1);
    p[0] = 1.0;
    if (n >= 1) p[1] = x;
    for (std::size_t k = 1; k < n; ++k)
        p[k + 1] = ((2.0 * k + 1.0) * x * p[k] - double(k) * p[k - 1]) / double(k + 1);
    return p;
}

GaussLegendre compute_rule(std::size_t n) {
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - double(j) * p3) / double(j + 1);
            }
            dp = double(n) * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // Recompute the derivative at the converged root.
        double p1 = 1.0, p2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j + 1.0) * z * p2 - double(j) * p3) / double(j + 1);
        }
        dp = double(n) * (z * p1 - p2) / (z * z - 1.0);
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return rule;
}

} // namespace

const GaussLegendre& gauss_legendre(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, GaussLegendre> cache;
    std::lock_guard lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t panels,
                 std::size_t order) {
    const auto& gl = gauss_legendre(order);
    const double h = (b - a) / double(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * double(p);
        const double mid = lo + 0.5 * h;
        double s = 0.0;
        for (std::size_t i = 0; i < order; ++i) s += gl.weights[i] * f(mid + 0.5 * h * gl.nodes[i]);
        sum += 0.5 * h * s;
    }
    return sum;
}

double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breaks, std::size_t panels_per_piece,
                           std::size_t order) {
    std::vector<double> cuts{a};
    for (double x : breaks)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) sum += integrate(f, cuts[i], cuts[i + 1], panels_per_piece, order);
    return sum;
}

PanelGrid::PanelGrid(std::vector<double> edges, std::size_t nodes_per_panel)
    : n_(nodes_per_panel), edges_(std::move(edges)) {
    if (edges_.size() < 2 || n_ < 2) throw std::invalid_argument("PanelGrid: need >=1 panel, >=2 nodes");
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i)
        if (!(edges_[i + 1] > edges_[i])) throw std::invalid_argument("PanelGrid: edges must increase");

    const auto& gl = gauss_legendre(n_);
    for (std::size_t p = 0; p + 1 < edges_.size(); ++p) {
        const double half = 0.5 * (edges_[p + 1] - edges_[p]);
        const double mid = 0.5 * (edges_[p + 1] + edges_[p]);
        for (std::size_t i = 0; i < n_; ++i) {
            nodes_.push_back(mid + half * gl.nodes[i]);
            weights_.push_back(half * gl.weights[i]);
        }
    }

    // Spectral integration matrices via the Legendre basis.
    Eigen::MatrixXd V(n_, n_), BL(n_, n_), BR(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
        const auto P = legendre_values(n_ + 1, gl.nodes[i]);
        const double x = gl.nodes[i];
        for (std::size_t j = 0; j < n_; ++j) {
            V(i, j) = P[j];
            if (j == 0) {
                BL(i, j) = x + 1.0;
                BR(i, j) = 1.0 - x;
            } else {
                const double d = (P[j + 1] - P[j - 1]) / (2.0 * j + 1.0);
                BL(i, j) = d;
                BR(i, j) = -d;
            }
        }
    }
    const Eigen::MatrixXd Vinv = V.inverse();
    const Eigen::MatrixXd L = BL * Vinv;
    const Eigen::MatrixXd R = BR * Vinv;
    left_.resize(n_ * n_);
    right_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) {
            left_[i * n_ + j] = L(i, j);
            right_[i * n_ + j] = R(i, j);
        }

    bary_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        double w = 1.0;
        for (std::size_t k = 0; k < n_; ++k)
            if (k != j) w *= (gl.nodes[j] - gl.nodes[k]);
        bary_[j] = 1.0 / w;
    }
    diff_.assign(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double diag = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (i == j) continue;
            const double d = (bary_[j] / bary_[i]) / (gl.nodes[i] - gl.nodes[j]);
            diff_[i * n_ + j] = d;
            diag -= d;
        }
        diff_[i * n_ + i] = diag;
    }
}

PanelGrid PanelGrid::graded(double a, double b, std::size_t panels, std::size_t nodes_per_panel,
                            double ratio, std::span<const double> breaks, double max_width) {
    if (!(b > a) || panels == 0) throw std::invalid_argument("PanelGrid::graded: bad interval");
    const double len = b - a;
    auto total = [&](double w0, std::size_t np) {
        double s = 0.0, w = w0;
        for (std::size_t k = 0; k < np; ++k) {
            s += max_width > 0 ? std::min(w, max_width) : w;
            w *= ratio;
        }
        return s;
    };
    std::size_t np = panels;
    if (max_width > 0)
        while (double(np) * max_width < len) ++np;
    // Bisect on the first width so the panel widths sum to the interval length.
    double lo = 0.0, hi = len;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid, np) < len ? lo : hi) = mid;
    }
    std::vector<double> edges{a};
    double w = 0.5 * (lo + hi);
    for (std::size_t k = 0; k < np; ++k) {
        edges.push_back(edges.back() + (max_width > 0 ? std::min(w, max_width) : w));
        w *= ratio;
    }
    edges.back() = b;

    for (double x : breaks) {
        if (!(x > a && x < b)) continue;
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        const double left = *(it - 1), right = *it;
        const double tol = 1e-12 * std::max(1.0, std::abs(x));
        if (std::abs(x - left) < tol || std::abs(x - right) < tol) continue;
        edges.insert(it, x);
    }
    return PanelGrid(std::move(edges), nodes_per_panel);
}

template <class T>
std::vector<T> PanelGrid::cumulative_impl(std::span<const T> f, bool reverse) const {
    if (f.size() != nodes_.size()) throw std::invalid_argument("PanelGrid: size mismatch");
    const std::size_t P = panel_count();
    std::vector<T> out(nodes_.size());
    std::vector<T> totals(P);
    for (std::size_t p = 0; p < P; ++p) {
        const double half = 0.5 * (edges_[p + 1] - edges_[p]);
        T s{};
        for (std::size_t j = 0; j < n_; ++j) s += weights_[p * n_ + j] * f[p * n_ + j];
        totals[p] = s;
        const auto& M = reverse ? right_ : left_;
        for (std::size_t i = 0; i < n_; ++i) {
            T acc{};
            for (std::size_t j = 0; j < n_; ++j) acc += M[i * n_ + j] * f[p * n_ + j];
            out[p * n_ + i] = half * acc;
        }
    }
    if (!reverse) {
        T offset{};
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t i = 0; i < n_; ++i) out[p * n_ + i] += offset;
            offset += totals[p];
        }
    } else {
        T offset{};
        for (std::size_t p = P; p-- > 0;) {
            for (std::size_t i = 0; i < n_; ++i) out[p * n_ + i] += offset;
            offset += totals[p];
        }
    }
    return out;
}

std::vector<double> PanelGrid::cumulative(std::span<const double> f) const {
    return cumulative_impl(f, false);
}
std::vector<std::complex<double>>
PanelGrid::cumulative(std::span<const std::complex<double>> f) const {
    return cumulative_impl(f, false);
}
std::vector<double> PanelGrid::reverse_cumulative(std::span<const double> f) const {
    return cumulative_impl(f, true);
}
std::vector<std::complex<double>>
PanelGrid::reverse_cumulative(std::span<const std::complex<double>> f) const {
    return cumulative_impl(f, true);
}

std::vector<double> PanelGrid::lower_matrix() const {
    const std::size_t N = size();
    std::vector<double> m(N * N, 0.0);
    for (std::size_t p = 0; p < panel_count(); ++p) {
        const double half = 0.5 * (edges_[p + 1] - edges_[p]);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t row = p * n_ + i;
            for (std::size_t q = 0; q < p; ++q)
                for (std::size_t j = 0; j < n_; ++j) m[row * N + q * n_ + j] = weights_[q * n_ + j];
            for (std::size_t j = 0; j < n_; ++j) m[row * N + p * n_ + j] = half * left_[i * n_ + j];
        }
    }
    return m;
}

std::vector<double> PanelGrid::upper_matrix() const {
    const std::size_t N = size();
    const std::size_t P = panel_count();
    std::vector<double> m(N * N, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
        const double half = 0.5 * (edges_[p + 1] - edges_[p]);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t row = p * n_ + i;
            for (std::size_t q = p + 1; q < P; ++q)
                for (std::size_t j = 0; j < n_; ++j) m[row * N + q * n_ + j] = weights_[q * n_ + j];
            for (std::size_t j = 0; j < n_; ++j) m[row * N + p * n_ + j] = half * right_[i * n_ + j];
        }
    }
    return m;
}

std::vector<double> PanelGrid::derivative(std::span<const double> f) const {
    if (f.size() != nodes_.size()) throw std::invalid_argument("PanelGrid: size mismatch");
    std::vector<double> out(f.size());
    for (std::size_t p = 0; p < panel_count(); ++p) {
        const double scale = 2.0 / (edges_[p + 1] - edges_[p]);
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n_; ++j) acc += diff_[i * n_ + j] * f[p * n_ + j];
            out[p * n_ + i] = scale * acc;
        }
    }
    return out;
}

double PanelGrid::interpolate(std::span<const double> f, double x) const {
    auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    std::size_t p = it == edges_.begin() ? 0 : std::size_t(it - edges_.begin()) - 1;
    p = std::min(p, panel_count() - 1);
    const double half = 0.5 * (edges_[p + 1] - edges_[p]);
    const double mid = 0.5 * (edges_[p + 1] + edges_[p]);
    const double t = (x - mid) / half;
    const auto& gl = gauss_legendre(n_);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        const double d = t - gl.nodes[j];
        if (d == 0.0) return f[p * n_ + j];
        const double c = bary_[j] / d;
        num += c * f[p * n_ + j];
        den += c;
    }
    return num / den;
}

} // namespace reslab::quad
