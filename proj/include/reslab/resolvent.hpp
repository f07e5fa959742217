#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reslab/errors.hpp"
#include "reslab/potential.hpp"
#include "reslab/quadrature.hpp"

namespace reslab {

using cplx = std::complex<double>;

/// phi(r) = exp(-delta r).
class WeightFunction {
public:
    explicit WeightFunction(double delta);
    double delta() const { return delta_; }
    double operator()(double r) const { return std::exp(-delta_ * r); }

private:
    double delta_;
};

/// sin(mu s) / mu, continuous through mu = 0.
cplx sin_over_mu(cplx mu, double s);

/// u(r) = e^{i mu r} int_0^r sin(mu s)/mu f + sin(mu r)/mu int_r^R e^{i mu s} f on the grid nodes.
std::vector<cplx> free_resolvent_apply(cplx mu, std::span<const double> f, const quad::PanelGrid& grid);

/// Quadrature rule for the Nystrom discretization, with its cumulative matrices.
struct NystromRule {
    std::shared_ptr<const quad::PanelGrid> grid;
    std::vector<double> L; ///< row-major cumulative-from-0 matrix
    std::vector<double> U; ///< row-major cumulative-to-R_q matrix
    double R_q = 0.0;
    double envelope = 0.0; ///< kernel envelope beyond R_q
    double max_width = 0.0; ///< panel width cap, 0 for none
    std::size_t order() const { return grid->size(); }
};

/// Default cutoff: the support radius when finite, else max(60, 40 / min(delta, eps0 - 2 delta)).
double default_cutoff(const Potential& p, const WeightFunction& w);

/// Composite Gauss-Legendre rule with `order` nodes (16 per panel), graded towards 0.
/// A positive max_width caps the panel widths, adding panels beyond `order` as needed.
NystromRule make_nystrom_rule(const Potential& p, const WeightFunction& w, std::size_t order = 128,
                              double R_q = 0.0, double max_width = 0.0);

/// max(0, Im mu - delta).
double conjugation_rate(cplx mu, const WeightFunction& w);

/// A(mu) = phi R_0(mu^2) W phi^{-1} on the rule's nodes, quadrature weights folded in.
/// For Im mu > delta the matrix is conjugated by e^{-k r}, k = conjugation_rate(mu, w), which keeps
/// the entries bounded and leaves det(I - A) unchanged.
Eigen::MatrixXcd assemble_A(cplx mu, const Potential& p, const WeightFunction& w,
                            const NystromRule& rule);

/// det(I - A(mu)).
cplx fredholm_det(cplx mu, const Potential& p, const WeightFunction& w, const NystromRule& rule);

/// Smallest singular value of I - A(mu).
double sigma_min(cplx mu, const Potential& p, const WeightFunction& w, const NystromRule& rule);

/// Re in [-re_max, re_max], Im in (im_lo, im_hi]; nodes are n_re x n_im, the bottom row sits
/// one step above im_lo.
struct ScanRect {
    double re_max = 0.5;
    double im_lo = -0.3;
    double im_hi = 0.3;
    std::size_t n_re = 64;
    std::size_t n_im = 32;
};

struct ResonanceZero {
    cplx mu{};
    cplx det{};
    double sigma_min = 0.0;
    cplx det_refined{}; ///< det at the zero with doubled quadrature order
    int winding = 0;    ///< winding number of the cell that produced it
    std::size_t iterations = 0;
    bool validated = false; ///< sigma_min < 1e-6
};

struct ResonanceScan {
    ScanRect rect;
    std::vector<double> re;
    std::vector<double> im;
    std::vector<cplx> det; ///< row-major, det[j * re.size() + i] at re[i] + i im[j]
    std::size_t quadrature_order = 0;
    double R_q = 0.0;
    double delta = 0.0;
    int boundary_winding = 0;
    std::vector<ResonanceZero> zeros;
    double max_abs_det_minus_one = 0.0;
};

/// Fredholm-determinant scan with argument-principle cells and secant polish.
ResonanceScan determinant_scan(const Potential& p, const WeightFunction& w, const ScanRect& rect,
                               std::size_t order = 128);
/// Same, on a given rule; zeros are re-evaluated on the rule with twice the panels.
ResonanceScan determinant_scan(const Potential& p, const WeightFunction& w, const ScanRect& rect,
                               const NystromRule& rule);

struct PoleMatch {
    double energy = 0.0;
    cplx mu{};
    double energy_error = 0.0; ///< |mu^2 - E|
};

struct PoleCrosscheck {
    std::vector<double> eigenvalues;
    std::vector<cplx> zeros; ///< determinant zeros with Im mu > 0
    std::vector<PoleMatch> matches;
    double max_error = 0.0;
    bool delta_flag = false; ///< delta >= sqrt|E| for some eigenvalue
    std::string note;
};

/// Matches negative eigenvalues E_j (node counting) with determinant zeros i sqrt|E_j|.
PoleCrosscheck bound_state_poles_crosscheck(const Potential& p, const WeightFunction& w,
                                            std::size_t order = 128, double tol = 1e-4);

} // namespace reslab
