#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "reslab/errors.hpp"
#include "reslab/potential.hpp"
#include "reslab/quadrature.hpp"

namespace reslab {

/// Function of at most linear growth, sampled on a panel grid over [0, R_norm] (u(0) = 0).
struct LinearGrowthFunction {
    std::shared_ptr<const quad::PanelGrid> grid;
    std::vector<double> values;

    /// |||u||| = sup_{s>0} |u(s)|/s over the grid nodes.
    double norm() const;
    double operator()(double s) const;
};

/// Panel grid for |||.|||: [0, 1e-4] followed by geometric panels up to 40/eps0, width <= 1.
std::shared_ptr<const quad::PanelGrid> norm_grid(const Potential& p, std::size_t nodes_per_panel = 16);

LinearGrowthFunction make_function(std::shared_ptr<const quad::PanelGrid> grid,
                                   const std::function<double(double)>& f);

struct DResult {
    double D = 0.0;
    double argmax_M = 0.0;
};

/// D = sup_M (1/M) int_0^M s^2 W(s) ds, by a log-grid scan and golden-section refinement.
DResult compute_D(const Potential& p);

/// int_0^inf s W(s) ds: the exact value of |||K||| for W >= 0.
double operator_bound(const Potential& p);

/// K(u)(s) = int_0^s t W u dt + s int_s^inf W u dt, with the tail beyond the grid closed
/// against the declared exponential envelope.
LinearGrowthFunction apply_K(const LinearGrowthFunction& u, const Potential& p);

struct ContractionReport {
    double D = 0.0;
    double argmax_M = 0.0;
    double C1 = 0.0;
    double operator_bound = 0.0;
    std::vector<double> increments; ///< |||u_{n+1} - u_n|||
    std::vector<double> ratios;     ///< increments[n] / increments[n-1]
    bool converged = false;
    std::size_t iterations = 0;
    std::optional<LinearGrowthFunction> limit;
    double fixed_point_residual = 0.0; ///< |||u - C1 s - K(u)|||
    double ode_residual = 0.0;         ///< max |u'' + W u| / max |W u|
    double slope = 0.0;                ///< u'(0) = C1 + int_0^inf W u
    double ode_mismatch = 0.0;         ///< |||u - slope * u_ode|||
};

class NonContractiveError : public Error {
public:
    NonContractiveError(const std::string& what, ContractionReport report)
        : Error(what), report_(std::move(report)) {}
    const ContractionReport& report() const noexcept { return report_; }

private:
    ContractionReport report_;
};

struct PicardOptions {
    double tol = 1e-10;
    std::size_t n_max = 200;
    bool cross_check = true;
};

/// Iterates u_{n+1} = C1 s + K(u_n) from u_0 = C1 s.
ContractionReport picard_construct(const Potential& p, double C1, const PicardOptions& opt = {});

} // namespace reslab
