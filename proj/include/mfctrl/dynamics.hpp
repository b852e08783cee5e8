#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mfctrl/density.hpp"
#include "mfctrl/feedback.hpp"
#include "mfctrl/graph.hpp"

namespace mfctrl {

// Tolerance for density equality in tests and runtime checks.
constexpr double tol_density_eq = 1e-6;

// Forward-equation solution dx/dt = sum_e u_e(t) B_e x under a
// piecewise-constant schedule, sampled on out_grid.  RK4 with fixed step
// h = min(1e-3, 0.01/max_rate) per interval, renormalizing the coordinate
// sum each step.
Trajectory forward_flow(const Graph& g, const ControlSchedule& sched,
                        const Density& x0, const std::vector<double>& out_grid);

// Closed-loop solution dx/dt = sum_e k_e(x) B_e x.  Signed laws are
// accepted; realized laws additionally require the trajectory to stay
// interior (throws std::domain_error otherwise).
Trajectory closed_loop_flow(const Graph& g, const FeedbackLaw& law,
                            const Density& x0, const std::vector<double>& out_grid);

// Closed form of exp(t B_e): identity except column S(e), which holds
// e^{-t} at S(e) and 1 - e^{-t} at T(e).
Eigen::MatrixXd edge_exponential(const Graph& g, int edge_id, double t);

// Constant-rate construction G = -L D with D = diag(1/xeq): G xeq = 0 and
// the induced schedule u_e = G^{T(e)S(e)} makes xeq invariant.
struct LaplacianRates {
    Eigen::MatrixXd G;
    Eigen::VectorXd rates;           // per edge id
    ControlSchedule schedule;        // time-invariant
};
LaplacianRates laplacian_rate_matrix(const Graph& g, const Density& xeq);

// || sum_e k_e(x) B_e x ||_2 <= tol
bool is_equilibrium(const Graph& g, const FeedbackLaw& law, const Density& x, double tol);
bool is_equilibrium(const Graph& g, const Eigen::VectorXd& rates, const Density& x, double tol);

} // namespace mfctrl
