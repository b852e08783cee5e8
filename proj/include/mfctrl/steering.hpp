#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "mfctrl/density.hpp"
#include "mfctrl/graph.hpp"

namespace mfctrl {

// One interval of a steering plan: move mass m across edge e over duration
// dt by holding rate u on that edge only.
struct SteeringStep {
    int edge_id;
    double dt;
    double rate;
    double moved_mass;     // m_i
    int last_departure;    // delta_i flag
    double accumulator;    // sigma_i after this step
};

// Open-loop plan built along a covering closed walk: a carried packet of
// size rho leaves v0, deposits the target displacement at each vertex on
// the walk's last departure from it, and returns to v0.
struct SteeringPlan {
    Walk walk;
    std::vector<SteeringStep> steps;
    Eigen::VectorXd dx;
    double rho = 0.0;

    // duration > 0 pins the final breakpoint to t_offset + duration exactly,
    // absorbing the ulp drift of the accumulated step lengths.
    ControlSchedule to_schedule(int edge_count, double t_offset = 0.0,
                                double duration = -1.0) const;
};

// Piecewise-constant control realizing x0 -> x0 + dx in time T, one active
// edge per interval of length T/s.  Requires sum(dx) = 0 and
// |dx_v| <= rho/M with min(x0) > 2 rho; rho defaults to min(x0)/2 - 1e-12.
std::pair<SteeringPlan, ControlSchedule>
local_steer(const Graph& g, const Density& x0, const Eigen::VectorXd& dx,
            double T, std::optional<double> rho = std::nullopt, int v0 = 1);

// Exact endpoint of a plan via the closed-form edge exponentials; no ODE
// integration involved.
Eigen::VectorXd endpoint(const Graph& g, const SteeringPlan& plan, const Density& x0);

// Interior-to-interior steering in arbitrary time T: straight-line waypoints
// y_k = x0 + (k/N)(xT - x0) with N = ceil(M ||xT - x0||_1 / rho),
// rho = min(x0, xT)/2, each leg driven by local_steer.
struct GlobalSteering {
    ControlSchedule schedule;
    std::vector<SteeringPlan> plans;
    Eigen::VectorXd endpoint_exact;  // product of the per-leg endpoint maps
    int segments = 0;
};
GlobalSteering global_steer(const Graph& g, const Density& x0, const Density& xT, double T);

// Two-vertex lower bound x_1(1) >= exp(-int(u12+u21)) x_1(0): returns
// (lhs, rhs, lhs >= rhs - 1e-6) for rates given on a shared time grid.
struct BoundaryBound {
    double lhs = 0.0, rhs = 0.0;
    bool ok = false;
};
BoundaryBound boundary_bound_check(const std::vector<double>& breakpoints,
                                   const std::vector<double>& u12,
                                   const std::vector<double>& u21,
                                   const Density& x0);

} // namespace mfctrl
