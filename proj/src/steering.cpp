#include "mfctrl/steering.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "mfctrl/dynamics.hpp"

namespace mfctrl {

ControlSchedule SteeringPlan::to_schedule(int edge_count, double t_offset, double duration) const {
    ControlSchedule s;
    s.breakpoints.push_back(t_offset);
    for (const auto& st : steps) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(edge_count);
        r[st.edge_id] = st.rate;
        s.rates.push_back(std::move(r));
        s.breakpoints.push_back(s.breakpoints.back() + st.dt);
    }
    // accumulated step lengths drift from the nominal horizon by a few ulps,
    // which would make the schedule fall short of output grids ending exactly
    // at T; the drift is orders of magnitude below one interval
    if (duration > 0.0 && !steps.empty()) s.breakpoints.back() = t_offset + duration;
    return s;
}

std::pair<SteeringPlan, ControlSchedule>
local_steer(const Graph& g, const Density& x0, const Eigen::VectorXd& dx,
            double T, std::optional<double> rho_opt, int v0) {
    constexpr double tol = 1e-12;
    const int M = g.vertex_count();
    if (dx.size() != M) throw std::invalid_argument("steer: displacement size mismatch");
    if (!(T > 0.0)) throw std::invalid_argument("steer: horizon must be positive");
    if (std::abs(dx.sum()) > 1e-12)
        throw std::invalid_argument("steer: displacement must conserve mass");

    const double rho = rho_opt.value_or(x0.min_coord() / 2.0 - tol);
    if (!(rho > 0.0) || x0.min_coord() <= 2.0 * rho)
        throw std::invalid_argument("steer: state too close to the boundary for rho");
    if (dx.cwiseAbs().maxCoeff() > rho / M + 1e-15)
        throw std::invalid_argument("steer: per-coordinate displacement exceeds rho/M");

    SteeringPlan plan;
    plan.walk = covering_closed_walk(g, v0);
    plan.dx = dx;
    plan.rho = rho;
    const int s = static_cast<int>(plan.walk.edge_ids.size());
    const double dt = T / s;

    // flag the last departure from each source vertex
    std::vector<int> delta(s, 0);
    std::set<int> seen;
    for (int i = s - 1; i >= 0; --i) {
        int src = g.edge(plan.walk.edge_ids[i]).s;
        if (seen.insert(src).second) delta[i] = 1;
    }

    // carry a packet of size rho along the walk, dropping the per-vertex
    // displacement at each last departure; rates invert the moved fraction
    Eigen::VectorXd y = x0.vec();
    double sigma = 0.0;
    for (int i = 0; i < s; ++i) {
        const int id = plan.walk.edge_ids[i];
        const Edge& e = g.edge(id);
        sigma += delta[i] * dx[e.s - 1];
        const double m = rho - sigma;
        const double avail = y[e.s - 1];
        if (!(m >= 0.0) || !(m < avail - tol))
            throw std::invalid_argument("steer: carried mass exceeds resident mass");
        const double u = -std::log1p(-m / avail) / dt;
        plan.steps.push_back({id, dt, u, m, delta[i], sigma});
        y[e.s - 1] -= m;
        y[e.t - 1] += m;
    }
    return {plan, plan.to_schedule(g.edge_count(), 0.0, T)};
}

Eigen::VectorXd endpoint(const Graph& g, const SteeringPlan& plan, const Density& x0) {
    Eigen::VectorXd x = x0.vec();
    for (const auto& st : plan.steps) {
        const Edge& e = g.edge(st.edge_id);
        const double keep = std::exp(-st.rate * st.dt);
        const double moved = x[e.s - 1] * (1.0 - keep);
        x[e.s - 1] *= keep;
        x[e.t - 1] += moved;
    }
    return x;
}

GlobalSteering global_steer(const Graph& g, const Density& x0, const Density& xT, double T) {
    const int M = g.vertex_count();
    if (xT.size() != M || x0.size() != M)
        throw std::invalid_argument("steer: dimension mismatch");
    if (!x0.interior() || !xT.interior())
        throw std::invalid_argument("steer: boundary endpoints are unreachable in finite time");
    if (!is_strongly_connected(g))
        throw std::invalid_argument("steer: graph not strongly connected");

    const double rho = 0.5 * std::min(x0.min_coord(), xT.min_coord());
    const double L = (xT.vec() - x0.vec()).lpNorm<1>();
    int N = std::max(1, static_cast<int>(std::ceil(M * L / rho)));

    GlobalSteering out;
    for (;;) {
        // per-coordinate per-segment displacement must satisfy the local
        // bound with each waypoint's own rho; N is bumped in the rare case
        // the global estimate falls a rounding sliver short
        bool ok = true;
        out.plans.clear();
        out.schedule = ControlSchedule{};
        out.schedule.breakpoints = {0.0};
        Eigen::VectorXd cur = x0.vec();
        for (int k = 1; k <= N && ok; ++k) {
            Eigen::VectorXd wp = x0.vec() + (static_cast<double>(k) / N) * (xT.vec() - x0.vec());
            Density from(cur);
            Eigen::VectorXd dx = wp - cur;
            double rho_k = from.min_coord() / 2.0 - 1e-12;
            if (dx.cwiseAbs().maxCoeff() > rho_k / M) {
                ok = false;
                break;
            }
            auto [plan, sched] = local_steer(g, from, dx, T / N);
            cur = endpoint(g, plan, from);
            for (std::size_t i = 0; i < sched.rates.size(); ++i) {
                out.schedule.rates.push_back(sched.rates[i]);
                out.schedule.breakpoints.push_back(out.schedule.breakpoints.back() +
                                                   (sched.breakpoints[i + 1] - sched.breakpoints[i]));
            }
            out.plans.push_back(std::move(plan));
        }
        if (ok) {
            out.schedule.breakpoints.back() = T;  // same ulp snap as to_schedule
            out.endpoint_exact = cur;
            out.segments = N;
            // exact arithmetic would end at xT; float drift stays ~1e-12
            return out;
        }
        ++N;
    }
}

BoundaryBound boundary_bound_check(const std::vector<double>& breakpoints,
                                   const std::vector<double>& u12,
                                   const std::vector<double>& u21,
                                   const Density& x0) {
    if (x0.size() != 2) throw std::invalid_argument("bound: two-vertex state required");
    if (breakpoints.size() != u12.size() + 1 || u12.size() != u21.size() || u12.empty())
        throw std::invalid_argument("bound: rate grid mismatch");
    Graph g = Graph::build(2, {{1, 2}, {2, 1}});
    ControlSchedule sched;
    sched.breakpoints = breakpoints;
    for (std::size_t i = 0; i < u12.size(); ++i) {
        Eigen::VectorXd r(2);
        r << u12[i], u21[i];
        sched.rates.push_back(std::move(r));
    }
    sched.validate();
    const double T = breakpoints.back();
    auto traj = forward_flow(g, sched, x0, {0.0, T});

    double integral = 0.0;
    for (std::size_t i = 0; i < u12.size(); ++i)
        integral += (u12[i] + u21[i]) * (breakpoints[i + 1] - breakpoints[i]);

    BoundaryBound b;
    b.lhs = traj.back()[0];
    b.rhs = std::exp(-integral) * x0[0];
    b.ok = b.lhs >= b.rhs - 1e-6;
    return b;
}

} // namespace mfctrl
