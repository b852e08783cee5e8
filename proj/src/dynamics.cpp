#include "mfctrl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mfctrl {

namespace {

// dx/dt for fixed per-edge rates: sum_e r_e x_{S(e)} (1_T - 1_S)
Eigen::VectorXd vfield(const Graph& g, const Eigen::VectorXd& r, const Eigen::VectorXd& y) {
    Eigen::VectorXd dy = Eigen::VectorXd::Zero(y.size());
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        double flux = r[e] * y[ed.s - 1];
        dy[ed.s - 1] -= flux;
        dy[ed.t - 1] += flux;
    }
    return dy;
}

void rk4_step(const Graph& g, const Eigen::VectorXd& r, Eigen::VectorXd& y, double h) {
    Eigen::VectorXd k1 = vfield(g, r, y);
    Eigen::VectorXd k2 = vfield(g, r, y + 0.5 * h * k1);
    Eigen::VectorXd k3 = vfield(g, r, y + 0.5 * h * k2);
    Eigen::VectorXd k4 = vfield(g, r, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    y /= y.sum();   // the exact flow conserves the sum; remove O(h^5) drift
}

// step cap keeping u*h <= 0.01 so RK4 stays near machine accuracy
double step_for(double max_rate) {
    double h = 1e-3;
    if (max_rate > 0.0) h = std::min(h, 0.01 / max_rate);
    return h;
}

std::vector<double> checked_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("flow: empty output grid");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1]))
            throw std::invalid_argument("flow: output grid not increasing");
    if (grid.front() < 0.0) throw std::invalid_argument("flow: negative time");
    return grid;
}

} // namespace

Trajectory forward_flow(const Graph& g, const ControlSchedule& sched,
                        const Density& x0, const std::vector<double>& out_grid) {
    sched.validate();
    auto grid = checked_grid(out_grid);
    if (grid.back() > sched.horizon())
        throw std::invalid_argument("flow: schedule does not cover the output grid");

    // integrate between consecutive event times (schedule breakpoints and
    // grid points) so samples land exactly on the grid
    std::set<double> events(grid.begin(), grid.end());
    events.insert(0.0);
    for (double b : sched.breakpoints)
        if (b > 0.0 && b < grid.back()) events.insert(b);

    Trajectory traj;
    traj.law_name = "schedule";
    Eigen::VectorXd y = x0.vec();
    double hmin = 1e-3;
    auto record_if_grid = [&](double tt) {
        // grid values came from the same set, so exact comparison is safe
        if (std::binary_search(grid.begin(), grid.end(), tt)) {
            traj.times.push_back(tt);
            traj.states.push_back(y);
        }
    };
    record_if_grid(0.0);
    for (auto it = events.begin(); it != events.end(); ++it) {
        auto nxt = std::next(it);
        if (nxt == events.end()) break;
        double a = *it, b = *nxt;
        if (b <= 0.0) continue;
        const Eigen::VectorXd& r = sched.rates_at(0.5 * (a + b));
        double h0 = step_for(r.size() ? r.maxCoeff() : 0.0);
        int n = std::max(1, static_cast<int>(std::ceil((b - a) / h0)));
        double h = (b - a) / n;
        hmin = std::min(hmin, h);
        for (int i = 0; i < n; ++i) rk4_step(g, r, y, h);
        // nonnegative rates keep the simplex invariant; clip roundoff
        y = y.cwiseMax(0.0);
        y /= y.sum();
        record_if_grid(b);
    }
    traj.step_used = hmin;
    return traj;
}

Trajectory closed_loop_flow(const Graph& g, const FeedbackLaw& law,
                            const Density& x0, const std::vector<double>& out_grid) {
    auto grid = checked_grid(out_grid);
    const bool needs_interior = law.kind == FeedbackLaw::Kind::realized;

    Trajectory traj;
    traj.law_name = law.name;
    Eigen::VectorXd y = x0.vec();
    double hmin = 1e-3;
    auto record_if_grid = [&](double tt) {
        if (std::binary_search(grid.begin(), grid.end(), tt)) {
            traj.times.push_back(tt);
            traj.states.push_back(y);
        }
    };
    record_if_grid(0.0);
    double t = 0.0;
    for (std::size_t gi = (grid.front() == 0.0 ? 1 : 0); gi < grid.size(); ++gi) {
        double target = grid[gi];
        while (t < target) {
            if (needs_interior && y.minCoeff() <= 0.0)
                throw std::domain_error("flow: trajectory left the interior");
            Eigen::VectorXd r = law.rates_at(g, y);
            double h = step_for(r.cwiseAbs().maxCoeff());
            // land exactly on the grid point: the final step takes the exact
            // remainder (possibly a sliver) so t cannot stall below target
            const bool last = target - t <= 1.5 * h;
            if (last) h = target - t;
            hmin = std::min(hmin, h);
            // the cap uses the rates at the step start; the field itself is
            // re-evaluated by each RK4 stage
            auto f = [&](const Eigen::VectorXd& yy) {
                return vfield(g, law.rates_at(g, yy), yy);
            };
            Eigen::VectorXd f1 = f(y);
            Eigen::VectorXd f2 = f(y + 0.5 * h * f1);
            Eigen::VectorXd f3 = f(y + 0.5 * h * f2);
            Eigen::VectorXd f4 = f(y + h * f3);
            y += (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
            y /= y.sum();
            t = last ? target : t + h;
        }
        record_if_grid(target);
    }
    traj.step_used = hmin;
    return traj;
}

Eigen::MatrixXd edge_exponential(const Graph& g, int edge_id, double t) {
    if (t < 0.0) throw std::invalid_argument("exponential: negative time");
    const Edge& e = g.edge(edge_id);
    Eigen::MatrixXd E = Eigen::MatrixXd::Identity(g.vertex_count(), g.vertex_count());
    double f = std::exp(-t);
    E(e.s - 1, e.s - 1) = f;
    E(e.t - 1, e.s - 1) = 1.0 - f;
    return E;
}

LaplacianRates laplacian_rate_matrix(const Graph& g, const Density& xeq) {
    if (!g.bidirected() || !is_strongly_connected(g))
        throw std::invalid_argument("rates: bidirected strongly connected graph required");
    if (!xeq.interior())
        throw std::invalid_argument("rates: interior equilibrium required");
    const int M = g.vertex_count();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(M, M);
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        L(ed.s - 1, ed.t - 1) -= 1.0;
        L(ed.s - 1, ed.s - 1) += 1.0;
    }
    LaplacianRates out;
    out.G = -L * Eigen::VectorXd(xeq.vec().cwiseInverse()).asDiagonal();
    out.rates.resize(g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        out.rates[e] = out.G(ed.t - 1, ed.s - 1);
    }
    out.schedule = ControlSchedule::constant(out.rates);
    return out;
}

bool is_equilibrium(const Graph& g, const FeedbackLaw& law, const Density& x, double tol) {
    return vfield(g, law.rates_at(g, x.vec()), x.vec()).norm() <= tol;
}

bool is_equilibrium(const Graph& g, const Eigen::VectorXd& rates, const Density& x, double tol) {
    return vfield(g, rates, x.vec()).norm() <= tol;
}

} // namespace mfctrl
