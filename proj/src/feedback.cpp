#include "mfctrl/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace mfctrl {

const char* FeedbackLaw::kind_name(Kind k) {
    switch (k) {
        case Kind::constant: return "constant";
        case Kind::balance: return "balance";
        case Kind::gain: return "gain";
        case Kind::realized: return "realized";
    }
    return "?";
}

FeedbackLaw::Kind FeedbackLaw::kind_from_name(const std::string& s) {
    if (s == "constant") return Kind::constant;
    if (s == "balance") return Kind::balance;
    if (s == "gain") return Kind::gain;
    if (s == "realized") return Kind::realized;
    throw std::invalid_argument("law: unknown kind '" + s + "'");
}

namespace {

double base_rate(const FeedbackLaw& law, FeedbackLaw::Kind kind, const Graph& g,
                 int e, double ys, double yt) {
    const Edge& ed = g.edge(e);
    switch (kind) {
        case FeedbackLaw::Kind::constant:
            return law.const_rates[e];
        case FeedbackLaw::Kind::balance:
            return law.xeq[ed.t - 1] * ys - law.xeq[ed.s - 1] * yt;
        case FeedbackLaw::Kind::gain:
            return law.gain(e, ed.s - 1) * (ys - law.xeq[ed.s - 1]) +
                   law.gain(e, ed.t - 1) * (yt - law.xeq[ed.t - 1]);
        default:
            throw std::logic_error("law: realized base must be signed");
    }
}

} // namespace

double FeedbackLaw::rate(const Graph& g, int e, double ys, double yt) const {
    if (kind != Kind::realized) return base_rate(*this, kind, g, e, ys, yt);
    if (!(ys > 0.0))
        throw std::domain_error("law: realized rate needs positive source density");
    int er = g.reverse_edge(e);
    double ke = base_rate(*this, base_kind, g, e, ys, yt);
    // reverse edge sees the same two densities with roles swapped
    double kr = base_rate(*this, base_kind, g, er, yt, ys);
    return std::max(ke, 0.0) + std::max(-kr, 0.0) * yt / ys;
}

FeedbackLaw balance_law(const Graph& g, const Density& xeq) {
    if (xeq.size() != g.vertex_count())
        throw std::invalid_argument("law: dimension mismatch");
    if (!xeq.interior())
        throw std::invalid_argument("law: equilibrium must be interior");
    FeedbackLaw law;
    law.kind = FeedbackLaw::Kind::balance;
    law.xeq = xeq.vec();
    law.name = "balance";
    return law;
}

FeedbackLaw constant_law(const Graph& g, Eigen::VectorXd rates) {
    if (rates.size() != g.edge_count())
        throw std::invalid_argument("law: rate count mismatch");
    if ((rates.array() < 0).any())
        throw std::invalid_argument("law: negative constant rate");
    FeedbackLaw law;
    law.kind = FeedbackLaw::Kind::constant;
    law.const_rates = std::move(rates);
    law.name = "constant";
    return law;
}

Linearization linearization(const Graph& g, const Density& xeq) {
    if (!xeq.interior())
        throw std::invalid_argument("linearization: equilibrium must be interior");
    const int M = g.vertex_count();
    Linearization lin;
    lin.G = Eigen::MatrixXd::Zero(M, M);
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        const int s = ed.s - 1, t = ed.t - 1;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
        A(s, s) = -xeq[t] * xeq[s];
        A(s, t) = xeq[s] * xeq[s];
        A(t, t) = -xeq[s] * xeq[s];
        A(t, s) = xeq[t] * xeq[s];
        lin.G += A;
        lin.A_e.push_back(std::move(A));
    }
    return lin;
}

SpectralCertificate spectral_certificate(const Eigen::MatrixXd& G) {
    if (G.rows() != G.cols()) throw std::invalid_argument("certificate: square matrix required");
    const int M = static_cast<int>(G.rows());
    if ((Eigen::RowVectorXd::Ones(M) * G).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("certificate: column sums must vanish");

    SpectralCertificate cert;
    cert.G = G;
    Eigen::EigenSolver<Eigen::MatrixXd> es(G);
    for (int i = 0; i < M; ++i) cert.eigenvalues.push_back(es.eigenvalues()[i]);
    std::sort(cert.eigenvalues.begin(), cert.eigenvalues.end(),
              [](auto a, auto b) {
                  if (a.real() != b.real()) return a.real() > b.real();
                  return a.imag() > b.imag();
              });

    constexpr double cluster = 1e-9;
    double gap = -std::numeric_limits<double>::infinity();
    bool rest_stable = true;
    for (const auto& ev : cert.eigenvalues) {
        if (std::abs(ev) <= cluster) {
            ++cert.zero_multiplicity;
        } else {
            gap = std::max(gap, ev.real());
            if (ev.real() >= -cluster) rest_stable = false;
        }
    }
    cert.spectral_gap = gap;

    // irreducibility of the off-diagonal support digraph
    std::vector<std::vector<int>> adj(M), radj(M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            if (i != j && G(i, j) != 0.0) {
                adj[j].push_back(i);   // G(i,j) != 0: j influences i
                radj[i].push_back(j);
            }
    auto full_bfs = [M](const std::vector<std::vector<int>>& a) {
        std::vector<char> vis(M, 0);
        std::queue<int> q;
        vis[0] = 1;
        q.push(0);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int w : a[u])
                if (!vis[w]) {
                    vis[w] = 1;
                    q.push(w);
                }
        }
        return std::all_of(vis.begin(), vis.end(), [](char c) { return c != 0; });
    };
    cert.irreducible = M > 1 && full_bfs(adj) && full_bfs(radj);

    cert.pass = (cert.zero_multiplicity == 1) && (M >= 2) && rest_stable;
    return cert;
}

FeedbackLaw rational_realization(const Graph& g, const FeedbackLaw& law) {
    if (!g.bidirected())
        throw std::invalid_argument("realization: graph must be bidirected");
    if (law.kind != FeedbackLaw::Kind::balance && law.kind != FeedbackLaw::Kind::gain)
        throw std::invalid_argument("realization: signed law required");
    FeedbackLaw out = law;
    out.kind = FeedbackLaw::Kind::realized;
    out.base_kind = law.kind;
    out.name = law.name.empty() ? "realized" : law.name + "-realized";
    return out;
}

DecayFit decay_fit(const Trajectory& traj, const Density& xeq) {
    if (traj.times.size() < 3)
        throw std::domain_error("decay fit: trajectory too short");
    std::vector<double> errs(traj.times.size());
    for (std::size_t i = 0; i < traj.states.size(); ++i)
        errs[i] = (traj.states[i] - xeq.vec()).norm();
    const double e0 = errs.front();
    if (!(errs.back() < e0))
        throw std::domain_error("decay fit: trajectory does not converge");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < errs.size(); ++i) {
        if (errs[i] < 1e-8 || errs[i] > e0 / 2) continue;
        double x = traj.times[i], y = std::log(errs[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n < 2) throw std::domain_error("decay fit: window empty");
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::domain_error("decay fit: degenerate window");
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    return {std::exp(intercept), -slope};
}

} // namespace mfctrl
