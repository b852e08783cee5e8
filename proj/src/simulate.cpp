#include "mfctrl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace mfctrl {

namespace {

// rates for the occupied vertices of one step; entries of unoccupied
// sources are left at zero and never read
using RateProvider = std::function<void(double t, const Eigen::VectorXd& dens,
                                        const std::vector<bool>& occupied, Eigen::VectorXd& r)>;

AgentTrace run_agents(const Graph& g, const RateProvider& rates_of, const std::string& law_name,
                      const Eigen::VectorXi& counts0, double dt0, double T, std::uint64_t seed,
                      bool record_agents) {
    const int M = g.vertex_count();
    if (counts0.size() != M) throw std::invalid_argument("simulate: counts size mismatch");
    if (counts0.minCoeff() < 0) throw std::invalid_argument("simulate: negative count");
    const long long N = counts0.sum();
    if (N < 1) throw std::invalid_argument("simulate: no agents");
    if (M > 255) throw std::invalid_argument("simulate: vertex ids exceed one byte");
    if (!(dt0 > 0.0) || !(T > 0.0)) throw std::invalid_argument("simulate: dt and T must be positive");

    double dt = dt0;
    for (int attempt = 0; attempt < 24; ++attempt) {
        const long long steps = std::llround(T / dt);
        if (steps < 1) throw std::invalid_argument("simulate: horizon shorter than one step");

        std::vector<std::uint8_t> agent(static_cast<std::size_t>(N));
        {
            std::size_t a = 0;
            for (int v = 0; v < M; ++v)
                for (int i = 0; i < counts0[v]; ++i) agent[a++] = static_cast<std::uint8_t>(v + 1);
        }
        Eigen::VectorXi counts = counts0;

        AgentTrace trace;
        trace.N = static_cast<int>(N);
        trace.dt = dt;
        trace.seed = seed;
        trace.law_name = law_name;
        trace.populations.reserve(static_cast<std::size_t>(steps) + 1);
        trace.populations.push_back(counts);
        if (record_agents) {
            trace.agents.reserve(static_cast<std::size_t>(steps) + 1);
            trace.agents.push_back(agent);
        }

        SplitMix64 rng(seed);
        Eigen::VectorXd r(g.edge_count());
        std::vector<bool> occupied(static_cast<std::size_t>(M));
        std::vector<std::vector<double>> cum(static_cast<std::size_t>(M));
        bool retry = false;

        for (long long s = 0; s < steps && !retry; ++s) {
            Eigen::VectorXd dens = counts.cast<double>() / static_cast<double>(N);
            for (int v = 0; v < M; ++v) occupied[static_cast<std::size_t>(v)] = counts[v] > 0;
            r.setZero();
            rates_of(static_cast<double>(s) * dt, dens, occupied, r);

            for (int v = 1; v <= M; ++v) {
                auto& c = cum[static_cast<std::size_t>(v - 1)];
                c.clear();
                if (counts[v - 1] == 0) continue;
                double acc = 0.0;
                for (int e : g.out_edges(v)) {
                    if (r[e] < 0.0) throw std::invalid_argument("simulate: negative rate");
                    acc += r[e] * dt;
                    c.push_back(acc);
                }
                if (acc > 0.5) {  // exit probability too large for the step
                    std::fprintf(stderr, "simulate: exit probability %.3g > 0.5 at t=%.6g, retrying with dt=%g\n",
                                 acc, static_cast<double>(s) * dt, dt / 2.0);
                    retry = true;
                    break;
                }
            }
            if (retry) break;

            for (std::size_t a = 0; a < agent.size(); ++a) {
                const int v = agent[a];
                const auto& c = cum[static_cast<std::size_t>(v - 1)];
                if (c.empty()) continue;
                const double u = rng.uniform();
                if (u >= c.back()) continue;  // stay
                const auto& out = g.out_edges(v);
                for (std::size_t j = 0; j < c.size(); ++j) {
                    if (u < c[j]) {
                        const int w = g.edge(out[j]).t;
                        agent[a] = static_cast<std::uint8_t>(w);
                        --counts[v - 1];
                        ++counts[w - 1];
                        break;
                    }
                }
            }

            trace.populations.push_back(counts);
            if (record_agents) trace.agents.push_back(agent);
        }

        if (!retry) return trace;
        dt /= 2.0;
    }
    throw std::runtime_error("simulate: step size underflow while enforcing the exit bound");
}

} // namespace

AgentTrace simulate_agents(const Graph& g, const FeedbackLaw& law, const Eigen::VectorXi& counts0,
                           double dt, double T, std::uint64_t seed, bool record_agents) {
    RateProvider provider = [&g, &law](double, const Eigen::VectorXd& dens,
                                       const std::vector<bool>& occupied, Eigen::VectorXd& r) {
        for (int e = 0; e < g.edge_count(); ++e) {
            const Edge& ed = g.edge(e);
            if (!occupied[static_cast<std::size_t>(ed.s - 1)]) continue;
            r[e] = law.rate(g, e, dens[ed.s - 1], dens[ed.t - 1]);
        }
    };
    return run_agents(g, provider, law.name.empty() ? "law" : law.name, counts0, dt, T, seed,
                      record_agents);
}

AgentTrace simulate_agents(const Graph& g, const ControlSchedule& sched,
                           const Eigen::VectorXi& counts0, double dt, double T, std::uint64_t seed,
                           bool record_agents) {
    sched.validate();
    if (sched.horizon() < T) throw std::invalid_argument("simulate: schedule shorter than horizon");
    RateProvider provider = [&sched](double t, const Eigen::VectorXd&, const std::vector<bool>&,
                                     Eigen::VectorXd& r) { r = sched.rates_at(t); };
    return run_agents(g, provider, "schedule", counts0, dt, T, seed, record_agents);
}

Density empirical_density(const AgentTrace& trace, double t) {
    const double idx = t / trace.dt;
    const long long i = std::llround(idx);
    if (std::abs(idx - static_cast<double>(i)) > 1e-6)
        throw std::invalid_argument("simulate: time not on the trace grid");
    if (i < 0 || i >= static_cast<long long>(trace.populations.size()))
        throw std::invalid_argument("simulate: time outside the trace");
    Eigen::VectorXd dens =
        trace.populations[static_cast<std::size_t>(i)].cast<double>() / static_cast<double>(trace.N);
    return Density(std::move(dens));
}

std::vector<int> switch_counts(const AgentTrace& trace, double t_a, double t_b) {
    if (!trace.has_agents())
        throw std::invalid_argument("simulate: switch counts need recorded agents");
    std::vector<int> counts(trace.agents.front().size(), 0);
    const long long steps = trace.steps();
    for (long long s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) * trace.dt;
        if (t < t_a - 1e-12 || t > t_b + 1e-12) continue;
        const auto& before = trace.agents[static_cast<std::size_t>(s)];
        const auto& after = trace.agents[static_cast<std::size_t>(s) + 1];
        for (std::size_t a = 0; a < counts.size(); ++a)
            if (before[a] != after[a]) ++counts[a];
    }
    return counts;
}

EnsembleStats ensemble(const Graph& g, const FeedbackLaw& law, const Eigen::VectorXi& counts0,
                       double dt, double T, int runs, std::uint64_t seed0, int threads) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(std::max(runs, 0)));
    for (int i = 0; i < runs; ++i) seeds[static_cast<std::size_t>(i)] = seed0 + static_cast<std::uint64_t>(i);
    return ensemble(g, law, counts0, dt, T, seeds, threads);
}

EnsembleStats ensemble(const Graph& g, const FeedbackLaw& law, const Eigen::VectorXi& counts0,
                       double dt, double T, const std::vector<std::uint64_t>& seeds, int threads) {
    const int runs = static_cast<int>(seeds.size());
    if (runs < 2) throw std::invalid_argument("simulate: ensemble needs at least two runs");
    std::vector<AgentTrace> traces(static_cast<std::size_t>(runs));

    // rerun everything whenever some run had to shrink its step so the
    // ensemble shares one grid
    for (;;) {
        const int nthreads = std::max(1, std::min(threads, runs));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
        auto worker = [&](int tid) {
            try {
                for (int i = tid; i < runs; i += nthreads)
                    traces[static_cast<std::size_t>(i)] =
                        simulate_agents(g, law, counts0, dt, T, seeds[static_cast<std::size_t>(i)]);
            } catch (...) {
                errors[static_cast<std::size_t>(tid)] = std::current_exception();
            }
        };
        if (nthreads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int tid = 0; tid < nthreads; ++tid) pool.emplace_back(worker, tid);
            for (auto& th : pool) th.join();
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);

        double min_dt = dt;
        for (const auto& tr : traces) min_dt = std::min(min_dt, tr.dt);
        if (min_dt == dt) break;
        dt = min_dt;
    }

    const std::size_t n_steps = traces.front().populations.size();
    const int M = g.vertex_count();
    EnsembleStats stats;
    stats.runs = runs;
    stats.dt = dt;
    stats.mean.assign(n_steps, Eigen::VectorXd::Zero(M));
    stats.variance.assign(n_steps, Eigen::VectorXd::Zero(M));
    const double N = static_cast<double>(traces.front().N);
    for (std::size_t s = 0; s < n_steps; ++s) {
        for (const auto& tr : traces)
            stats.mean[s] += tr.populations[s].cast<double>() / N;
        stats.mean[s] /= static_cast<double>(runs);
        if (runs > 1) {
            for (const auto& tr : traces) {
                Eigen::VectorXd d = tr.populations[s].cast<double>() / N - stats.mean[s];
                stats.variance[s] += d.cwiseProduct(d);
            }
            stats.variance[s] /= static_cast<double>(runs - 1);
        }
    }
    return stats;
}

double window_density_variance(const AgentTrace& trace, double t_a, double t_b) {
    const long long i0 = std::max<long long>(0, static_cast<long long>(std::ceil(t_a / trace.dt - 1e-9)));
    const long long i1 = std::min<long long>(static_cast<long long>(trace.populations.size()) - 1,
                                             static_cast<long long>(std::floor(t_b / trace.dt + 1e-9)));
    if (i1 - i0 < 1) throw std::invalid_argument("simulate: variance window too short");
    const int M = static_cast<int>(trace.populations.front().size());
    const double n = static_cast<double>(i1 - i0 + 1);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(M);
    for (long long i = i0; i <= i1; ++i)
        mean += trace.populations[static_cast<std::size_t>(i)].cast<double>() / trace.N;
    mean /= n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(M);
    for (long long i = i0; i <= i1; ++i) {
        Eigen::VectorXd d = trace.populations[static_cast<std::size_t>(i)].cast<double>() / trace.N - mean;
        var += d.cwiseProduct(d);
    }
    var /= (n - 1.0);
    return var.mean();
}

int thread_cap_from_env() {
    const char* s = std::getenv("MFCTRL_THREADS");
    if (!s || !*s) return 1;
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end == s || v < 1) return 1;
    return static_cast<int>(std::min<long>(v, 256));
}

} // namespace mfctrl
