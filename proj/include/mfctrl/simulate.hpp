#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mfctrl/density.hpp"
#include "mfctrl/feedback.hpp"
#include "mfctrl/graph.hpp"

namespace mfctrl {

constexpr double default_sim_dt = 0.01;

// splitmix64: tiny deterministic 64-bit generator, one value per call.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Population path of an N-agent discrete-time approximation of the chain.
struct AgentTrace {
    int N = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::string law_name;
    std::string rng_name = "splitmix64";
    std::vector<Eigen::VectorXi> populations;          // per step, length M, sums to N
    std::vector<std::vector<std::uint8_t>> agents;     // optional: [step][agent] = vertex (1-based)

    int steps() const { return static_cast<int>(populations.size()) - 1; }
    double horizon() const { return steps() * dt; }
    bool has_agents() const { return !agents.empty(); }
};

// Synchronous per-step update: rates are evaluated once per edge from the
// pre-step populations (empty sources skipped), then every agent at v picks
// one outgoing edge with probability rate*dt or stays.  If any occupied
// vertex has dt * (exit rate sum) > 0.5 the run restarts with dt halved.
AgentTrace simulate_agents(const Graph& g, const FeedbackLaw& law,
                           const Eigen::VectorXi& counts0, double dt, double T,
                           std::uint64_t seed, bool record_agents = false);

AgentTrace simulate_agents(const Graph& g, const ControlSchedule& sched,
                           const Eigen::VectorXi& counts0, double dt, double T,
                           std::uint64_t seed, bool record_agents = false);

Density empirical_density(const AgentTrace& trace, double t);

// Per-agent state-change counts within [t_a, t_b]; requires recorded agents.
std::vector<int> switch_counts(const AgentTrace& trace, double t_a, double t_b);

// Across-run moments of the empirical densities on the shared grid.
struct EnsembleStats {
    int runs = 0;
    double dt = 0.0;
    std::vector<Eigen::VectorXd> mean;      // per step
    std::vector<Eigen::VectorXd> variance;  // per step, per vertex
};
EnsembleStats ensemble(const Graph& g, const FeedbackLaw& law,
                       const Eigen::VectorXi& counts0, double dt, double T,
                       int runs, std::uint64_t seed0, int threads = 1);

// Same with one explicit seed per run (at least two).
EnsembleStats ensemble(const Graph& g, const FeedbackLaw& law,
                       const Eigen::VectorXi& counts0, double dt, double T,
                       const std::vector<std::uint64_t>& seeds, int threads = 1);

// Within-run variance of the empirical densities over [t_a, t_b], averaged
// over vertices (steady-state fluctuation size of one trace).
double window_density_variance(const AgentTrace& trace, double t_a, double t_b);

// Thread cap from MFCTRL_THREADS (defaults to 1).
int thread_cap_from_env();

} // namespace mfctrl
