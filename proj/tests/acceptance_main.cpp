// End-to-end acceptance checks, one criterion per invocation: ./acceptance <n>
// Each criterion prints "criterion n: PASS" or "criterion n: FAIL" and the
// process exits 0/1.  Failed sub-checks are listed as [FAIL] lines with the
// measured values so a red criterion documents itself.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfctrl/density.hpp"
#include "mfctrl/dynamics.hpp"
#include "mfctrl/feedback.hpp"
#include "mfctrl/graph.hpp"
#include "mfctrl/simulate.hpp"
#include "mfctrl/steering.hpp"
#include "mfctrl/synthesis.hpp"
#include "test_util.hpp"

namespace {

int g_failures = 0;

// Hard precondition: abort the criterion immediately.
#define REQUIRE(cond, msg)                                                      \
    do {                                                                        \
        if (!(cond)) {                                                          \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg \
                      << "\n";                                                  \
            std::exit(1);                                                       \
        }                                                                       \
    } while (0)

// Soft check: record the failure, keep going so one run reports everything.
#define CHECK(cond, msg)                                                        \
    do {                                                                        \
        if (!(cond)) {                                                          \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg \
                      << "\n";                                                  \
            ++g_failures;                                                       \
        }                                                                       \
    } while (0)

using mfctrl::Density;
using mfctrl::FeedbackLaw;
using mfctrl::Graph;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

Density chain4_x0() { return Density::from({0.7, 0.1, 0.1, 0.1}); }
Density chain4_xeq() { return Density::from({0.1, 0.1, 0.1, 0.7}); }

// Case 1: time-invariant rates that make xeq invariant.
FeedbackLaw case1_law(const Graph& g, const Density& xeq) {
    return mfctrl::constant_law(g, mfctrl::laplacian_rate_matrix(g, xeq).rates);
}

// Case 2: decentralized bilinear law, zero at xeq (signed form).
FeedbackLaw case2_law(const Graph& g, const Density& xeq) {
    return mfctrl::balance_law(g, xeq);
}

// Case 3: structured-LMI gain law about xeq (signed form).
FeedbackLaw case3_law(const Graph& g, const Density& xeq) {
    mfctrl::LinearizedPair lp = mfctrl::linearized_pair(g, xeq);
    mfctrl::EpsilonRegularized er = mfctrl::epsilon_regularize(lp, mfctrl::default_epsilon);
    mfctrl::StructureSpec spec;
    spec.g = &g;
    mfctrl::GainCertificate cert = mfctrl::solve_structured_lmi(er.A_eps, lp.B, spec);
    REQUIRE(cert.feasible, "case 3 synthesis infeasible, margin " << cert.margin);
    return mfctrl::gain_to_feedback(g, cert.feedback_gain(), xeq);
}

Eigen::VectorXi scaled_counts(const Density& x, int N) {
    Eigen::VectorXi c(x.size());
    for (int i = 0; i < x.size(); ++i) c[i] = static_cast<int>(std::llround(x[i] * N));
    REQUIRE(c.sum() == N, "initial counts do not sum to N");
    return c;
}

// ---------------------------------------------------------------- criterion 1+2

// Named pair transfer on the 4-vertex chain plus 200 random interior
// transfers; endpoint errors are exact-product residuals, so the tolerance
// does not depend on T.
void steering_set(double T, double tol_chain, double tol_rand) {
    Graph g = testutil::chain4();
    mfctrl::GlobalSteering gs = mfctrl::global_steer(g, chain4_x0(), chain4_xeq(), T);
    double err = testutil::sup_diff(gs.endpoint_exact, chain4_xeq().vec());
    CHECK(err <= tol_chain,
          "chain transfer T=" << T << ": endpoint error " << err << " > " << tol_chain);
    std::cout << "[ok] chain transfer T=" << T << " endpoint error " << err << "\n";

    testutil::Rng rng(1000);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        int M = rng.randint(2, 6);
        Graph h = testutil::random_sc_graph(rng, M);
        Density a = testutil::random_interior_density(rng, M);
        Density b = testutil::random_interior_density(rng, M);
        mfctrl::GlobalSteering s = mfctrl::global_steer(h, a, b, T);
        double e = testutil::sup_diff(s.endpoint_exact, b.vec());
        worst = std::max(worst, e);
        CHECK(e <= tol_rand, "random transfer " << i << " (M=" << M << ", T=" << T
                                                << "): endpoint error " << e);
    }
    std::cout << "[ok] 200 random transfers T=" << T << " worst error " << worst << "\n";
}

void criterion_1() {
    Timer tm;
    steering_set(1.0, 1e-8, 1e-9);
    double sec = tm.seconds();
    CHECK(sec < 5.0, "runtime " << sec << " s exceeds 5 s");
    std::cout << "[ok] runtime " << sec << " s\n";
}

void criterion_2() {
    for (double T : {1e-2, 1e-4}) steering_set(T, 1e-8, 1e-9);
}

// ------------------------------------------------------------------ criterion 3

void criterion_3() {
    Timer tm;
    testutil::Rng rng(3000);
    for (int i = 0; i < 50; ++i) {
        int M = rng.randint(2, 6);
        Graph g = testutil::random_sc_graph(rng, M);
        Density xeq = testutil::random_interior_density(rng, M);
        mfctrl::Linearization lin = mfctrl::linearization(g, xeq);
        double colsum = lin.G.colwise().sum().cwiseAbs().maxCoeff();
        CHECK(colsum <= 1e-12, "instance " << i << ": column sums " << colsum);
        mfctrl::SpectralCertificate cert = mfctrl::spectral_certificate(lin.G);
        CHECK(cert.zero_multiplicity == 1,
              "instance " << i << ": zero multiplicity " << cert.zero_multiplicity);
        CHECK(cert.spectral_gap < -1e-9,
              "instance " << i << ": spectral gap " << cert.spectral_gap);
    }
    double sec = tm.seconds();
    CHECK(sec < 10.0, "runtime " << sec << " s exceeds 10 s");
    std::cout << "[ok] 50 certificates, runtime " << sec << " s\n";
}

// ------------------------------------------------------------------ criterion 4

void criterion_4() {
    testutil::Rng rng(4000);

    // vector-field equality at 100 random interior points
    double worst_field = 0.0;
    for (int i = 0; i < 100; ++i) {
        int M = rng.randint(2, 6);
        Graph g = testutil::random_bidirected_graph(rng, M);
        Density xeq = testutil::random_interior_density(rng, M);
        FeedbackLaw k = mfctrl::balance_law(g, xeq);
        FeedbackLaw c = mfctrl::rational_realization(g, k);
        Eigen::VectorXd y = testutil::random_interior_density(rng, M).vec();
        Eigen::VectorXd fk = Eigen::VectorXd::Zero(M), fc = Eigen::VectorXd::Zero(M);
        for (int e = 0; e < g.edge_count(); ++e) {
            const mfctrl::Edge& ed = g.edge(e);
            double rk = k.rate_at(g, e, y) * y[ed.s - 1];
            double rc = c.rate_at(g, e, y) * y[ed.s - 1];
            fk[ed.s - 1] -= rk; fk[ed.t - 1] += rk;
            fc[ed.s - 1] -= rc; fc[ed.t - 1] += rc;
        }
        double d = (fk - fc).cwiseAbs().maxCoeff();
        worst_field = std::max(worst_field, d);
        CHECK(d <= 1e-12, "point " << i << ": field mismatch " << d);
    }
    std::cout << "[ok] 100 field comparisons, worst mismatch " << worst_field << "\n";

    // trajectory agreement and rate nonnegativity on [0, 20]
    std::vector<double> grid = mfctrl::uniform_grid(0.0, 20.0, 200);
    double worst_traj = 0.0, min_rate = 0.0;
    for (int i = 0; i < 10; ++i) {
        int M = rng.randint(2, 6);
        Graph g = testutil::random_bidirected_graph(rng, M);
        Density xeq = testutil::random_interior_density(rng, M);
        Density x0 = testutil::random_interior_density(rng, M);
        FeedbackLaw k = mfctrl::balance_law(g, xeq);
        FeedbackLaw c = mfctrl::rational_realization(g, k);
        mfctrl::Trajectory tk = mfctrl::closed_loop_flow(g, k, x0, grid);
        mfctrl::Trajectory tc = mfctrl::closed_loop_flow(g, c, x0, grid);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            worst_traj = std::max(worst_traj, testutil::sup_diff(tk.states[j], tc.states[j]));
            min_rate = std::min(min_rate, c.rates_at(g, tc.states[j]).minCoeff());
        }
    }
    CHECK(worst_traj <= 1e-6, "trajectory mismatch " << worst_traj);
    CHECK(min_rate >= 0.0, "negative realized rate " << min_rate);
    std::cout << "[ok] 10 trajectory pairs, worst gap " << worst_traj
              << ", min realized rate " << min_rate << "\n";
}

// ------------------------------------------------------------------ criterion 5

void synth_one(const Graph& g, const Density& xeq, const std::string& label) {
    mfctrl::LinearizedPair lp = mfctrl::linearized_pair(g, xeq);
    mfctrl::EpsilonRegularized er = mfctrl::epsilon_regularize(lp, mfctrl::default_epsilon);
    mfctrl::StructureSpec spec;
    spec.g = &g;
    try {
        mfctrl::GainCertificate cert = mfctrl::solve_structured_lmi(er.A_eps, lp.B, spec);
        CHECK(cert.feasible && cert.margin <= -1e-6,
              label << ": margin " << cert.margin << " not <= -1e-6");
        bool rel = mfctrl::spectrum_relation_check(lp.A, lp.B, er.A_eps,
                                                   cert.feedback_gain(), cert.eps);
        CHECK(rel, label << ": spectrum relation failed");
    } catch (const mfctrl::SynthesisInfeasible& ex) {
        CHECK(false, label << ": infeasible, best margin " << ex.best_margin);
    }
}

void criterion_5() {
    Timer tm;
    synth_one(testutil::chain4(), chain4_xeq(), "chain");
    synth_one(testutil::grid9(),
              Density::from({0.04, 0.04, 0.04, 0.25, 0.25, 0.26, 0.04, 0.04, 0.04}), "grid");
    testutil::Rng rng(5000);
    for (int i = 0; i < 25; ++i) {
        int M = rng.randint(2, 6);
        Graph g = testutil::random_sc_graph(rng, M);
        Density xeq = testutil::random_interior_density(rng, M);
        synth_one(g, xeq, "random " + std::to_string(i));
    }
    double sec = tm.seconds();
    CHECK(sec < 30.0, "runtime " << sec << " s exceeds 30 s");
    std::cout << "[ok] 27 syntheses, runtime " << sec << " s\n";
}

// ------------------------------------------------------------------ criterion 6

void criterion_6() {
    Graph g = testutil::chain4();
    Density x0 = chain4_x0(), xeq = chain4_xeq();
    std::vector<double> grid = mfctrl::uniform_grid(0.0, 50.0, 5000);

    FeedbackLaw laws[2] = {case2_law(g, xeq), case3_law(g, xeq)};
    const char* names[2] = {"case 2", "case 3"};
    for (int c = 0; c < 2; ++c) {
        mfctrl::Trajectory tr = mfctrl::closed_loop_flow(g, laws[c], x0, grid);
        double err = testutil::sup_diff(tr.back(), xeq.vec());
        CHECK(err <= 1e-3, names[c] << " mean-field |x(50) - xeq| = " << err << " > 1e-3");
        std::cout << "[" << (err <= 1e-3 ? "ok" : "--") << "] " << names[c]
                  << " mean-field error at T=50: " << err << "\n";
        if (c == 0 && err > 1e-3) {
            // informational: the law converges, but its linearization gap at
            // this target (-0.00924) makes T=50 roughly an order of magnitude
            // too short for a 1e-3 error
            mfctrl::Trajectory lg =
                mfctrl::closed_loop_flow(g, laws[c], x0, mfctrl::uniform_grid(0.0, 800.0, 800));
            std::cout << "[..] case 2 mean-field error at T=800: "
                      << testutil::sup_diff(lg.back(), xeq.vec()) << "\n";
        }
    }

    const int N = 500;
    Eigen::VectorXi counts0 = scaled_counts(x0, N);
    for (int c = 0; c < 2; ++c) {
        FeedbackLaw law = mfctrl::rational_realization(g, laws[c]);
        int hits = 0;
        double worst = 0.0;
        for (int run = 0; run < 20; ++run) {
            std::uint64_t seed = 6000 + 100 * (c + 2) + run;
            mfctrl::AgentTrace tr = mfctrl::simulate_agents(g, law, counts0, 0.01, 50.0, seed);
            double err = testutil::sup_diff(
                tr.populations.back().cast<double>() / N, xeq.vec());
            worst = std::max(worst, err);
            if (err <= 0.06) ++hits;
        }
        CHECK(hits >= 18, names[c] << " stochastic N=500: " << hits
                                   << "/20 within 0.06 of xeq (worst " << worst << ")");
        std::cout << "[" << (hits >= 18 ? "ok" : "--") << "] " << names[c]
                  << " stochastic: " << hits << "/20 runs within 0.06, worst " << worst << "\n";
    }
}

// ------------------------------------------------------------------ criterion 7

void criterion_7() {
    Timer tm;
    Graph g = testutil::chain4();
    Density x0 = chain4_x0(), xeq = chain4_xeq();
    const int N = 50;
    const double T = 50.0;
    Eigen::VectorXi counts0 = scaled_counts(x0, N);

    FeedbackLaw laws[3] = {case1_law(g, xeq),
                           mfctrl::rational_realization(g, case2_law(g, xeq)),
                           mfctrl::rational_realization(g, case3_law(g, xeq))};
    const char* names[3] = {"case 1", "case 2", "case 3"};
    for (int c = 0; c < 3; ++c) {
        int positive = 0, zero = 0, lo = -1, hi = -1;
        for (int run = 0; run < 20; ++run) {
            std::uint64_t seed = 7000 + 100 * (c + 1) + run;
            mfctrl::AgentTrace tr =
                mfctrl::simulate_agents(g, laws[c], counts0, 0.01, T, seed, true);
            std::vector<int> sw = mfctrl::switch_counts(tr, 0.8 * T, T);
            int total = 0;
            for (int s : sw) total += s;
            if (total > 0) ++positive; else ++zero;
            lo = (lo < 0) ? total : std::min(lo, total);
            hi = std::max(hi, total);
        }
        std::cout << "[..] " << names[c] << " window switch totals in [" << lo << ", " << hi
                  << "]; positive " << positive << "/20, zero " << zero << "/20\n";
        if (c == 0)
            CHECK(positive >= 19, "case 1: switching died out in " << (20 - positive) << " runs");
        else
            CHECK(zero >= 18, names[c] << ": switching persisted, only " << zero
                                       << "/20 runs with zero switches in [40,50]");
    }
    double sec = tm.seconds();
    CHECK(sec < 60.0, "runtime " << sec << " s exceeds 60 s");
    std::cout << "[ok] runtime " << sec << " s\n";
}

// ------------------------------------------------------------------ criterion 8

// within-run variance of the empirical densities over [0.8T, T], averaged
// over vertices, then over 20 seeded runs
double steady_variance(const Graph& g, const FeedbackLaw& law, const Eigen::VectorXi& counts0,
                       std::uint64_t seed0) {
    const double T = 10.0;
    double acc = 0.0;
    for (int run = 0; run < 20; ++run) {
        mfctrl::AgentTrace tr = mfctrl::simulate_agents(g, law, counts0, 0.01, T, seed0 + run);
        acc += mfctrl::window_density_variance(tr, 0.8 * T, T);
    }
    return acc / 20.0;
}

void criterion_8() {
    Graph g = testutil::chain4();
    Density x0 = chain4_x0(), xeq = chain4_xeq();
    FeedbackLaw law1 = case1_law(g, xeq);
    FeedbackLaw law2 = mfctrl::rational_realization(g, case2_law(g, xeq));

    double v1_small = steady_variance(g, law1, scaled_counts(xeq, 50), 8100);
    double v1_large = steady_variance(g, law1, scaled_counts(xeq, 500), 8200);
    double ratio = v1_small / v1_large;
    CHECK(ratio >= 5.0 && ratio <= 20.0,
          "case 1 variance ratio N=50/N=500 is " << ratio << ", outside [5, 20]");
    std::cout << "[ok] case 1 steady variance: N=50 " << v1_small << ", N=500 " << v1_large
              << ", ratio " << ratio << "\n";

    double v2_small = steady_variance(g, law2, scaled_counts(x0, 50), 8300);
    CHECK(v2_small < v1_small, "case 2 N=50 variance " << v2_small
                                                       << " not below case 1 " << v1_small);
    std::cout << "[ok] case 2 N=50 steady variance " << v2_small << "\n";
}

// ------------------------------------------------------------------ criterion 9

void criterion_9() {
    testutil::Rng rng(9000);
    for (int i = 0; i < 50; ++i) {
        int K = rng.randint(1, 4);
        std::vector<double> bp{0.0};
        for (int j = 1; j < K; ++j) bp.push_back(rng.uniform());
        std::sort(bp.begin(), bp.end());
        bp.push_back(1.0);
        std::vector<double> u12(K), u21(K);
        for (int j = 0; j < K; ++j) {
            u12[j] = 8.0 * rng.uniform();
            u21[j] = 8.0 * rng.uniform();
        }
        Density x0 = testutil::random_interior_density(rng, 2);
        mfctrl::BoundaryBound bb = mfctrl::boundary_bound_check(bp, u12, u21, x0);
        CHECK(bb.ok, "pair " << i << ": x1(1) = " << bb.lhs << " below bound " << bb.rhs);
    }
    std::cout << "[ok] 50 random rate pairs respect the decay bound\n";
}

// ----------------------------------------------------------------- criterion 10

void criterion_10() {
    testutil::Rng rng(10000);
    int built = 0, attempts = 0;
    while (built < 50) {
        REQUIRE(++attempts < 5000, "could not sample 50 non-strongly-connected graphs");
        int M = rng.randint(3, 7);
        Graph g = testutil::random_graph(rng, M, 0.3);
        auto wit = mfctrl::nonconnectivity_witness(g);
        if (!wit) continue;
        ++built;
        const auto& [V1, V2] = *wit;
        auto phi = [&](const Eigen::VectorXd& x) {
            double s = 0.0;
            for (int v : V2) s += x[v - 1];
            for (int v : V1) s -= x[v - 1];
            return s;
        };
        for (int t = 0; t < 10; ++t) {
            int K = rng.randint(1, 3);
            mfctrl::ControlSchedule sched;
            sched.breakpoints.push_back(0.0);
            for (int j = 1; j < K; ++j) sched.breakpoints.push_back(rng.uniform());
            std::sort(sched.breakpoints.begin(), sched.breakpoints.end());
            sched.breakpoints.push_back(1.0);
            for (int j = 0; j < K; ++j) {
                Eigen::VectorXd u(g.edge_count());
                for (int e = 0; e < g.edge_count(); ++e) u[e] = 5.0 * rng.uniform();
                sched.rates.push_back(u);
            }
            sched.validate();
            Density x0 = testutil::random_interior_density(rng, M);
            mfctrl::Trajectory tr =
                mfctrl::forward_flow(g, sched, x0, mfctrl::uniform_grid(0.0, 1.0, 100));
            for (std::size_t j = 1; j < tr.states.size(); ++j)
                CHECK(phi(tr.states[j]) >= phi(tr.states[j - 1]) - 1e-10,
                      "graph " << built << " trajectory " << t << ": witness functional dropped by "
                               << (phi(tr.states[j - 1]) - phi(tr.states[j])));
        }
    }
    std::cout << "[ok] 50 witnesses monotone along 10 trajectories each\n";
}

} // namespace

int main(int argc, char** argv) {
    REQUIRE(argc == 2, "usage: acceptance <criterion 1..10>");
    int n = std::atoi(argv[1]);
    REQUIRE(n >= 1 && n <= 10, "criterion index out of range: " << argv[1]);

    void (*criteria[10])() = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                              criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
    criteria[n - 1]();

    std::cout << "criterion " << n << ": " << (g_failures == 0 ? "PASS" : "FAIL") << "\n";
    return g_failures == 0 ? 0 : 1;
}
