#include "doctest.h"

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mfctrl/dynamics.hpp"
#include "mfctrl/feedback.hpp"
#include "mfctrl/graph.hpp"
#include "mfctrl/io.hpp"
#include "mfctrl/simulate.hpp"
#include "mfctrl/steering.hpp"
#include "mfctrl/synthesis.hpp"
#include "test_util.hpp"

using namespace mfctrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("mfctrl_io_test_" + std::to_string(++counter));
        std::error_code ec;
        fs::remove_all(dir, ec);
        fs::create_directories(dir);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(dir, ec); }
    fs::path operator/(const char* name) const { return dir / name; }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

} // namespace

TEST_CASE("graph json round trip") {
    TempDir tmp;
    Graph g = testutil::chain4();
    io::save_graph(g, tmp / "g.json");
    Graph h = io::load_graph(tmp / "g.json");
    REQUIRE(h.vertex_count() == 4);
    REQUIRE(h.edge_count() == 6);
    for (int e = 0; e < 6; ++e) {
        CHECK(h.edge(e).s == g.edge(e).s);
        CHECK(h.edge(e).t == g.edge(e).t);
    }

    Graph k = io::graph_from_json_text("{\"M\": 2, \"edges\": [[1,2],[2,1]]}");
    CHECK(k.vertex_count() == 2);
    CHECK(k.bidirected());
}

TEST_CASE("graph json rejects malformed input") {
    TempDir tmp;
    CHECK_THROWS(io::load_graph(tmp / "missing.json"));
    CHECK_THROWS(io::graph_from_json_text("not json at all"));
    CHECK_THROWS(io::graph_from_json_text("{\"M\": 2}"));
    CHECK_THROWS(io::graph_from_json_text("{\"M\": 2, \"edges\": [[1,1]]}"));
    CHECK_THROWS(io::graph_from_json_text("{\"M\": 2, \"edges\": [[1,2],[1,2]]}"));
}

TEST_CASE("trajectory csv round trip keeps 12 significant digits") {
    TempDir tmp;
    Graph g = testutil::cycle2();
    Eigen::VectorXd u(2);
    u << 1.0, 0.3;
    ControlSchedule sched = ControlSchedule::constant(u, 2.0);
    Trajectory tr = forward_flow(g, sched, Density::from({0.6, 0.4}), uniform_grid(0.0, 2.0, 25));
    io::save_trajectory(tr, tmp / "traj.csv");
    Trajectory back = io::load_trajectory(tmp / "traj.csv");
    REQUIRE(back.times.size() == tr.times.size());
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        CHECK(std::abs(back.times[i] - tr.times[i]) <= 1e-11 * std::max(1.0, tr.times[i]));
        CHECK(testutil::sup_diff(back.states[i], tr.states[i]) <= 1e-11);
    }

    std::ifstream in(tmp / "traj.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,x_1,x_2");
}

TEST_CASE("schedule csv round trip") {
    TempDir tmp;
    Graph g = testutil::chain4();
    Density x0 = Density::from({0.3, 0.25, 0.25, 0.2});
    Eigen::VectorXd dx(4);
    dx << 0.01, -0.01, 0.02, -0.02;
    auto [plan, sched] = local_steer(g, x0, dx, 0.5);
    io::save_schedule(sched, tmp / "sched.csv");
    ControlSchedule back = io::load_schedule(tmp / "sched.csv", 6);

    REQUIRE(back.breakpoints.size() == sched.breakpoints.size());
    for (std::size_t i = 0; i < sched.breakpoints.size(); ++i)
        CHECK(std::abs(back.breakpoints[i] - sched.breakpoints[i]) <= 1e-12);
    for (std::size_t i = 0; i < sched.rates.size(); ++i)
        CHECK(testutil::sup_diff(back.rates[i], sched.rates[i]) <= 1e-9);
}

TEST_CASE("schedule csv rejects gaps and bad headers") {
    TempDir tmp;
    write_file(tmp / "gap.csv",
               "t_start,t_end,edge_id,rate\n0,1,0,1.5\n2,3,0,1.0\n");
    CHECK_THROWS(io::load_schedule(tmp / "gap.csv", 2));
    write_file(tmp / "hdr.csv", "a,b,c\n");
    CHECK_THROWS(io::load_schedule(tmp / "hdr.csv", 2));
    write_file(tmp / "edge.csv",
               "t_start,t_end,edge_id,rate\n0,1,7,1.5\n");
    CHECK_THROWS(io::load_schedule(tmp / "edge.csv", 2));
}

TEST_CASE("law json round trips every kind") {
    TempDir tmp;
    Graph g = testutil::chain4();
    Density xeq = Density::from({0.1, 0.1, 0.1, 0.7});
    Eigen::VectorXd y(4);
    y << 0.4, 0.3, 0.2, 0.1;

    auto roundtrip = [&](const FeedbackLaw& law, const char* name) {
        fs::path p = tmp.dir / (std::string(name) + ".json");
        io::save_law(law, p);
        FeedbackLaw back = io::load_law(p);
        CHECK(back.kind == law.kind);
        CHECK(back.base_kind == law.base_kind);
        CHECK(back.name == law.name);
        for (int e = 0; e < g.edge_count(); ++e)
            CHECK(std::abs(back.rate_at(g, e, y) - law.rate_at(g, e, y)) <= 1e-12);
    };

    roundtrip(constant_law(g, Eigen::VectorXd::LinSpaced(6, 0.0, 2.5)), "constant");
    roundtrip(balance_law(g, xeq), "balance");
    roundtrip(rational_realization(g, balance_law(g, xeq)), "realized");

    LinearizedPair p = linearized_pair(g, xeq);
    EpsilonRegularized r = epsilon_regularize(p, 0.1);
    GainCertificate cert = solve_structured_lmi(r.A_eps, p.B, StructureSpec{&g}, 0.1);
    roundtrip(gain_to_feedback(g, cert.feedback_gain(), xeq), "gain");

    CHECK_THROWS(io::load_law(tmp / "missing.json"));
}

TEST_CASE("certificate json round trip") {
    TempDir tmp;
    Graph g = testutil::chain4();
    Density xeq = Density::from({0.1, 0.1, 0.1, 0.7});
    LinearizedPair p = linearized_pair(g, xeq);
    EpsilonRegularized r = epsilon_regularize(p, 0.1);
    GainCertificate cert = solve_structured_lmi(r.A_eps, p.B, StructureSpec{&g}, 0.1);

    io::save_certificate(cert, tmp / "cert.json");
    GainCertificate back = io::load_certificate(tmp / "cert.json");
    CHECK(testutil::sup_diff(back.P_diag, cert.P_diag) <= 1e-12);
    CHECK(testutil::sup_diff(back.Z, cert.Z) <= 1e-12);
    CHECK(testutil::sup_diff(back.K, cert.K) <= 1e-12);
    CHECK(back.eps == cert.eps);
    CHECK(std::abs(back.margin - cert.margin) <= 1e-12);
    CHECK(back.iterations == cert.iterations);
    CHECK(back.feasible == cert.feasible);
    // sparsity survives the round trip exactly
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        for (int c = 0; c < 4; ++c)
            if (c != ed.s - 1 && c != ed.t - 1) CHECK(back.Z(e, c) == 0.0);
    }
}

TEST_CASE("trace round trip with and without agents") {
    TempDir tmp;
    Graph g = testutil::chain4();
    Density xeq = Density::from({0.1, 0.1, 0.1, 0.7});
    FeedbackLaw real = rational_realization(g, balance_law(g, xeq));
    Eigen::VectorXi n0(4);
    n0 << 20, 10, 10, 10;
    AgentTrace tr = simulate_agents(g, real, n0, 0.01, 0.5, 77, true);

    io::save_trace(tr, tmp / "trace.csv", true);
    AgentTrace back = io::load_trace(tmp / "trace.csv");
    CHECK(back.N == tr.N);
    CHECK(back.seed == tr.seed);
    CHECK(back.dt == doctest::Approx(tr.dt).epsilon(1e-12));
    CHECK(back.law_name == tr.law_name);
    CHECK(back.rng_name == tr.rng_name);
    REQUIRE(back.populations.size() == tr.populations.size());
    for (std::size_t i = 0; i < tr.populations.size(); ++i)
        CHECK(back.populations[i] == tr.populations[i]);
    REQUIRE(back.has_agents());
    CHECK(back.agents == tr.agents);

    io::save_trace(tr, tmp / "bare.csv", false);
    AgentTrace bare = io::load_trace(tmp / "bare.csv");
    CHECK_FALSE(bare.has_agents());
    for (std::size_t i = 0; i < tr.populations.size(); ++i)
        CHECK(bare.populations[i] == tr.populations[i]);

    CHECK_THROWS(io::load_trace(tmp / "nothing.csv"));
}

TEST_CASE("significant-digit formatting") {
    CHECK(io::format_sig(0.0) == "0");
    CHECK(io::format_sig(1.0) == "1");
    CHECK(io::format_sig(0.1, 12) == "0.1");
    CHECK(io::format_sig(2.0 / 3.0, 12) == "0.666666666667");
    CHECK(io::format_sig(1.5e-7, 3) == "1.5e-07");
    double x = 0.12345678901234567;
    double y = std::stod(io::format_sig(x, 12));
    CHECK(std::abs(x - y) <= 1e-12);
}
