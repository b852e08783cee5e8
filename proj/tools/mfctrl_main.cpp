// mfctrl: batch front-end for steering synthesis, gain synthesis, and the
// mean-field vs N-agent simulation studies.  Subcommands read a JSON config
// and write CSV/JSON/SVG into the output directory.
//
// Exit codes: 0 success, 2 invalid input or precondition, 3 infeasible
// synthesis, 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mfctrl/dynamics.hpp"
#include "mfctrl/feedback.hpp"
#include "mfctrl/graph.hpp"
#include "mfctrl/io.hpp"
#include "mfctrl/simulate.hpp"
#include "mfctrl/steering.hpp"
#include "mfctrl/svgplot.hpp"
#include "mfctrl/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfctrl;

namespace {

struct Options {
    std::string config;
    std::string out_override;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int runs = 0;
    bool runs_set = false;
};

struct Config {
    json j;
    fs::path dir;   // config file location; relative paths resolve against it
    fs::path out;
};

// input problems exit with code 2 regardless of what the loader throws
template <typename F>
auto as_input(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw std::invalid_argument(e.what());
    }
}

Config load_config(const Options& opt) {
    if (!fs::exists(opt.config))
        throw std::invalid_argument("config file not found: " + opt.config);
    Config c;
    c.j = as_input([&] {
        std::ifstream in(opt.config);
        json j;
        in >> j;
        return j;
    });
    c.dir = fs::path(opt.config).parent_path();
    std::string out = opt.out_override.empty() ? c.j.value("out", std::string{"out"})
                                               : opt.out_override;
    c.out = fs::path(out);
    fs::create_directories(c.out);
    return c;
}

fs::path resolve(const Config& c, const std::string& p) {
    fs::path q(p);
    if (q.is_absolute() || c.dir.empty()) return q;
    return c.dir / q;
}

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("config: missing field ") + key);
    return j.at(key);
}

Density density_field(const json& j, const char* key) {
    const json& a = field(j, key);
    Eigen::VectorXd v(a.size());
    Eigen::Index i = 0;
    for (const auto& x : a) v[i++] = x.get<double>();
    return as_input([&] { return Density(v); });
}

Graph graph_field(const Config& c) {
    fs::path p = resolve(c, field(c.j, "graph").get<std::string>());
    if (!fs::exists(p)) throw std::invalid_argument("graph file not found: " + p.string());
    return as_input([&] { return io::load_graph(p); });
}

std::string witness_text(const Graph& g) {
    auto w = nonconnectivity_witness(g);
    if (!w) return {};
    std::ostringstream ss;
    ss << "V1 = {";
    for (std::size_t i = 0; i < w->first.size(); ++i) ss << (i ? " " : "") << w->first[i];
    ss << "}, V2 = {";
    for (std::size_t i = 0; i < w->second.size(); ++i) ss << (i ? " " : "") << w->second[i];
    ss << "}";
    return ss.str();
}

json vec_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

// ----------------------------------------------------------------- steer

int cmd_steer(const Options& opt) {
    Config c = load_config(opt);
    Graph g = graph_field(c);
    Density x0 = density_field(c.j, "x0");
    Density xT = density_field(c.j, "xeq");
    double T = c.j.value("T", 1.0);

    json report;
    Eigen::VectorXd endpoint_vec;
    if ((xT.vec() - x0.vec()).cwiseAbs().maxCoeff() == 0.0) {
        ControlSchedule zero = ControlSchedule::constant(Eigen::VectorXd::Zero(g.edge_count()), T);
        io::save_schedule(zero, c.out / "schedule.csv");
        endpoint_vec = x0.vec();
        report["segments"] = 0;
        report["intervals"] = 1;
    } else {
        GlobalSteering gs = global_steer(g, x0, xT, T);
        io::save_schedule(gs.schedule, c.out / "schedule.csv");
        endpoint_vec = gs.endpoint_exact;
        report["segments"] = gs.segments;
        report["intervals"] = gs.schedule.rates.size();
    }
    double err = (endpoint_vec - xT.vec()).cwiseAbs().maxCoeff();
    report["endpoint"] = vec_json(endpoint_vec);
    report["target"] = vec_json(xT.vec());
    report["endpoint_error_sup"] = err;
    report["T"] = T;
    std::ofstream(c.out / "steer_report.json") << report.dump(2) << "\n";

    std::cout << "steer: " << report["intervals"] << " intervals over " << report["segments"]
              << " segments, endpoint error " << io::format_sig(err, 3) << "\n";
    std::cout << "wrote " << (c.out / "schedule.csv").string() << "\n";
    return 0;
}

// ----------------------------------------------------------------- synth

int cmd_synth(const Options& opt) {
    Config c = load_config(opt);
    Graph g = graph_field(c);
    Density xeq = density_field(c.j, "xeq");
    double eps = c.j.value("eps", default_epsilon);
    double tol_margin = c.j.value("tol_margin", default_tol_margin);

    if (!is_strongly_connected(g))
        throw std::invalid_argument("graph is not strongly connected; no equilibrium is "
                                    "stabilizable across the cut " + witness_text(g));

    LinearizedPair lp = linearized_pair(g, xeq);
    EpsilonRegularized er = epsilon_regularize(lp, eps);
    StructureSpec spec{&g};
    GainCertificate cert = solve_structured_lmi(er.A_eps, lp.B, spec, eps, tol_margin);

    Eigen::MatrixXd F = cert.feedback_gain();
    bool spectrum_ok = spectrum_relation_check(lp.A, lp.B, er.A_eps, F, eps);
    FeedbackLaw law = gain_to_feedback(g, F, xeq);
    if (g.bidirected()) law = rational_realization(g, law);

    io::save_certificate(cert, c.out / "certificate.json");
    io::save_law(law, c.out / "law.json");

    std::cout << "synth: margin " << io::format_sig(cert.margin, 6) << " after "
              << cert.iterations << " newton steps, spectrum relation "
              << (spectrum_ok ? "ok" : "MISMATCH") << "\n";
    std::cout << "wrote " << (c.out / "certificate.json").string() << " and "
              << (c.out / "law.json").string() << " (" << law.name << ")\n";
    return 0;
}

// -------------------------------------------------------------- simulate

struct CaseLaws {
    FeedbackLaw ode;        // signed law for the mean-field flow
    FeedbackLaw agents;     // nonnegative law for the agent simulation
    std::optional<double> margin;
};

CaseLaws build_case(const Config& c, const Graph& g, const Density& xeq) {
    std::string cs = field(c.j, "case").get<std::string>();
    CaseLaws out;
    if (cs == "case1-laplacian") {
        LaplacianRates lr = laplacian_rate_matrix(g, xeq);
        out.ode = constant_law(g, lr.rates);
        out.agents = out.ode;
    } else if (cs == "case2-balance") {
        out.ode = balance_law(g, xeq);
        out.agents = rational_realization(g, out.ode);
    } else if (cs == "case3-lmi") {
        double eps = c.j.value("eps", default_epsilon);
        double tol_margin = c.j.value("tol_margin", default_tol_margin);
        if (!is_strongly_connected(g))
            throw std::invalid_argument("graph is not strongly connected: " + witness_text(g));
        LinearizedPair lp = linearized_pair(g, xeq);
        EpsilonRegularized er = epsilon_regularize(lp, eps);
        StructureSpec spec{&g};
        GainCertificate cert = solve_structured_lmi(er.A_eps, lp.B, spec, eps, tol_margin);
        out.ode = gain_to_feedback(g, cert.feedback_gain(), xeq);
        out.agents = rational_realization(g, out.ode);
        out.margin = cert.margin;
    } else {
        throw std::invalid_argument("config: unknown case " + cs);
    }
    return out;
}

struct RunSummary {
    std::uint64_t seed = 0;
    double dt_used = 0.0;
    int switch_total = 0;
    double final_deviation = 0.0;
    double window_variance = 0.0;
};

int cmd_simulate(const Options& opt) {
    Config c = load_config(opt);
    Graph g = graph_field(c);
    Density x0 = density_field(c.j, "x0");
    Density xeq = density_field(c.j, "xeq");
    double T = c.j.value("T", 50.0);
    int N = c.j.value("N", 50);
    double dt = c.j.value("dt", default_sim_dt);
    int runs = opt.runs_set ? opt.runs : c.j.value("runs", 1);
    std::uint64_t seed0 = opt.seed_set ? opt.seed : c.j.value("seed", std::uint64_t{12345});
    if (runs < 1) throw std::invalid_argument("config: runs must be >= 1");
    if (N < 1) throw std::invalid_argument("config: N must be >= 1");
    std::string cs = field(c.j, "case").get<std::string>();

    // initial counts: largest-remainder rounding of N x0
    Eigen::VectorXi counts0(g.vertex_count());
    {
        Eigen::VectorXd exact = x0.vec() * N;
        long long total = 0;
        std::vector<std::pair<double, int>> rem;
        for (int v = 0; v < g.vertex_count(); ++v) {
            counts0[v] = static_cast<int>(std::floor(exact[v]));
            total += counts0[v];
            rem.push_back({exact[v] - std::floor(exact[v]), v});
        }
        std::stable_sort(rem.begin(), rem.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (long long k = 0; k < N - total; ++k) ++counts0[rem[static_cast<std::size_t>(k)].second];
    }

    // mean-field side
    const int plot_n = std::min(2000, std::max(200, static_cast<int>(T / 0.05)));
    std::vector<double> grid = uniform_grid(0.0, T, plot_n);
    Trajectory mf;
    std::optional<double> margin;
    std::string agent_law_name;
    std::function<AgentTrace(std::uint64_t, bool)> run_one;
    if (cs == "custom-schedule") {
        fs::path sp = resolve(c, field(c.j, "schedule").get<std::string>());
        if (!fs::exists(sp)) throw std::invalid_argument("schedule file not found: " + sp.string());
        ControlSchedule sched = as_input([&] { return io::load_schedule(sp, g.edge_count()); });
        if (sched.horizon() < T)
            throw std::invalid_argument("config: schedule shorter than horizon T");
        mf = forward_flow(g, sched, x0, grid);
        run_one = [&g, sched, counts0, dt, T](std::uint64_t seed, bool rec) {
            return simulate_agents(g, sched, counts0, dt, T, seed, rec);
        };
        agent_law_name = "schedule";
    } else {
        CaseLaws laws = build_case(c, g, xeq);
        margin = laws.margin;
        mf = closed_loop_flow(g, laws.ode, x0, grid);
        FeedbackLaw agent_law = laws.agents;
        run_one = [&g, agent_law, counts0, dt, T](std::uint64_t seed, bool rec) {
            return simulate_agents(g, agent_law, counts0, dt, T, seed, rec);
        };
        agent_law_name = laws.agents.name;
    }
    io::save_trajectory(mf, c.out / "mean_field.csv");
    double mf_final_err = (mf.back() - xeq.vec()).cwiseAbs().maxCoeff();

    // stochastic side: every run records agents so switch totals are exact
    const double win_a = 0.8 * T, win_b = T;
    std::vector<RunSummary> rs(static_cast<std::size_t>(runs));
    AgentTrace first;  // kept for the overlay and the single-agent plot
    {
        const int threads = std::max(1, std::min(thread_cap_from_env(), runs));
        std::vector<std::exception_ptr> errs(static_cast<std::size_t>(threads));
        auto worker = [&](int tid) {
            try {
                for (int i = tid; i < runs; i += threads) {
                    AgentTrace tr = run_one(seed0 + static_cast<std::uint64_t>(i), true);
                    RunSummary& r = rs[static_cast<std::size_t>(i)];
                    r.seed = tr.seed;
                    r.dt_used = tr.dt;
                    auto sc = switch_counts(tr, win_a, win_b);
                    r.switch_total = std::accumulate(sc.begin(), sc.end(), 0);
                    r.final_deviation =
                        (empirical_density(tr, tr.horizon()).vec() - xeq.vec()).cwiseAbs().maxCoeff();
                    r.window_variance = window_density_variance(tr, win_a, win_b);
                    std::ostringstream name;
                    name << "trace_run" << i << ".csv";
                    io::save_trace(tr, c.out / name.str(), /*with_agents=*/i == 0);
                    if (i == 0) first = std::move(tr);
                }
            } catch (...) {
                errs[static_cast<std::size_t>(tid)] = std::current_exception();
            }
        };
        if (threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
            for (auto& th : pool) th.join();
        }
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }

    // overlay: thick mean-field lines, thin empirical lines from run 0
    {
        SvgPlot plot("density: mean-field (thick) vs N=" + std::to_string(N) + " empirical (thin)",
                     "t", "density");
        const int M = g.vertex_count();
        std::vector<double> ts(mf.times.begin(), mf.times.end());
        for (int v = 0; v < M; ++v) {
            std::vector<double> ys(mf.states.size());
            for (std::size_t i = 0; i < mf.states.size(); ++i) ys[i] = mf.states[i][v];
            plot.add_series("x_" + std::to_string(v + 1), ts, ys, 2.4);
        }
        const std::size_t stride =
            std::max<std::size_t>(1, first.populations.size() / 1000);
        for (int v = 0; v < M; ++v) {
            std::vector<double> xs, ys;
            for (std::size_t s = 0; s < first.populations.size(); s += stride) {
                xs.push_back(static_cast<double>(s) * first.dt);
                ys.push_back(first.populations[s][v] / static_cast<double>(first.N));
            }
            plot.add_series("", xs, ys, 0.8);
        }
        plot.write((c.out / "overlay.svg").string());
    }

    // single-agent state path (task-switching view)
    if (first.has_agents()) {
        std::vector<double> xs, ys;
        const std::size_t stride = std::max<std::size_t>(1, first.agents.size() / 4000);
        for (std::size_t s = 0; s < first.agents.size(); s += stride) {
            xs.push_back(static_cast<double>(s) * first.dt);
            ys.push_back(first.agents[s][0]);
        }
        SvgPlot plot("agent 0 vertex over time (" + agent_law_name + ")", "t", "vertex");
        plot.add_series("agent 0", xs, ys, 1.2);
        plot.write((c.out / "agent0.svg").string());
    }

    json summary;
    summary["case"] = cs;
    summary["T"] = T;
    summary["N"] = N;
    summary["dt"] = dt;
    summary["runs"] = runs;
    summary["seed0"] = seed0;
    summary["law"] = agent_law_name;
    summary["switch_window"] = {win_a, win_b};
    summary["mean_field_final_error_sup"] = mf_final_err;
    if (margin) summary["synthesis_margin"] = *margin;
    int zero_switch = 0;
    json detail = json::array();
    for (const auto& r : rs) {
        detail.push_back({{"seed", r.seed},
                          {"dt_used", r.dt_used},
                          {"switch_total", r.switch_total},
                          {"final_deviation_sup", r.final_deviation},
                          {"window_variance", r.window_variance}});
        if (r.switch_total == 0) ++zero_switch;
    }
    summary["runs_detail"] = std::move(detail);
    summary["zero_switch_runs"] = zero_switch;
    std::ofstream(c.out / "summary.json") << summary.dump(2) << "\n";

    std::cout << "simulate: case " << cs << ", mean-field final error "
              << io::format_sig(mf_final_err, 3) << ", " << runs << " run(s) of N=" << N << "\n";
    std::cout << "  switch totals over [" << win_a << ", " << win_b << "]:";
    for (const auto& r : rs) std::cout << " " << r.switch_total;
    std::cout << "\n";
    std::cout << "wrote " << (c.out / "summary.json").string() << ", overlay.svg, mean_field.csv, "
              << runs << " trace file(s)\n";
    return 0;
}

// --------------------------------------------------------------- analyze

int cmd_analyze(const Options& opt) {
    Config c = load_config(opt);
    Density xeq = density_field(c.j, "xeq");
    const json& traces = field(c.j, "traces");
    if (!traces.is_array() || traces.empty())
        throw std::invalid_argument("config: traces must be a nonempty array");

    std::optional<Trajectory> mf;
    if (c.j.contains("mean_field")) {
        fs::path p = resolve(c, c.j["mean_field"].get<std::string>());
        if (!fs::exists(p)) throw std::invalid_argument("mean-field file not found: " + p.string());
        mf = as_input([&] { return io::load_trajectory(p); });
    }

    json report;
    report["xeq"] = vec_json(xeq.vec());
    if (mf) {
        json m;
        m["final_error_sup"] = (mf->back() - xeq.vec()).cwiseAbs().maxCoeff();
        try {
            DecayFit fit = decay_fit(*mf, xeq);
            m["decay"] = {{"M0", fit.M0}, {"lambda", fit.lambda}};
        } catch (const std::domain_error& e) {
            m["decay"] = nullptr;
            m["decay_rejected"] = e.what();
        }
        report["mean_field"] = std::move(m);
    }

    json rows = json::array();
    for (const auto& tj : traces) {
        fs::path p = resolve(c, tj.get<std::string>());
        if (!fs::exists(p)) throw std::invalid_argument("trace file not found: " + p.string());
        AgentTrace tr = as_input([&] { return io::load_trace(p); });
        const double horizon = tr.horizon();
        const double a = 0.8 * horizon, b = horizon;

        json row;
        row["file"] = p.string();
        row["N"] = tr.N;
        row["dt"] = tr.dt;
        row["seed"] = tr.seed;
        row["law"] = tr.law_name;
        row["window"] = {a, b};
        row["window_variance"] = window_density_variance(tr, a, b);
        row["final_deviation_sup"] =
            (empirical_density(tr, horizon).vec() - xeq.vec()).cwiseAbs().maxCoeff();
        if (tr.has_agents()) {
            auto sc = switch_counts(tr, a, b);
            row["switch_total"] = std::accumulate(sc.begin(), sc.end(), 0);
        }

        Trajectory emp;
        emp.times.reserve(tr.populations.size());
        emp.states.reserve(tr.populations.size());
        for (std::size_t s = 0; s < tr.populations.size(); ++s) {
            emp.times.push_back(static_cast<double>(s) * tr.dt);
            emp.states.push_back(tr.populations[s].cast<double>() / static_cast<double>(tr.N));
        }
        try {
            DecayFit fit = decay_fit(emp, xeq);
            row["decay"] = {{"M0", fit.M0}, {"lambda", fit.lambda}};
        } catch (const std::domain_error& e) {
            row["decay"] = nullptr;
            row["decay_rejected"] = e.what();
        }

        if (mf) {
            // sup deviation from the mean-field path, linearly interpolated
            double dev = 0.0;
            std::size_t k = 0;
            for (std::size_t s = 0; s < emp.times.size(); ++s) {
                double t = emp.times[s];
                if (t > mf->times.back() + 1e-9) break;
                while (k + 2 < mf->times.size() && mf->times[k + 1] < t) ++k;
                double t0 = mf->times[k], t1 = mf->times[k + 1];
                double w = t1 > t0 ? std::clamp((t - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
                Eigen::VectorXd ref = (1.0 - w) * mf->states[k] + w * mf->states[k + 1];
                dev = std::max(dev, (emp.states[s] - ref).cwiseAbs().maxCoeff());
            }
            row["mean_field_deviation_sup"] = dev;
        }
        rows.push_back(std::move(row));
    }
    report["traces"] = std::move(rows);
    std::ofstream(c.out / "analysis.json") << report.dump(2) << "\n";

    std::cout << "analyze: " << traces.size() << " trace(s)";
    if (mf) std::cout << " + mean-field reference";
    std::cout << "\n";
    for (const auto& row : report["traces"]) {
        std::cout << "  " << row["file"].get<std::string>() << ": window variance "
                  << io::format_sig(row["window_variance"].get<double>(), 3);
        if (row.contains("switch_total")) std::cout << ", switches " << row["switch_total"];
        if (row.contains("mean_field_deviation_sup"))
            std::cout << ", mean-field deviation "
                      << io::format_sig(row["mean_field_deviation_sup"].get<double>(), 3);
        if (row["decay"].is_null())
            std::cout << ", decay fit rejected";
        else
            std::cout << ", decay lambda "
                      << io::format_sig(row["decay"]["lambda"].get<double>(), 4);
        std::cout << "\n";
    }
    std::cout << "wrote " << (c.out / "analysis.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field density control on finite graphs: steering, gain synthesis, "
                 "and N-agent simulation"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON experiment config")->required();
        sub->add_option("--out", opt.out_override, "output directory (overrides config)");
        sub->add_option("--seed", opt.seed, "base RNG seed (overrides config)");
        sub->add_option("--runs", opt.runs, "number of stochastic runs (overrides config)");
    };
    CLI::App* steer = app.add_subcommand("steer", "open-loop schedule steering x0 to xeq");
    CLI::App* synth = app.add_subcommand("synth", "decentralized gain synthesis at xeq");
    CLI::App* simulate = app.add_subcommand("simulate", "mean-field and N-agent simulation");
    CLI::App* analyze = app.add_subcommand("analyze", "statistics report from saved traces");
    for (CLI::App* sub : {steer, synth, simulate, analyze}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    opt.seed_set = app.get_subcommands().front()->count("--seed") > 0;
    opt.runs_set = app.get_subcommands().front()->count("--runs") > 0;

    try {
        if (steer->parsed()) return cmd_steer(opt);
        if (synth->parsed()) return cmd_synth(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        return cmd_analyze(opt);
    } catch (const SynthesisInfeasible& e) {
        std::cerr << "error: " << e.what() << " (best margin " << e.best_margin << ")\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
