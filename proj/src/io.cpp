#include "mfctrl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace mfctrl::io {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("io: cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("io: cannot write " + file.string());
    out << text;
    if (!out) throw std::runtime_error("io: short write to " + file.string());
}

json parse(const std::filesystem::path& file) {
    try {
        return json::parse(read_text(file));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("io: " + file.string() + ": " + e.what());
    }
}

Eigen::VectorXd vector_from(const json& a) {
    Eigen::VectorXd v(a.size());
    Eigen::Index i = 0;
    for (const auto& x : a) v[i++] = x.get<double>();
    return v;
}

json vector_to(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

// split one CSV line on commas; no quoting, the formats here never need it
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file,
                                               const std::string& expect_header) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("io: cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("io: empty file " + file.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expect_header)
        throw std::runtime_error("io: unexpected header in " + file.string() + ": " + line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_csv(line));
    }
    return rows;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("io: bad number: " + s);
    return v;
}

} // namespace

std::string format_sig(double x, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

Graph graph_from_json_text(const std::string& text) {
    json j = json::parse(text);
    int M = j.at("M").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) {
        if (e.size() != 2) throw std::runtime_error("io: edge needs two endpoints");
        edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return Graph::build(M, edges);
}

Graph load_graph(const std::filesystem::path& file) {
    try {
        return graph_from_json_text(read_text(file));
    } catch (const json::exception& e) {
        throw std::runtime_error("io: " + file.string() + ": " + e.what());
    }
}

void save_graph(const Graph& g, const std::filesystem::path& file) {
    json j;
    j["M"] = g.vertex_count();
    j["edges"] = json::array();
    for (const Edge& e : g.edges()) j["edges"].push_back({e.s, e.t});
    write_text(file, j.dump(2) + "\n");
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& file) {
    if (traj.times.size() != traj.states.size() || traj.times.empty())
        throw std::invalid_argument("io: malformed trajectory");
    const Eigen::Index M = traj.states.front().size();
    std::ostringstream out;
    out << "t";
    for (Eigen::Index v = 1; v <= M; ++v) out << ",x_" << v;
    out << "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        out << format_sig(traj.times[i]);
        for (Eigen::Index v = 0; v < M; ++v) out << "," << format_sig(traj.states[i][v]);
        out << "\n";
    }
    write_text(file, out.str());
}

Trajectory load_trajectory(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("io: cannot open " + file.string());
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("io: empty file " + file.string());
    auto cols = split_csv(header);
    if (cols.size() < 2 || cols[0] != "t")
        throw std::runtime_error("io: unexpected header in " + file.string());
    const std::size_t M = cols.size() - 1;
    Trajectory traj;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        if (f.size() != M + 1) throw std::runtime_error("io: ragged row in " + file.string());
        traj.times.push_back(to_double(f[0]));
        Eigen::VectorXd x(static_cast<Eigen::Index>(M));
        for (std::size_t v = 0; v < M; ++v) x[static_cast<Eigen::Index>(v)] = to_double(f[v + 1]);
        traj.states.push_back(std::move(x));
    }
    if (traj.times.empty()) throw std::runtime_error("io: no rows in " + file.string());
    return traj;
}

void save_schedule(const ControlSchedule& sched, const std::filesystem::path& file) {
    sched.validate();
    std::ostringstream out;
    out << "t_start,t_end,edge_id,rate\n";
    for (std::size_t i = 0; i < sched.rates.size(); ++i)
        for (Eigen::Index e = 0; e < sched.rates[i].size(); ++e)
            out << format_sig(sched.breakpoints[i]) << "," << format_sig(sched.breakpoints[i + 1])
                << "," << e << "," << format_sig(sched.rates[i][e]) << "\n";
    write_text(file, out.str());
}

ControlSchedule load_schedule(const std::filesystem::path& file, int edge_count) {
    auto rows = read_csv(file, "t_start,t_end,edge_id,rate");
    ControlSchedule sched;
    for (const auto& f : rows) {
        if (f.size() != 4) throw std::runtime_error("io: ragged row in " + file.string());
        double a = to_double(f[0]), b = to_double(f[1]);
        int e = static_cast<int>(to_double(f[2]));
        if (e < 0 || e >= edge_count) throw std::runtime_error("io: edge id out of range");
        if (sched.breakpoints.empty()) {
            sched.breakpoints.push_back(a);
            sched.breakpoints.push_back(b);
            sched.rates.emplace_back(Eigen::VectorXd::Zero(edge_count));
        } else if (a != sched.breakpoints[sched.breakpoints.size() - 2] ||
                   b != sched.breakpoints.back()) {
            if (a != sched.breakpoints.back())
                throw std::runtime_error("io: schedule intervals not contiguous");
            sched.breakpoints.push_back(b);
            sched.rates.emplace_back(Eigen::VectorXd::Zero(edge_count));
        }
        sched.rates.back()[e] = to_double(f[3]);
    }
    sched.validate();
    return sched;
}

void save_law(const FeedbackLaw& law, const std::filesystem::path& file) {
    json j;
    j["kind"] = FeedbackLaw::kind_name(law.kind);
    j["base"] = FeedbackLaw::kind_name(law.base_kind);
    j["name"] = law.name;
    if (law.xeq.size()) j["xeq"] = vector_to(law.xeq);
    if (law.const_rates.size()) j["rates"] = vector_to(law.const_rates);
    if (law.gain.size()) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < law.gain.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < law.gain.cols(); ++c) row.push_back(law.gain(r, c));
            rows.push_back(std::move(row));
        }
        j["gain"] = std::move(rows);
    }
    write_text(file, j.dump(2) + "\n");
}

FeedbackLaw load_law(const std::filesystem::path& file) {
    json j = parse(file);
    FeedbackLaw law;
    law.kind = FeedbackLaw::kind_from_name(j.at("kind").get<std::string>());
    law.base_kind = FeedbackLaw::kind_from_name(j.value("base", j.at("kind").get<std::string>()));
    law.name = j.value("name", std::string{});
    if (j.contains("xeq")) law.xeq = vector_from(j["xeq"]);
    if (j.contains("rates")) law.const_rates = vector_from(j["rates"]);
    if (j.contains("gain")) {
        const auto& rows = j["gain"];
        if (!rows.empty()) {
            law.gain.resize(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(rows[0].size()));
            for (Eigen::Index r = 0; r < law.gain.rows(); ++r)
                for (Eigen::Index c = 0; c < law.gain.cols(); ++c)
                    law.gain(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                                         .get<double>();
        }
    }
    return law;
}

void save_certificate(const GainCertificate& cert, const std::filesystem::path& file) {
    json j;
    j["P"] = vector_to(cert.P_diag);
    j["Z"] = json::array();
    for (Eigen::Index e = 0; e < cert.Z.rows(); ++e)
        for (Eigen::Index c = 0; c < cert.Z.cols(); ++c)
            if (cert.Z(e, c) != 0.0)
                j["Z"].push_back({{"edge", e}, {"col", c}, {"value", cert.Z(e, c)}});
    j["K"] = json::array();
    for (Eigen::Index r = 0; r < cert.K.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < cert.K.cols(); ++c) row.push_back(cert.K(r, c));
        j["K"].push_back(std::move(row));
    }
    j["eps"] = cert.eps;
    j["margin"] = cert.margin;
    j["iterations"] = cert.iterations;
    j["feasible"] = cert.feasible;
    write_text(file, j.dump(2) + "\n");
}

GainCertificate load_certificate(const std::filesystem::path& file) {
    json j = parse(file);
    GainCertificate cert;
    cert.P_diag = vector_from(j.at("P"));
    const Eigen::Index M = cert.P_diag.size();
    const auto& K = j.at("K");
    cert.K.resize(static_cast<Eigen::Index>(K.size()), M);
    for (Eigen::Index r = 0; r < cert.K.rows(); ++r)
        for (Eigen::Index c = 0; c < M; ++c)
            cert.K(r, c) = K[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    cert.Z = Eigen::MatrixXd::Zero(cert.K.rows(), M);
    for (const auto& z : j.at("Z"))
        cert.Z(z.at("edge").get<int>(), z.at("col").get<int>()) = z.at("value").get<double>();
    cert.eps = j.at("eps").get<double>();
    cert.margin = j.at("margin").get<double>();
    cert.iterations = j.value("iterations", 0);
    cert.feasible = j.value("feasible", false);
    return cert;
}

void save_trace(const AgentTrace& trace, const std::filesystem::path& file, bool with_agents) {
    const Eigen::Index M = trace.populations.front().size();
    std::ostringstream out;
    out << "t";
    for (Eigen::Index v = 1; v <= M; ++v) out << ",N_" << v;
    out << "\n";
    for (std::size_t s = 0; s < trace.populations.size(); ++s) {
        out << format_sig(static_cast<double>(s) * trace.dt);
        for (Eigen::Index v = 0; v < M; ++v) out << "," << trace.populations[s][v];
        out << "\n";
    }
    write_text(file, out.str());

    json meta;
    meta["N"] = trace.N;
    meta["dt"] = trace.dt;
    meta["seed"] = trace.seed;
    meta["law"] = trace.law_name;
    meta["rng"] = trace.rng_name;
    meta["steps"] = trace.steps();
    meta["agents_recorded"] = with_agents && trace.has_agents();
    std::filesystem::path side = file;
    side += ".json";
    write_text(side, meta.dump(2) + "\n");

    if (with_agents && trace.has_agents()) {
        std::ostringstream ag;
        ag << "t,agent_id,vertex\n";
        for (std::size_t s = 0; s < trace.agents.size(); ++s)
            for (std::size_t a = 0; a < trace.agents[s].size(); ++a)
                ag << format_sig(static_cast<double>(s) * trace.dt) << "," << a << ","
                   << static_cast<int>(trace.agents[s][a]) << "\n";
        std::filesystem::path agf = file;
        agf += ".agents.csv";
        write_text(agf, ag.str());
    }
}

AgentTrace load_trace(const std::filesystem::path& file) {
    std::filesystem::path side = file;
    side += ".json";
    json meta = parse(side);
    AgentTrace trace;
    trace.N = meta.at("N").get<int>();
    trace.dt = meta.at("dt").get<double>();
    trace.seed = meta.at("seed").get<std::uint64_t>();
    trace.law_name = meta.value("law", std::string{});
    trace.rng_name = meta.value("rng", std::string{"splitmix64"});

    std::ifstream in(file);
    if (!in) throw std::runtime_error("io: cannot open " + file.string());
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("io: empty file " + file.string());
    auto cols = split_csv(header);
    if (cols.size() < 2 || cols[0] != "t")
        throw std::runtime_error("io: unexpected header in " + file.string());
    const std::size_t M = cols.size() - 1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        if (f.size() != M + 1) throw std::runtime_error("io: ragged row in " + file.string());
        Eigen::VectorXi n(static_cast<Eigen::Index>(M));
        for (std::size_t v = 0; v < M; ++v)
            n[static_cast<Eigen::Index>(v)] = static_cast<int>(to_double(f[v + 1]));
        trace.populations.push_back(std::move(n));
    }
    if (trace.populations.empty()) throw std::runtime_error("io: no rows in " + file.string());

    if (meta.value("agents_recorded", false)) {
        std::filesystem::path agf = file;
        agf += ".agents.csv";
        auto rows = read_csv(agf, "t,agent_id,vertex");
        trace.agents.assign(trace.populations.size(),
                            std::vector<std::uint8_t>(static_cast<std::size_t>(trace.N)));
        std::size_t expected = trace.populations.size() * static_cast<std::size_t>(trace.N);
        if (rows.size() != expected) throw std::runtime_error("io: agent row count mismatch");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::size_t s = i / static_cast<std::size_t>(trace.N);
            std::size_t a = static_cast<std::size_t>(to_double(rows[i][1]));
            trace.agents[s][a] = static_cast<std::uint8_t>(to_double(rows[i][2]));
        }
    }
    return trace;
}

} // namespace mfctrl::io
