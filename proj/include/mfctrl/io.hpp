#pragma once

#include <filesystem>
#include <string>

#include "mfctrl/density.hpp"
#include "mfctrl/feedback.hpp"
#include "mfctrl/graph.hpp"
#include "mfctrl/simulate.hpp"
#include "mfctrl/synthesis.hpp"

namespace mfctrl::io {

// graph JSON: {"M": int, "edges": [[s,t], ...]} with 1-based vertices
Graph load_graph(const std::filesystem::path& file);
void save_graph(const Graph& g, const std::filesystem::path& file);
Graph graph_from_json_text(const std::string& text);

// trajectory CSV: header t,x_1,...,x_M; 12 significant digits
void save_trajectory(const Trajectory& traj, const std::filesystem::path& file);
Trajectory load_trajectory(const std::filesystem::path& file);

// schedule CSV: t_start,t_end,edge_id,rate rows, sorted by interval then edge
void save_schedule(const ControlSchedule& sched, const std::filesystem::path& file);
ControlSchedule load_schedule(const std::filesystem::path& file, int edge_count);

// law JSON: {"kind": ..., "xeq": [...], "gain": [[...]], "rates": [...], "base": ...}
void save_law(const FeedbackLaw& law, const std::filesystem::path& file);
FeedbackLaw load_law(const std::filesystem::path& file);

// certificate JSON: P diagonal, Z entries by (edge_id, column), K dense,
// eps, margin, iterations
void save_certificate(const GainCertificate& cert, const std::filesystem::path& file);
GainCertificate load_certificate(const std::filesystem::path& file);

// trace CSV: t,N_1,...,N_M (+ optional per-agent CSV t,agent_id,vertex) and
// a JSON sidecar with seed, dt, N, rng and law identity
void save_trace(const AgentTrace& trace, const std::filesystem::path& file,
                bool with_agents = false);
AgentTrace load_trace(const std::filesystem::path& file);

std::string format_sig(double x, int digits = 12);

} // namespace mfctrl::io
