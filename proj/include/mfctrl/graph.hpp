#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

namespace mfctrl {

// Directed edge between 1-based vertices.
struct Edge {
    int s, t;
};

// Immutable directed graph.  Edges carry stable integer ids in insertion
// order; all schedules and gains index edges by id.
class Graph {
public:
    static Graph build(int M, const std::vector<std::pair<int, int>>& edges);

    int vertex_count() const { return M_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const Edge& edge(int id) const { return edges_[id]; }
    const std::vector<Edge>& edges() const { return edges_; }

    // id of (t,s) for edge (s,t), or -1 when the reverse edge is absent.
    int reverse_edge(int id) const { return rev_[id]; }
    bool bidirected() const;

    // out-edge ids of a 1-based vertex, in insertion order.
    const std::vector<int>& out_edges(int v) const { return out_[v - 1]; }

private:
    int M_ = 0;
    std::vector<Edge> edges_;
    std::vector<int> rev_;
    std::vector<std::vector<int>> out_;
};

bool is_strongly_connected(const Graph& g);

// Disjoint vertex sets (V1, V2) certifying non-connectivity: V1 = vertices
// that can reach v1 (plus v1), V2 = vertices reachable from v2 (plus v2),
// for the lexicographically smallest ordered pair (v1, v2) such that v1 is
// unreachable from v2.  The functional sum_{V2} x - sum_{V1} x is then
// nondecreasing along every trajectory.  Empty when strongly connected.
std::optional<std::pair<std::vector<int>, std::vector<int>>>
nonconnectivity_witness(const Graph& g);

// Same construction for a caller-chosen unreachable pair.
std::pair<std::vector<int>, std::vector<int>>
witness_from_pair(const Graph& g, int v1, int v2);

// Closed walk as an edge-id sequence starting and ending at v0.
struct Walk {
    int v0 = 0;
    std::vector<int> edge_ids;
};

bool walk_is_closed(const Graph& g, const Walk& w);
bool walk_is_covering(const Graph& g, const Walk& w);

// Deterministic covering closed walk: visit every vertex in ascending order
// via BFS shortest paths, then return to v0.  Length <= M(M-1).
Walk covering_closed_walk(const Graph& g, int v0);

// Per-edge control matrix: -1 at (S,S), +1 at (T,S); columns sum to 0.
Eigen::MatrixXd control_matrix(const Graph& g, int edge_id);

} // namespace mfctrl
