#include "mfctrl/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace mfctrl {

Graph Graph::build(int M, const std::vector<std::pair<int, int>>& edges) {
    if (M < 2) throw std::invalid_argument("graph: need at least 2 vertices");
    Graph g;
    g.M_ = M;
    std::set<std::pair<int, int>> seen;
    std::map<std::pair<int, int>, int> index;
    for (const auto& [s, t] : edges) {
        if (s < 1 || s > M || t < 1 || t > M)
            throw std::invalid_argument("graph: endpoint out of range: (" +
                                        std::to_string(s) + "," + std::to_string(t) + ")");
        if (s == t) throw std::invalid_argument("graph: self-loop rejected");
        if (!seen.insert({s, t}).second)
            throw std::invalid_argument("graph: duplicate edge rejected");
        index[{s, t}] = static_cast<int>(g.edges_.size());
        g.edges_.push_back({s, t});
    }
    g.rev_.assign(g.edges_.size(), -1);
    g.out_.assign(M, {});
    for (int id = 0; id < static_cast<int>(g.edges_.size()); ++id) {
        const Edge& e = g.edges_[id];
        g.out_[e.s - 1].push_back(id);
        auto it = index.find({e.t, e.s});
        if (it != index.end()) g.rev_[id] = it->second;
    }
    return g;
}

bool Graph::bidirected() const {
    return std::all_of(rev_.begin(), rev_.end(), [](int r) { return r >= 0; });
}

namespace {

// BFS descendant set of v (1-based), v included.
std::vector<char> reachable_from(const Graph& g, int v) {
    std::vector<char> vis(g.vertex_count() + 1, 0);
    std::queue<int> q;
    vis[v] = 1;
    q.push(v);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int id : g.out_edges(u)) {
            int w = g.edge(id).t;
            if (!vis[w]) {
                vis[w] = 1;
                q.push(w);
            }
        }
    }
    return vis;
}

} // namespace

bool is_strongly_connected(const Graph& g) {
    // Kosaraju-style check: everything reachable from vertex 1, and vertex 1
    // reachable from everything (BFS on the reversed graph).
    auto fwd = reachable_from(g, 1);
    for (int v = 1; v <= g.vertex_count(); ++v)
        if (!fwd[v]) return false;

    std::vector<std::vector<int>> rin(g.vertex_count() + 1);
    for (int id = 0; id < g.edge_count(); ++id)
        rin[g.edge(id).t].push_back(g.edge(id).s);
    std::vector<char> vis(g.vertex_count() + 1, 0);
    std::queue<int> q;
    vis[1] = 1;
    q.push(1);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int w : rin[u])
            if (!vis[w]) {
                vis[w] = 1;
                q.push(w);
            }
    }
    for (int v = 1; v <= g.vertex_count(); ++v)
        if (!vis[v]) return false;
    return true;
}

std::pair<std::vector<int>, std::vector<int>>
witness_from_pair(const Graph& g, int v1, int v2) {
    auto desc2 = reachable_from(g, v2);
    if (desc2[v1])
        throw std::invalid_argument("witness: v1 is reachable from v2");
    // ancestors of v1 = descendants of v1 in the reversed graph
    std::vector<std::vector<int>> rin(g.vertex_count() + 1);
    for (int id = 0; id < g.edge_count(); ++id)
        rin[g.edge(id).t].push_back(g.edge(id).s);
    std::vector<char> anc(g.vertex_count() + 1, 0);
    std::queue<int> q;
    anc[v1] = 1;
    q.push(v1);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int w : rin[u])
            if (!anc[w]) {
                anc[w] = 1;
                q.push(w);
            }
    }
    std::vector<int> V1, V2;
    for (int v = 1; v <= g.vertex_count(); ++v) {
        if (anc[v]) V1.push_back(v);
        if (desc2[v]) V2.push_back(v);
    }
    return {V1, V2};
}

std::optional<std::pair<std::vector<int>, std::vector<int>>>
nonconnectivity_witness(const Graph& g) {
    std::vector<std::vector<char>> reach(g.vertex_count() + 1);
    for (int v = 1; v <= g.vertex_count(); ++v) reach[v] = reachable_from(g, v);
    for (int v1 = 1; v1 <= g.vertex_count(); ++v1)
        for (int v2 = 1; v2 <= g.vertex_count(); ++v2)
            if (v1 != v2 && !reach[v2][v1])
                return witness_from_pair(g, v1, v2);
    return std::nullopt;
}

bool walk_is_closed(const Graph& g, const Walk& w) {
    if (w.edge_ids.empty()) return false;
    int cur = w.v0;
    for (int id : w.edge_ids) {
        if (g.edge(id).s != cur) return false;
        cur = g.edge(id).t;
    }
    return cur == w.v0;
}

bool walk_is_covering(const Graph& g, const Walk& w) {
    std::vector<char> vis(g.vertex_count() + 1, 0);
    vis[w.v0] = 1;
    for (int id : w.edge_ids) vis[g.edge(id).t] = 1;
    for (int v = 1; v <= g.vertex_count(); ++v)
        if (!vis[v]) return false;
    return true;
}

namespace {

// Deterministic BFS shortest path src -> dst as edge ids; neighbors expand
// in edge-insertion order, first parent wins.
std::vector<int> bfs_path(const Graph& g, int src, int dst) {
    if (src == dst) return {};
    std::vector<int> par_edge(g.vertex_count() + 1, -1);
    std::vector<char> vis(g.vertex_count() + 1, 0);
    std::queue<int> q;
    vis[src] = 1;
    q.push(src);
    while (!q.empty() && !vis[dst]) {
        int u = q.front();
        q.pop();
        for (int id : g.out_edges(u)) {
            int w = g.edge(id).t;
            if (!vis[w]) {
                vis[w] = 1;
                par_edge[w] = id;
                q.push(w);
            }
        }
    }
    if (!vis[dst]) throw std::invalid_argument("walk: target unreachable");
    std::vector<int> path;
    for (int v = dst; v != src; v = g.edge(par_edge[v]).s) path.push_back(par_edge[v]);
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace

Walk covering_closed_walk(const Graph& g, int v0) {
    if (v0 < 1 || v0 > g.vertex_count())
        throw std::invalid_argument("walk: start vertex out of range");
    if (!is_strongly_connected(g))
        throw std::invalid_argument("walk: graph not strongly connected");
    Walk w;
    w.v0 = v0;
    std::vector<char> vis(g.vertex_count() + 1, 0);
    vis[v0] = 1;
    int cur = v0;
    for (int v = 1; v <= g.vertex_count(); ++v) {
        if (vis[v]) continue;
        for (int id : bfs_path(g, cur, v)) {
            w.edge_ids.push_back(id);
            vis[g.edge(id).t] = 1;
        }
        cur = v;
    }
    for (int id : bfs_path(g, cur, v0)) w.edge_ids.push_back(id);
    return w;
}

Eigen::MatrixXd control_matrix(const Graph& g, int edge_id) {
    const Edge& e = g.edge(edge_id);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(g.vertex_count(), g.vertex_count());
    B(e.s - 1, e.s - 1) = -1.0;
    B(e.t - 1, e.s - 1) = 1.0;
    return B;
}

} // namespace mfctrl
