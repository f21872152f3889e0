#include "fasflow/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fasflow {

namespace {

struct WorkGraph
{
    int n = 0;
    std::vector<std::int64_t> vwgt;                    // fine vertices per vertex
    std::vector<std::vector<std::pair<int, std::int64_t>>> adj; // (neighbor, weight)
};

WorkGraph make_work_graph(const ConnectivityGraph& g)
{
    WorkGraph wg;
    wg.n = g.num_vertices;
    wg.vwgt.assign(wg.n, 1);
    wg.adj.resize(wg.n);
    for (const auto& e : g.edges) {
        wg.adj[e.u].push_back({e.v, e.weight});
        wg.adj[e.v].push_back({e.u, e.weight});
    }
    return wg;
}

std::vector<int> connected_components(const WorkGraph& g, int& count)
{
    std::vector<int> comp(g.n, -1);
    count = 0;
    std::deque<int> queue;
    for (int s = 0; s < g.n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = count;
        queue.push_back(s);
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (auto [v, w] : g.adj[u])
                if (comp[v] < 0) {
                    comp[v] = count;
                    queue.push_back(v);
                }
        }
        ++count;
    }
    return comp;
}

/// Heavy-edge matching; returns the coarse vertex id of each fine vertex.
std::vector<int> heavy_edge_matching(const WorkGraph& g, std::mt19937_64& rng,
                                     int& n_coarse)
{
    std::vector<int> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> jitter(g.n);
    for (auto& j : jitter) j = rng();
    std::vector<std::int64_t> max_w(g.n, 0);
    for (int u = 0; u < g.n; ++u)
        for (auto [v, w] : g.adj[u]) max_w[u] = std::max(max_w[u], w);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (max_w[a] != max_w[b]) return max_w[a] > max_w[b];
        return jitter[a] < jitter[b];
    });

    std::vector<int> match(g.n, -1);
    for (int u : order) {
        if (match[u] >= 0) continue;
        int best = -1;
        std::int64_t best_w = -1;
        for (auto [v, w] : g.adj[u]) {
            if (match[v] >= 0 || v == u) continue;
            if (w > best_w || (w == best_w && (best < 0 || g.vwgt[v] < g.vwgt[best]))) {
                best = v;
                best_w = w;
            }
        }
        if (best >= 0) {
            match[u] = best;
            match[best] = u;
        } else {
            match[u] = u;
        }
    }

    std::vector<int> coarse_id(g.n, -1);
    n_coarse = 0;
    for (int u = 0; u < g.n; ++u) {
        if (coarse_id[u] >= 0) continue;
        coarse_id[u] = n_coarse;
        coarse_id[match[u]] = n_coarse;
        ++n_coarse;
    }
    return coarse_id;
}

WorkGraph contract(const WorkGraph& g, const std::vector<int>& coarse_id, int n_coarse)
{
    WorkGraph cg;
    cg.n = n_coarse;
    cg.vwgt.assign(n_coarse, 0);
    cg.adj.resize(n_coarse);
    for (int u = 0; u < g.n; ++u) cg.vwgt[coarse_id[u]] += g.vwgt[u];
    std::map<std::pair<int, int>, std::int64_t> agg;
    for (int u = 0; u < g.n; ++u)
        for (auto [v, w] : g.adj[u]) {
            int cu = coarse_id[u], cv = coarse_id[v];
            if (cu < cv) agg[{cu, cv}] += w;
        }
    for (auto& [key, w] : agg) {
        cg.adj[key.first].push_back({key.second, w});
        cg.adj[key.second].push_back({key.first, w});
    }
    return cg;
}

/// Greedy region growing for the initial partition of the coarsest graph.
std::vector<int> grow_regions(const WorkGraph& g, int k, std::int64_t max_weight)
{
    const std::int64_t total =
        std::accumulate(g.vwgt.begin(), g.vwgt.end(), std::int64_t{0});
    const double target = static_cast<double>(total) / k;

    std::vector<int> part(g.n, -1);
    std::vector<std::int64_t> conn_assigned(g.n, 0);
    int assigned = 0;
    for (int p = 0; p < k && assigned < g.n; ++p) {
        const bool last = (p == k - 1);
        // seed: least connected to already-assigned vertices
        int seed = -1;
        for (int v = 0; v < g.n; ++v) {
            if (part[v] >= 0) continue;
            if (seed < 0 || conn_assigned[v] < conn_assigned[seed]) seed = v;
        }
        std::int64_t weight = 0;
        std::vector<std::int64_t> conn_region(g.n, 0);
        auto assign = [&](int v) {
            part[v] = p;
            weight += g.vwgt[v];
            ++assigned;
            for (auto [u, w] : g.adj[v]) {
                conn_region[u] += w;
                conn_assigned[u] += w;
            }
        };
        assign(seed);
        while (assigned < g.n && (last || weight < target)) {
            int best = -1;
            for (int v = 0; v < g.n; ++v) {
                if (part[v] >= 0 || conn_region[v] == 0) continue;
                if (best < 0 || conn_region[v] > conn_region[best]) best = v;
            }
            if (best < 0) {
                if (!last) break; // disconnected remainder goes to later regions
                for (int v = 0; v < g.n; ++v)
                    if (part[v] < 0) { assign(v); break; }
                continue;
            }
            if (!last && weight + g.vwgt[best] > max_weight) break;
            assign(best);
        }
    }
    for (int v = 0; v < g.n; ++v)
        if (part[v] < 0) part[v] = k - 1;
    return part;
}

/// Greedy boundary refinement: move a vertex to the neighboring part with
/// the largest connection gain, subject to the balance cap.
void refine(const WorkGraph& g, int k, std::int64_t max_weight, std::vector<int>& part)
{
    std::vector<std::int64_t> pw(k, 0);
    std::vector<int> pc(k, 0);
    for (int v = 0; v < g.n; ++v) {
        pw[part[v]] += g.vwgt[v];
        ++pc[part[v]];
    }
    std::map<int, std::int64_t> conn;
    for (int pass = 0; pass < 8; ++pass) {
        bool moved = false;
        for (int v = 0; v < g.n; ++v) {
            if (pc[part[v]] <= 1) continue;
            conn.clear();
            for (auto [u, w] : g.adj[v]) conn[part[u]] += w;
            const std::int64_t own = conn.count(part[v]) ? conn[part[v]] : 0;
            int best = -1;
            std::int64_t best_w = own;
            for (auto& [p, w] : conn) {
                if (p == part[v]) continue;
                if (pw[p] + g.vwgt[v] > max_weight) continue;
                if (w > best_w || (w == best_w && best >= 0 && pw[p] < pw[best]) ||
                    (w == best_w && best < 0 && pw[p] + g.vwgt[v] < pw[part[v]]))
                    best = p, best_w = w;
            }
            if (best >= 0) {
                pw[part[v]] -= g.vwgt[v];
                --pc[part[v]];
                pw[best] += g.vwgt[v];
                ++pc[best];
                part[v] = best;
                moved = true;
            }
        }
        if (!moved) break;
    }
}

std::vector<int> partition_recursive(const WorkGraph& g, int k, std::int64_t max_weight,
                                     std::mt19937_64& rng)
{
    if (k <= 1 || g.n == 1) return std::vector<int>(g.n, 0);
    if (g.n <= std::max(8 * k, 32)) {
        auto part = grow_regions(g, k, max_weight);
        refine(g, k, max_weight, part);
        return part;
    }
    int n_coarse = 0;
    auto coarse_id = heavy_edge_matching(g, rng, n_coarse);
    if (n_coarse >= g.n) { // matching stalled
        auto part = grow_regions(g, k, max_weight);
        refine(g, k, max_weight, part);
        return part;
    }
    WorkGraph cg = contract(g, coarse_id, n_coarse);
    auto cpart = partition_recursive(cg, k, max_weight, rng);
    std::vector<int> part(g.n);
    for (int v = 0; v < g.n; ++v) part[v] = cpart[coarse_id[v]];
    refine(g, k, max_weight, part);
    return part;
}

/// Reassign stray components so every part induces a connected subgraph.
void fix_connectivity(const WorkGraph& g, std::vector<int>& part)
{
    for (;;) {
        // component id per vertex within its own part
        std::vector<int> comp(g.n, -1);
        std::vector<std::vector<int>> comp_members;
        std::vector<std::int64_t> comp_weight;
        std::deque<int> queue;
        for (int s = 0; s < g.n; ++s) {
            if (comp[s] >= 0) continue;
            const int id = static_cast<int>(comp_members.size());
            comp_members.push_back({});
            comp_weight.push_back(0);
            comp[s] = id;
            queue.push_back(s);
            while (!queue.empty()) {
                int u = queue.front();
                queue.pop_front();
                comp_members[id].push_back(u);
                comp_weight[id] += g.vwgt[u];
                for (auto [v, w] : g.adj[u])
                    if (comp[v] < 0 && part[v] == part[u]) {
                        comp[v] = id;
                        queue.push_back(v);
                    }
            }
        }
        // main component of each part = heaviest
        std::map<int, int> main_comp;
        for (int id = 0; id < static_cast<int>(comp_members.size()); ++id) {
            const int p = part[comp_members[id][0]];
            auto it = main_comp.find(p);
            if (it == main_comp.end() || comp_weight[id] > comp_weight[it->second])
                main_comp[p] = id;
        }
        // move one stray component to its best-connected neighbor part
        int stray = -1;
        for (int id = 0; id < static_cast<int>(comp_members.size()); ++id)
            if (main_comp[part[comp_members[id][0]]] != id) { stray = id; break; }
        if (stray < 0) return;
        std::map<int, std::int64_t> conn;
        for (int u : comp_members[stray])
            for (auto [v, w] : g.adj[u])
                if (part[v] != part[u]) conn[part[v]] += w;
        if (conn.empty()) return; // isolated in a disconnected graph; leave as is
        int best = conn.begin()->first;
        for (auto& [p, w] : conn)
            if (w > conn[best]) best = p;
        for (int u : comp_members[stray]) part[u] = best;
    }
}

void compact_labels(Partition& p)
{
    std::vector<int> remap;
    std::map<int, int> seen;
    for (int& a : p.assignment) {
        auto it = seen.find(a);
        if (it == seen.end()) {
            const int id = static_cast<int>(seen.size());
            seen[a] = id;
            a = id;
        } else {
            a = it->second;
        }
    }
    p.num_aggregates = static_cast<int>(seen.size());
}

} // namespace

std::vector<std::vector<int>> Partition::members() const
{
    std::vector<std::vector<int>> m(num_aggregates);
    for (int v = 0; v < static_cast<int>(assignment.size()); ++v)
        m[assignment[v]].push_back(v);
    return m;
}

Partition kway_partition(const ConnectivityGraph& graph, int k, std::uint64_t seed)
{
    if (k < 1) throw std::invalid_argument("kway_partition: k must be >= 1");
    if (k > graph.num_vertices)
        throw std::invalid_argument("kway_partition: k exceeds vertex count");

    WorkGraph g = make_work_graph(graph);
    Partition out;
    out.assignment.assign(g.n, 0);
    if (k == 1) {
        out.num_aggregates = 1;
        return out;
    }

    int n_comp = 0;
    auto comp = connected_components(g, n_comp);

    // distribute k among components proportionally (at least 1 each)
    std::vector<std::int64_t> comp_size(n_comp, 0);
    for (int v = 0; v < g.n; ++v) comp_size[comp[v]] += 1;
    std::vector<int> k_comp(n_comp, 1);
    int remaining = k - n_comp;
    if (remaining < 0) remaining = 0;
    while (remaining > 0) {
        int best = 0;
        double best_ratio = -1.0;
        for (int c = 0; c < n_comp; ++c) {
            if (k_comp[c] >= comp_size[c]) continue;
            const double ratio = static_cast<double>(comp_size[c]) / (k_comp[c] + 1);
            if (ratio > best_ratio) { best_ratio = ratio; best = c; }
        }
        if (best_ratio < 0.0) break;
        ++k_comp[best];
        --remaining;
    }

    std::mt19937_64 rng(seed);
    int label_base = 0;
    for (int c = 0; c < n_comp; ++c) {
        std::vector<int> verts;
        for (int v = 0; v < g.n; ++v)
            if (comp[v] == c) verts.push_back(v);
        WorkGraph sub;
        sub.n = static_cast<int>(verts.size());
        sub.vwgt.assign(sub.n, 1);
        sub.adj.resize(sub.n);
        std::vector<int> local(g.n, -1);
        for (int i = 0; i < sub.n; ++i) local[verts[i]] = i;
        for (int i = 0; i < sub.n; ++i)
            for (auto [v, w] : g.adj[verts[i]])
                sub.adj[i].push_back({local[v], w});

        const int kc = std::min<int>(k_comp[c], sub.n);
        const std::int64_t max_w =
            std::max<std::int64_t>((12 * static_cast<std::int64_t>(sub.n) + 10 * kc - 1) / (10 * kc), 1);
        auto part = partition_recursive(sub, kc, max_w, rng);
        fix_connectivity(sub, part);
        for (int i = 0; i < sub.n; ++i) out.assignment[verts[i]] = label_base + part[i];
        label_base += kc;
    }
    compact_labels(out);
    return out;
}

std::vector<bool> cells_within_layers(const ConnectivityGraph& conn,
                                      const std::vector<int>& seeds, int layers)
{
    auto adj = conn.adjacency();
    std::vector<int> dist(conn.num_vertices, -1);
    std::deque<int> queue;
    for (int s : seeds) {
        if (s < 0 || s >= conn.num_vertices)
            throw std::invalid_argument("cells_within_layers: invalid seed");
        if (dist[s] != 0) {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        if (dist[u] >= layers) continue;
        for (int i = adj.offsets[u]; i < adj.offsets[u + 1]; ++i) {
            int v = adj.neighbors[i];
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    std::vector<bool> within(conn.num_vertices, false);
    for (int v = 0; v < conn.num_vertices; ++v) within[v] = dist[v] >= 0;
    return within;
}

Partition well_aware_partition(const ConnectivityGraph& conn,
                               const std::vector<std::vector<int>>& well_cells,
                               int n_lay, std::int64_t scale, int k,
                               std::uint64_t seed)
{
    if (n_lay < 0) throw std::invalid_argument("well_aware_partition: n_lay must be >= 0");
    if (scale < 1) throw std::invalid_argument("well_aware_partition: scale must be >= 1");

    std::vector<int> all_cells;
    for (const auto& wc : well_cells)
        all_cells.insert(all_cells.end(), wc.begin(), wc.end());

    ConnectivityGraph weighted = conn;
    if (!all_cells.empty() && scale > 1) {
        auto near = cells_within_layers(conn, all_cells, n_lay);
        for (auto& e : weighted.edges)
            if (near[e.u] && near[e.v]) e.weight *= scale;
    }

    Partition part = kway_partition(weighted, k, seed);

    // union-find merge of aggregates containing or adjacent to each well's cells
    std::vector<int> parent(part.num_aggregates);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

    auto adj = conn.adjacency();
    for (const auto& wc : well_cells) {
        if (wc.empty()) continue;
        const int root = part.assignment[wc[0]];
        for (int c : wc) {
            unite(part.assignment[c], root);
            for (int i = adj.offsets[c]; i < adj.offsets[c + 1]; ++i)
                unite(part.assignment[adj.neighbors[i]], root);
        }
    }
    for (int& a : part.assignment) a = find(a);
    compact_labels(part);

    // merged aggregates must stay connected; holds whenever each well's
    // perforated cells form a connected set (vertical columns in practice)
    WorkGraph g = make_work_graph(conn);
    std::vector<int> comp(g.n, -1);
    std::deque<int> queue;
    int ncomp = 0;
    for (int s = 0; s < g.n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = ncomp++;
        queue.push_back(s);
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (auto [v, w] : g.adj[u])
                if (comp[v] < 0 && part.assignment[v] == part.assignment[u]) {
                    comp[v] = comp[s];
                    queue.push_back(v);
                }
        }
    }
    if (ncomp != part.num_aggregates)
        throw std::runtime_error(
            "well_aware_partition: merged aggregate is disconnected "
            "(well perforations must form a connected set of cells)");

    return part;
}

} // namespace fasflow
