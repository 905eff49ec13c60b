#include "gator/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "gator/error.hpp"
#include "gator/ops.hpp"

namespace gator {

namespace {

std::vector<std::vector<int>> adjacency_lists(const SkeletonGraph& g) {
    std::vector<std::vector<int>> adj(static_cast<size_t>(g.num_joints));
    for (const auto& [a, b] : g.edges) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    return adj;
}

// BFS distances from one source; -1 marks unreachable.
std::vector<int> bfs_dist(const std::vector<std::vector<int>>& adj, int src) {
    std::vector<int> dist(adj.size(), -1);
    std::deque<int> q{src};
    dist[static_cast<size_t>(src)] = 0;
    while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        for (int v : adj[static_cast<size_t>(u)]) {
            if (dist[static_cast<size_t>(v)] < 0) {
                dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
                q.push_back(v);
            }
        }
    }
    return dist;
}

}  // namespace

void SkeletonGraph::validate() const {
    if (num_joints < 1) throw ConfigError("skeleton: needs at least one joint");
    if (edges.size() != bone_lengths.size()) throw ConfigError("skeleton: edge/length count mismatch");
    std::set<std::pair<int, int>> seen;
    for (size_t e = 0; e < edges.size(); ++e) {
        auto [a, b] = edges[e];
        if (a < 0 || b < 0 || a >= num_joints || b >= num_joints) {
            throw ConfigError("skeleton: edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
        }
        if (a == b) throw ConfigError("skeleton: self-loop at joint " + std::to_string(a));
        auto key = std::minmax(a, b);
        if (!seen.insert(key).second) {
            throw ConfigError("skeleton: duplicate edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
        }
        if (!(bone_lengths[e] > 0.0)) {
            throw ConfigError("skeleton: bone length of edge (" + std::to_string(a) + "," + std::to_string(b) + ") must be positive");
        }
    }
    auto dist = bfs_dist(adjacency_lists(*this), 0);
    for (int v = 0; v < num_joints; ++v) {
        if (dist[static_cast<size_t>(v)] < 0) {
            throw ConfigError("skeleton: disconnected graph, joints (0," + std::to_string(v) + ") are not connected");
        }
    }
}

double SkeletonGraph::edge_length(int a, int b) const {
    auto key = std::minmax(a, b);
    for (size_t e = 0; e < edges.size(); ++e) {
        if (edges[e] == std::make_pair(key.first, key.second)) return bone_lengths[e];
    }
    throw ContractError("skeleton: no edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
}

SkeletonGraph SkeletonGraph::from_tree(const std::vector<int>& parents, const std::vector<double>& lengths) {
    SkeletonGraph g;
    g.num_joints = static_cast<int>(parents.size());
    for (int j = 0; j < g.num_joints; ++j) {
        const int p = parents[static_cast<size_t>(j)];
        if (p < 0) continue;
        auto key = std::minmax(j, p);
        g.edges.emplace_back(key.first, key.second);
        g.bone_lengths.push_back(lengths[static_cast<size_t>(j)]);
    }
    g.validate();
    return g;
}

HopMatrix hop_distance_matrix(const SkeletonGraph& graph) {
    graph.validate();
    const int n = graph.num_joints;
    auto adj = adjacency_lists(graph);
    HopMatrix hops;
    hops.n = n;
    hops.d.assign(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i) {
        auto dist = bfs_dist(adj, i);
        for (int j = 0; j < n; ++j) {
            if (dist[static_cast<size_t>(j)] < 0) {
                throw ConfigError("skeleton: disconnected graph, joints (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") are not connected");
            }
            hops.d[static_cast<size_t>(i) * n + j] = dist[static_cast<size_t>(j)];
            hops.max_hop = std::max(hops.max_hop, dist[static_cast<size_t>(j)]);
        }
    }
    return hops;
}

PathTable shortest_path_table(const SkeletonGraph& graph) {
    graph.validate();
    const int n = graph.num_joints;
    auto adj = adjacency_lists(graph);
    PathTable table;
    table.n = n;
    table.edge_lengths.assign(static_cast<size_t>(n) * n, {});
    for (int j = 0; j < n; ++j) {
        auto dist_to_j = bfs_dist(adj, j);
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            // greedy descent toward j; smallest-index next hop realizes the
            // lexicographically smallest joint sequence among shortest paths
            std::vector<double>& seq = table.edge_lengths[static_cast<size_t>(i) * n + j];
            int cur = i;
            while (cur != j) {
                int next = -1;
                for (int v : adj[static_cast<size_t>(cur)]) {  // neighbors sorted ascending
                    if (dist_to_j[static_cast<size_t>(v)] == dist_to_j[static_cast<size_t>(cur)] - 1) {
                        next = v;
                        break;
                    }
                }
                seq.push_back(graph.edge_length(cur, next));
                cur = next;
            }
        }
    }
    return table;
}

Tensor normalized_adjacency(const SkeletonGraph& graph) {
    graph.validate();
    const int n = graph.num_joints;
    Tensor a = Tensor::zeros({n, n});
    for (int i = 0; i < n; ++i) a.at(i, i) = 1.0;
    for (const auto& [u, v] : graph.edges) {
        a.at(u, v) = 1.0;
        a.at(v, u) = 1.0;
    }
    std::vector<double> inv_sqrt_deg(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += a.at(i, j);
        inv_sqrt_deg[static_cast<size_t>(i)] = 1.0 / std::sqrt(deg);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a.at(i, j) *= inv_sqrt_deg[static_cast<size_t>(i)] * inv_sqrt_deg[static_cast<size_t>(j)];
    return a;
}

GraphEncodingParams init_graph_encoding_params(int max_hop, int heads, int edge_dim,
                                               Rng& rng, ParamSet& ps, const std::string& prefix) {
    GraphEncodingParams p;
    p.heads = heads;
    p.edge_dim = edge_dim;
    p.max_hop = max_hop;
    // zero-init tables make "encoding disabled" and "encoding zero" identical at step 0
    p.hop_table = ps.add(prefix + ".hop_table", Tensor::zeros({max_hop + 1, heads}));
    p.edge_embed_w = ps.add(prefix + ".edge_embed_w", xavier_uniform({1, edge_dim}, rng));
    p.edge_embed_b = ps.add(prefix + ".edge_embed_b", Tensor::zeros({1, edge_dim}));
    p.path_weights = ps.add(prefix + ".path_weights", Tensor::zeros({std::max(max_hop, 1), heads, edge_dim}));
    return p;
}

Tensor hop_encoding(const HopMatrix& hops, const Tensor& hop_table) {
    const int n = hops.n;
    std::vector<int> idx(hops.d.begin(), hops.d.end());
    Tensor gathered = gather_rows(hop_table, idx);  // [n*n, H]
    return reshape(gathered, {n, n, hop_table.cols()});
}

Tensor path_encoding(const PathTable& paths, const GraphEncodingParams& params) {
    const int n = paths.n;
    const int h = params.heads;
    const int he = params.edge_dim;
    // bucket path positions by k so each bucket is one batched matmul
    std::vector<std::vector<int>> pair_idx(static_cast<size_t>(std::max(params.max_hop, 1)));
    std::vector<std::vector<double>> edge_vals(pair_idx.size());
    std::vector<std::vector<double>> inv_len(pair_idx.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto& seq = paths.at(i, j);
            for (size_t k = 0; k < seq.size(); ++k) {
                pair_idx[k].push_back(i * n + j);
                edge_vals[k].push_back(seq[k]);
                inv_len[k].push_back(1.0 / static_cast<double>(seq.size()));
            }
        }
    }
    Tensor w2d = reshape(params.path_weights, {std::max(params.max_hop, 1) * h, he});
    Tensor acc = Tensor::zeros({n * n, h});
    for (size_t k = 0; k < pair_idx.size(); ++k) {
        if (pair_idx[k].empty()) continue;
        const int m = static_cast<int>(pair_idx[k].size());
        Tensor e = Tensor::from_values({m, 1}, edge_vals[k]);
        Tensor f = add_rowvec(matmul(e, params.edge_embed_w), params.edge_embed_b);  // [m, he]
        std::vector<int> wrows(static_cast<size_t>(h));
        for (int r = 0; r < h; ++r) wrows[static_cast<size_t>(r)] = static_cast<int>(k) * h + r;
        Tensor wk = gather_rows(w2d, wrows);                       // [h, he]
        Tensor contrib = matmul(f, transpose(wk));                 // [m, h]
        contrib = mul_colvec(contrib, Tensor::from_values({m, 1}, inv_len[k]));
        acc = add(acc, scatter_add_rows(contrib, pair_idx[k], n * n));
    }
    return reshape(acc, {n, n, h});
}

std::vector<Tensor> split_bias_heads(const Tensor& nnh) {
    if (nnh.rank() != 3) throw ContractError("split_bias_heads: expected {N,N,H}, got " + shape_str(nnh.shape()));
    const int n = nnh.extent(0);
    const int h = nnh.extent(2);
    Tensor flat = reshape(nnh, {n * n, h});
    std::vector<Tensor> out;
    out.reserve(static_cast<size_t>(h));
    for (int i = 0; i < h; ++i) out.push_back(reshape(slice_cols(flat, i, 1), {n, n}));
    return out;
}

SkeletonDesc parse_skeleton_text(const std::vector<std::string>& lines) {
    SkeletonDesc desc;
    for (const auto& line : lines) {
        std::istringstream is(line);
        std::string name, parent;
        double length = 0.0;
        if (!(is >> name)) continue;  // blank line
        if (name[0] == '#') continue;
        if (!(is >> parent >> length)) throw ConfigError("skeleton text: bad line '" + line + "'");
        int parent_idx = -1;
        if (parent != "-" && parent != "none") {
            auto it = std::find(desc.names.begin(), desc.names.end(), parent);
            if (it == desc.names.end()) {
                throw ConfigError("skeleton text: parent '" + parent + "' of '" + name + "' not defined yet");
            }
            parent_idx = static_cast<int>(it - desc.names.begin());
            if (!(length > 0.0)) throw ConfigError("skeleton text: bone length of '" + name + "' must be positive");
        }
        if (std::find(desc.names.begin(), desc.names.end(), name) != desc.names.end()) {
            throw ConfigError("skeleton text: duplicate joint '" + name + "'");
        }
        std::array<double, 3> dir{0.0, 0.0, 0.0};
        bool has_dir = false;
        if (is >> dir[0]) {
            if (!(is >> dir[1] >> dir[2])) throw ConfigError("skeleton text: direction needs 3 components in '" + line + "'");
            const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
            if (norm < 1e-12) throw ConfigError("skeleton text: zero direction in '" + line + "'");
            for (double& c : dir) c /= norm;
            has_dir = true;
        }
        desc.names.push_back(name);
        desc.parents.push_back(parent_idx);
        desc.lengths.push_back(parent_idx < 0 ? 0.0 : length);
        desc.directions.push_back(dir);
        desc.has_direction.push_back(has_dir);
    }
    if (desc.names.empty()) throw ConfigError("skeleton text: no joints");
    int roots = 0;
    for (int p : desc.parents) roots += (p < 0);
    if (roots != 1) throw ConfigError("skeleton text: expected exactly one root, found " + std::to_string(roots));
    return desc;
}

}  // namespace gator
