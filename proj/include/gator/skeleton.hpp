#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "gator/params.hpp"
#include "gator/rng.hpp"
#include "gator/tensor.hpp"

namespace gator {

// Undirected bone graph with per-edge spatial lengths.
struct SkeletonGraph {
    int num_joints = 0;
    std::vector<std::pair<int, int>> edges;  // normalized to first < second
    std::vector<double> bone_lengths;        // aligned with edges

    void validate() const;
    double edge_length(int a, int b) const;
    static SkeletonGraph from_tree(const std::vector<int>& parents, const std::vector<double>& lengths);
};

struct HopMatrix {
    int n = 0;
    std::vector<int> d;  // row-major n*n
    int max_hop = 0;

    int at(int i, int j) const { return d[static_cast<size_t>(i) * n + j]; }
};

// Edge-length sequence along one shortest path per ordered pair; between
// equal-length paths the lexicographically smallest joint sequence wins.
struct PathTable {
    int n = 0;
    std::vector<std::vector<double>> edge_lengths;  // index i*n+j, empty for i==j

    const std::vector<double>& at(int i, int j) const { return edge_lengths[static_cast<size_t>(i) * n + j]; }
};

HopMatrix hop_distance_matrix(const SkeletonGraph& graph);
PathTable shortest_path_table(const SkeletonGraph& graph);

// Deg^{-1/2} (A + I) Deg^{-1/2}; constant, not a learnable tensor.
Tensor normalized_adjacency(const SkeletonGraph& graph);

// Learnable graph priors: hop-embedding table, scalar->edge_dim affine edge
// embedding, and position-within-path weights shared across joint pairs.
struct GraphEncodingParams {
    Tensor hop_table;     // (max_hop+1) x heads, zero-init
    Tensor edge_embed_w;  // 1 x edge_dim
    Tensor edge_embed_b;  // 1 x edge_dim
    Tensor path_weights;  // {max(max_hop,1), heads, edge_dim}, zero-init
    int heads = 0;
    int edge_dim = 0;
    int max_hop = 0;
};

GraphEncodingParams init_graph_encoding_params(int max_hop, int heads, int edge_dim,
                                               Rng& rng, ParamSet& ps, const std::string& prefix);

// HE[i][j] = hop_table[D_ij]; shape {N,N,heads}
Tensor hop_encoding(const HopMatrix& hops, const Tensor& hop_table);

// PE[i][j][h] = mean_k <path_weights[k][h], f(e_ij^k)>; PE[i][i] = 0
Tensor path_encoding(const PathTable& paths, const GraphEncodingParams& params);

// {N,N,H} -> H per-head N x N bias matrices (differentiable slicing)
std::vector<Tensor> split_bias_heads(const Tensor& nnh);

// Plain-text tree description: one joint per line,
//   <name> <parent-name|-> <bone-length> [dx dy dz]
struct SkeletonDesc {
    std::vector<std::string> names;
    std::vector<int> parents;  // -1 for the root
    std::vector<double> lengths;
    std::vector<std::array<double, 3>> directions;
    std::vector<bool> has_direction;

    int size() const { return static_cast<int>(names.size()); }
};

SkeletonDesc parse_skeleton_text(const std::vector<std::string>& lines);

}  // namespace gator
