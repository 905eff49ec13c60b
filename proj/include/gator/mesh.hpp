#pragma once

#include <array>
#include <utility>
#include <vector>

#include "gator/tensor.hpp"

namespace gator {

// Template geometry plus everything the decoder needs: the coarse/full split,
// a row-stochastic joint regressor, and the upsampling initializer.
struct MeshTopology {
    Tensor template_full;    // [V_full, 3]
    Tensor template_coarse;  // [V_c, 3], rows of template_full
    std::vector<std::array<int, 3>> faces;
    std::vector<std::pair<int, int>> edges;  // unique, face-derived
    Tensor joint_regressor;                  // [N, V_full], rows sum to 1
    Tensor upsample_init;                    // [V_full, V_c], rows sum to 1
    std::vector<int> nearest_joint;          // per coarse vertex
    std::vector<int> coarse_indices;         // full-vertex index of each coarse vertex

    int full_count() const { return template_full.rows(); }
    int coarse_count() const { return template_coarse.rows(); }
    int joint_count() const { return joint_regressor.rows(); }
    Tensor template_joints() const;  // R * template_full

    void validate() const;
};

std::vector<std::pair<int, int>> edges_from_faces(const std::vector<std::array<int, 3>>& faces, int vertex_count);

// deterministic: starts at vertex 0, ties broken by smallest index
std::vector<int> farthest_point_sampling(const Tensor& vertices, int count);

// 3-nearest-coarse inverse-distance rows; exact hits become one-hot
Tensor upsample_from_nearest(const Tensor& full, const Tensor& coarse);

std::vector<int> nearest_joint_assignment(const Tensor& coarse, const Tensor& joints);

MeshTopology build_mesh_topology(Tensor full_vertices, std::vector<std::array<int, 3>> faces,
                                 Tensor joint_regressor, int coarse_divisor);

}  // namespace gator
