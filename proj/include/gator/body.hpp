#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gator/mesh.hpp"
#include "gator/rng.hpp"
#include "gator/skeleton.hpp"
#include "gator/tensor.hpp"

namespace gator {

// Tube-per-bone articulated toy body. Bones carry `rings_per_bone` rings
// between their joints; leaf bones continue for `stub_rings` rigid rings
// (head, hands, shins) at the same spacing.
struct ToyBodySpec {
    SkeletonDesc skeleton;
    int ring_vertices = 4;
    int rings_per_bone = 5;
    int stub_rings = 2;
    double tube_radius = 0.055;
    int coarse_divisor = 4;

    static ToyBodySpec default_body();
    void validate() const;
};

struct Body {
    ToyBodySpec spec;
    SkeletonGraph graph;
    std::vector<std::array<double, 3>> rest_joints;  // skeleton rest positions
    Tensor skin_weights;                             // [V_full, N], rows sum to 1
    MeshTopology topo;
    double height = 0.0;  // vertical extent of the template mesh
};

Body generate_toy_body(const ToyBodySpec& spec);

// Body built around an external template (OBJ vertices/faces + CSV regressor);
// skinning weights are the column-normalized regressor.
Body body_from_template(const ToyBodySpec& spec, Tensor vertices,
                        std::vector<std::array<int, 3>> faces, Tensor regressor);

struct Sample {
    Tensor pose2d;     // [N,2]
    Tensor gt_pose3d;  // [N,3] == R * gt_mesh
    Tensor gt_mesh;    // [V_full,3]
    uint64_t seed = 0;
};

// one rigid transform per joint, from bounded Euler angles + tree FK
struct JointTransforms {
    std::vector<std::array<double, 9>> rot;    // row-major
    std::vector<std::array<double, 3>> trans;
};

JointTransforms forward_kinematics(const Body& body, const std::vector<std::array<double, 3>>& euler_xyz);
Tensor linear_blend_skinning(const Body& body, const JointTransforms& g);

Sample synthesize_sample(const Body& body, Rng& rng, double noise_sigma, double angle_range);

}  // namespace gator
