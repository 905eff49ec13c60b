#include "gator/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "gator/error.hpp"
#include "gator/ops.hpp"

namespace gator {

Tensor MeshTopology::template_joints() const { return matmul(joint_regressor, template_full); }

void MeshTopology::validate() const {
    const int v = full_count();
    for (const auto& f : faces) {
        for (int idx : f) {
            if (idx < 0 || idx >= v) throw ConfigError("mesh: face references invalid vertex " + std::to_string(idx));
        }
    }
    if (edges != edges_from_faces(faces, v)) throw ConfigError("mesh: edge list is not the face-derived set");
    for (int j = 0; j < joint_regressor.rows(); ++j) {
        double sum = 0.0;
        for (int c = 0; c < joint_regressor.cols(); ++c) {
            if (joint_regressor.at(j, c) < 0.0) throw ConfigError("mesh: joint regressor has negative entries");
            sum += joint_regressor.at(j, c);
        }
        if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("mesh: joint regressor row " + std::to_string(j) + " does not sum to 1");
    }
    if (static_cast<int>(nearest_joint.size()) != coarse_count()) throw ConfigError("mesh: nearest_joint size mismatch");
    Tensor joints = template_joints();
    auto expect = nearest_joint_assignment(template_coarse, joints);
    if (expect != nearest_joint) throw ConfigError("mesh: nearest_joint assignment is stale");
}

std::vector<std::pair<int, int>> edges_from_faces(const std::vector<std::array<int, 3>>& faces, int vertex_count) {
    std::set<std::pair<int, int>> unique;
    for (const auto& f : faces) {
        for (int e = 0; e < 3; ++e) {
            const int a = f[static_cast<size_t>(e)], b = f[static_cast<size_t>((e + 1) % 3)];
            if (a < 0 || a >= vertex_count || b < 0 || b >= vertex_count) {
                throw ConfigError("mesh: face vertex out of range");
            }
            unique.insert(std::minmax(a, b));
        }
    }
    return {unique.begin(), unique.end()};
}

namespace {

double sqdist(const Tensor& a, int i, const Tensor& b, int j) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double d = a.at(i, c) - b.at(j, c);
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<int> farthest_point_sampling(const Tensor& vertices, int count) {
    const int v = vertices.rows();
    if (count < 1 || count > v) throw ContractError("farthest_point_sampling: bad count " + std::to_string(count));
    std::vector<int> picked = {0};
    std::vector<double> min_d(static_cast<size_t>(v), std::numeric_limits<double>::infinity());
    while (static_cast<int>(picked.size()) < count) {
        const int last = picked.back();
        for (int i = 0; i < v; ++i) {
            min_d[static_cast<size_t>(i)] = std::min(min_d[static_cast<size_t>(i)], sqdist(vertices, i, vertices, last));
        }
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < v; ++i) {
            if (min_d[static_cast<size_t>(i)] > best_d) {
                best_d = min_d[static_cast<size_t>(i)];
                best = i;
            }
        }
        picked.push_back(best);
    }
    return picked;
}

Tensor upsample_from_nearest(const Tensor& full, const Tensor& coarse) {
    const int v = full.rows(), vc = coarse.rows();
    const int k = std::min(3, vc);
    Tensor u = Tensor::zeros({v, vc});
    for (int i = 0; i < v; ++i) {
        std::vector<std::pair<double, int>> dist;
        dist.reserve(static_cast<size_t>(vc));
        for (int j = 0; j < vc; ++j) dist.emplace_back(sqdist(full, i, coarse, j), j);
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        if (dist[0].first < 1e-24) {
            u.at(i, dist[0].second) = 1.0;
            continue;
        }
        double total = 0.0;
        for (int t = 0; t < k; ++t) total += 1.0 / std::sqrt(dist[static_cast<size_t>(t)].first);
        for (int t = 0; t < k; ++t) {
            u.at(i, dist[static_cast<size_t>(t)].second) = (1.0 / std::sqrt(dist[static_cast<size_t>(t)].first)) / total;
        }
    }
    return u;
}

std::vector<int> nearest_joint_assignment(const Tensor& coarse, const Tensor& joints) {
    std::vector<int> out(static_cast<size_t>(coarse.rows()));
    for (int i = 0; i < coarse.rows(); ++i) {
        int best = 0;
        double best_d = sqdist(coarse, i, joints, 0);
        for (int j = 1; j < joints.rows(); ++j) {
            const double d = sqdist(coarse, i, joints, j);
            if (d < best_d) {  // strict: ties keep the smallest index
                best_d = d;
                best = j;
            }
        }
        out[static_cast<size_t>(i)] = best;
    }
    return out;
}

MeshTopology build_mesh_topology(Tensor full_vertices, std::vector<std::array<int, 3>> faces,
                                 Tensor joint_regressor, int coarse_divisor) {
    if (coarse_divisor < 1) throw ConfigError("mesh: coarse_divisor must be >= 1");
    MeshTopology topo;
    topo.template_full = full_vertices;
    topo.faces = std::move(faces);
    topo.edges = edges_from_faces(topo.faces, full_vertices.rows());
    topo.joint_regressor = joint_regressor;

    const int vc = std::max(joint_regressor.rows(), full_vertices.rows() / coarse_divisor);
    topo.coarse_indices = farthest_point_sampling(full_vertices, vc);
    topo.template_coarse = Tensor::zeros({vc, 3});
    for (int i = 0; i < vc; ++i)
        for (int c = 0; c < 3; ++c)
            topo.template_coarse.at(i, c) = full_vertices.at(topo.coarse_indices[static_cast<size_t>(i)], c);

    topo.upsample_init = upsample_from_nearest(full_vertices, topo.template_coarse);
    topo.nearest_joint = nearest_joint_assignment(topo.template_coarse, topo.template_joints());
    return topo;
}

}  // namespace gator
