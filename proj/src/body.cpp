#include "gator/body.hpp"

#include <cmath>

#include "gator/error.hpp"
#include "gator/ops.hpp"

namespace gator {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}

// deterministic direction for skeletons described without explicit directions
Vec3 fallback_direction(int joint_index, int depth) {
    const double theta = 2.399963229728653 * joint_index;  // golden angle
    const double phi = 0.6 + 0.5 * depth;
    return {std::sin(phi) * std::cos(theta), std::cos(phi), std::sin(phi) * std::sin(theta)};
}

std::array<double, 9> euler_xyz(const Vec3& angles) {
    const double cx = std::cos(angles[0]), sx = std::sin(angles[0]);
    const double cy = std::cos(angles[1]), sy = std::sin(angles[1]);
    const double cz = std::cos(angles[2]), sz = std::sin(angles[2]);
    // R = Rx * Ry * Rz
    return {cy * cz, -cy * sz, sy,
            cx * sz + sx * sy * cz, cx * cz - sx * sy * sz, -sx * cy,
            sx * sz - cx * sy * cz, sx * cz + cx * sy * sz, cx * cy};
}

Vec3 apply_rot(const std::array<double, 9>& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

std::array<double, 9> mat_mul(const std::array<double, 9>& a, const std::array<double, 9>& b) {
    std::array<double, 9> c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[static_cast<size_t>(i * 3 + j)] += a[static_cast<size_t>(i * 3 + k)] * b[static_cast<size_t>(k * 3 + j)];
    return c;
}

}  // namespace

ToyBodySpec ToyBodySpec::default_body() {
    ToyBodySpec spec;
    spec.skeleton = parse_skeleton_text({
        "pelvis     -          0",
        "spine      pelvis     0.32   0     1    0",
        "head       spine      0.22   0     1    0",
        "l_shoulder spine      0.20  -0.95  0.3  0",
        "l_elbow    l_shoulder 0.28  -0.15 -1    0",
        "l_wrist    l_elbow    0.26   0    -1    0",
        "r_shoulder spine      0.20   0.95  0.3  0",
        "r_elbow    r_shoulder 0.28   0.15 -1    0",
        "r_wrist    r_elbow    0.26   0    -1    0",
        "l_knee     pelvis     0.42  -0.25 -1    0",
        "r_knee     pelvis     0.42   0.25 -1    0",
    });
    return spec;
}

void ToyBodySpec::validate() const {
    if (skeleton.size() < 2) throw ConfigError("body: skeleton needs at least 2 joints");
    if (ring_vertices < 3) throw ConfigError("body: ring_vertices must be >= 3");
    if (rings_per_bone < 2) throw ConfigError("body: rings_per_bone must be >= 2");
    if (stub_rings < 0) throw ConfigError("body: stub_rings must be >= 0");
    if (!(tube_radius > 0.0)) throw ConfigError("body: tube_radius must be positive");
    if (coarse_divisor < 1) throw ConfigError("body: coarse_divisor must be >= 1");
}

namespace {

std::vector<Vec3> rest_positions(const SkeletonDesc& desc) {
    const int n = desc.size();
    std::vector<Vec3> pos(static_cast<size_t>(n));
    std::vector<int> depth(static_cast<size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
        const int p = desc.parents[static_cast<size_t>(j)];
        if (p < 0) {
            pos[static_cast<size_t>(j)] = {0.0, 0.0, 0.0};
            continue;
        }
        depth[static_cast<size_t>(j)] = depth[static_cast<size_t>(p)] + 1;
        Vec3 dir = desc.has_direction[static_cast<size_t>(j)]
                       ? desc.directions[static_cast<size_t>(j)]
                       : fallback_direction(j, depth[static_cast<size_t>(j)]);
        dir = normalized(dir);
        const double len = desc.lengths[static_cast<size_t>(j)];
        for (int c = 0; c < 3; ++c) pos[static_cast<size_t>(j)][static_cast<size_t>(c)] =
            pos[static_cast<size_t>(p)][static_cast<size_t>(c)] + len * dir[static_cast<size_t>(c)];
    }
    return pos;
}

}  // namespace

Body generate_toy_body(const ToyBodySpec& spec) {
    spec.validate();
    Body body;
    body.spec = spec;
    const auto& desc = spec.skeleton;
    const int n = desc.size();
    body.rest_joints = rest_positions(desc);

    std::vector<double> lengths(static_cast<size_t>(n), 0.0);
    std::vector<int> child_count(static_cast<size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
        const int p = desc.parents[static_cast<size_t>(j)];
        if (p >= 0) {
            Vec3 d{body.rest_joints[static_cast<size_t>(j)][0] - body.rest_joints[static_cast<size_t>(p)][0],
                   body.rest_joints[static_cast<size_t>(j)][1] - body.rest_joints[static_cast<size_t>(p)][1],
                   body.rest_joints[static_cast<size_t>(j)][2] - body.rest_joints[static_cast<size_t>(p)][2]};
            lengths[static_cast<size_t>(j)] = norm(d);
            ++child_count[static_cast<size_t>(p)];
        }
    }
    body.graph = SkeletonGraph::from_tree(desc.parents, lengths);

    std::vector<double> verts;
    std::vector<std::array<int, 3>> faces;
    std::vector<double> weights;  // [V, n] row-major
    const int rv = spec.ring_vertices;
    const double step = 1.0 / static_cast<double>(spec.rings_per_bone - 1);

    for (int j = 0; j < n; ++j) {
        const int p = desc.parents[static_cast<size_t>(j)];
        if (p < 0) continue;
        const bool leaf = child_count[static_cast<size_t>(j)] == 0;
        const int ring_count = spec.rings_per_bone + (leaf ? spec.stub_rings : 0);

        const Vec3 a = normalized({body.rest_joints[static_cast<size_t>(j)][0] - body.rest_joints[static_cast<size_t>(p)][0],
                                   body.rest_joints[static_cast<size_t>(j)][1] - body.rest_joints[static_cast<size_t>(p)][1],
                                   body.rest_joints[static_cast<size_t>(j)][2] - body.rest_joints[static_cast<size_t>(p)][2]});
        Vec3 ref = {1, 0, 0};
        if (std::fabs(a[1]) < std::fabs(a[0]) && std::fabs(a[1]) <= std::fabs(a[2])) ref = {0, 1, 0};
        else if (std::fabs(a[2]) < std::fabs(a[0])) ref = {0, 0, 1};
        const Vec3 u = normalized(cross(ref, a));
        const Vec3 v = cross(a, u);

        const int base = static_cast<int>(verts.size() / 3);
        for (int r = 0; r < ring_count; ++r) {
            const double t = step * r;
            Vec3 center;
            for (int c = 0; c < 3; ++c) {
                center[static_cast<size_t>(c)] = body.rest_joints[static_cast<size_t>(p)][static_cast<size_t>(c)] +
                    t * lengths[static_cast<size_t>(j)] * a[static_cast<size_t>(c)];
            }
            for (int i = 0; i < rv; ++i) {
                const double ang = 2.0 * 3.141592653589793 * i / rv;
                for (int c = 0; c < 3; ++c) {
                    verts.push_back(center[static_cast<size_t>(c)] +
                                    spec.tube_radius * (std::cos(ang) * u[static_cast<size_t>(c)] +
                                                        std::sin(ang) * v[static_cast<size_t>(c)]));
                }
                // tent weights along the bone; stub rings stay rigid on the child
                const double wc = std::min(t, 1.0);
                std::vector<double> row(static_cast<size_t>(n), 0.0);
                row[static_cast<size_t>(j)] = wc;
                row[static_cast<size_t>(p)] = 1.0 - wc;
                weights.insert(weights.end(), row.begin(), row.end());
            }
        }
        for (int r = 0; r + 1 < ring_count; ++r) {
            for (int i = 0; i < rv; ++i) {
                const int i2 = (i + 1) % rv;
                const int v00 = base + r * rv + i, v01 = base + r * rv + i2;
                const int v10 = base + (r + 1) * rv + i, v11 = base + (r + 1) * rv + i2;
                faces.push_back({v00, v01, v10});
                faces.push_back({v01, v11, v10});
            }
        }
    }

    const int total_v = static_cast<int>(verts.size() / 3);
    Tensor template_full = Tensor::from_values({total_v, 3}, std::move(verts));
    body.skin_weights = Tensor::from_values({total_v, n}, std::move(weights));

    // regressor: per-joint normalized skinning mass
    Tensor reg = Tensor::zeros({n, total_v});
    std::vector<double> mass(static_cast<size_t>(n), 0.0);
    for (int vtx = 0; vtx < total_v; ++vtx)
        for (int j = 0; j < n; ++j) mass[static_cast<size_t>(j)] += body.skin_weights.at(vtx, j);
    for (int j = 0; j < n; ++j) {
        if (mass[static_cast<size_t>(j)] <= 0.0) {
            throw ConfigError("body: joint '" + desc.names[static_cast<size_t>(j)] + "' has no skinning mass");
        }
        for (int vtx = 0; vtx < total_v; ++vtx) reg.at(j, vtx) = body.skin_weights.at(vtx, j) / mass[static_cast<size_t>(j)];
    }

    body.topo = build_mesh_topology(template_full, std::move(faces), reg, spec.coarse_divisor);

    double ymin = template_full.at(0, 1), ymax = ymin;
    for (int vtx = 0; vtx < total_v; ++vtx) {
        ymin = std::min(ymin, template_full.at(vtx, 1));
        ymax = std::max(ymax, template_full.at(vtx, 1));
    }
    body.height = ymax - ymin;
    return body;
}

Body body_from_template(const ToyBodySpec& spec, Tensor vertices,
                        std::vector<std::array<int, 3>> faces, Tensor regressor) {
    spec.validate();
    const int n = spec.skeleton.size();
    if (regressor.rows() != n) {
        throw ConfigError("external template: regressor has " + std::to_string(regressor.rows()) +
                          " joints, skeleton has " + std::to_string(n));
    }
    if (regressor.cols() != vertices.rows()) {
        throw ConfigError("external template: regressor columns do not match vertex count");
    }
    Body body;
    body.spec = spec;

    const int v = vertices.rows();
    body.skin_weights = Tensor::zeros({v, n});
    for (int vtx = 0; vtx < v; ++vtx) {
        double col = 0.0;
        for (int j = 0; j < n; ++j) col += regressor.at(j, vtx);
        if (col > 0.0) {
            for (int j = 0; j < n; ++j) body.skin_weights.at(vtx, j) = regressor.at(j, vtx) / col;
        } else {
            body.skin_weights.at(vtx, 0) = 1.0;
        }
    }

    body.topo = build_mesh_topology(vertices, std::move(faces), regressor, spec.coarse_divisor);
    Tensor joints = body.topo.template_joints();
    body.rest_joints.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
        for (int c = 0; c < 3; ++c) body.rest_joints[static_cast<size_t>(j)][static_cast<size_t>(c)] = joints.at(j, c);

    std::vector<double> lengths(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        const int p = spec.skeleton.parents[static_cast<size_t>(j)];
        if (p < 0) continue;
        Vec3 d{body.rest_joints[static_cast<size_t>(j)][0] - body.rest_joints[static_cast<size_t>(p)][0],
               body.rest_joints[static_cast<size_t>(j)][1] - body.rest_joints[static_cast<size_t>(p)][1],
               body.rest_joints[static_cast<size_t>(j)][2] - body.rest_joints[static_cast<size_t>(p)][2]};
        lengths[static_cast<size_t>(j)] = std::max(norm(d), 1e-6);
    }
    body.graph = SkeletonGraph::from_tree(spec.skeleton.parents, lengths);

    double ymin = vertices.at(0, 1), ymax = ymin;
    for (int vtx = 0; vtx < v; ++vtx) {
        ymin = std::min(ymin, vertices.at(vtx, 1));
        ymax = std::max(ymax, vertices.at(vtx, 1));
    }
    body.height = ymax - ymin;
    return body;
}

JointTransforms forward_kinematics(const Body& body, const std::vector<std::array<double, 3>>& euler) {
    const int n = body.spec.skeleton.size();
    if (static_cast<int>(euler.size()) != n) throw ContractError("forward_kinematics: angle count mismatch");
    JointTransforms g;
    g.rot.resize(static_cast<size_t>(n));
    g.trans.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        const auto local = euler_xyz(euler[static_cast<size_t>(j)]);
        const Vec3& pj = body.rest_joints[static_cast<size_t>(j)];
        const Vec3 lj = apply_rot(local, pj);
        const Vec3 local_t = {pj[0] - lj[0], pj[1] - lj[1], pj[2] - lj[2]};
        const int p = body.spec.skeleton.parents[static_cast<size_t>(j)];
        if (p < 0) {
            g.rot[static_cast<size_t>(j)] = local;
            g.trans[static_cast<size_t>(j)] = local_t;
        } else {
            g.rot[static_cast<size_t>(j)] = mat_mul(g.rot[static_cast<size_t>(p)], local);
            const Vec3 mt = apply_rot(g.rot[static_cast<size_t>(p)], local_t);
            for (int c = 0; c < 3; ++c) {
                g.trans[static_cast<size_t>(j)][static_cast<size_t>(c)] =
                    mt[static_cast<size_t>(c)] + g.trans[static_cast<size_t>(p)][static_cast<size_t>(c)];
            }
        }
    }
    return g;
}

Tensor linear_blend_skinning(const Body& body, const JointTransforms& g) {
    const int v = body.topo.full_count();
    const int n = body.spec.skeleton.size();
    Tensor out = Tensor::zeros({v, 3});
    for (int vtx = 0; vtx < v; ++vtx) {
        const Vec3 rest = {body.topo.template_full.at(vtx, 0), body.topo.template_full.at(vtx, 1),
                           body.topo.template_full.at(vtx, 2)};
        Vec3 acc = {0, 0, 0};
        for (int j = 0; j < n; ++j) {
            const double w = body.skin_weights.at(vtx, j);
            if (w == 0.0) continue;
            const Vec3 moved = apply_rot(g.rot[static_cast<size_t>(j)], rest);
            for (int c = 0; c < 3; ++c) {
                acc[static_cast<size_t>(c)] += w * (moved[static_cast<size_t>(c)] +
                                                    g.trans[static_cast<size_t>(j)][static_cast<size_t>(c)]);
            }
        }
        for (int c = 0; c < 3; ++c) out.at(vtx, c) = acc[static_cast<size_t>(c)];
    }
    return out;
}

Sample synthesize_sample(const Body& body, Rng& rng, double noise_sigma, double angle_range) {
    const int n = body.spec.skeleton.size();
    std::vector<std::array<double, 3>> euler(static_cast<size_t>(n));
    for (auto& e : euler)
        for (double& a : e) a = rng.uniform(-angle_range, angle_range);

    Sample s;
    s.gt_mesh = linear_blend_skinning(body, forward_kinematics(body, euler));
    s.gt_pose3d = matmul(body.topo.joint_regressor, s.gt_mesh);
    s.pose2d = Tensor::zeros({n, 2});
    for (int j = 0; j < n; ++j) {
        s.pose2d.at(j, 0) = s.gt_pose3d.at(j, 0) + noise_sigma * rng.normal();
        s.pose2d.at(j, 1) = s.gt_pose3d.at(j, 1) + noise_sigma * rng.normal();
    }
    return s;
}

}  // namespace gator
