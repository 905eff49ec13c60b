#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gator/ops.hpp"
#include "gator/rng.hpp"
#include "gator/skeleton.hpp"

using namespace gator;

namespace {

SkeletonGraph chain3() {
    SkeletonGraph g;
    g.num_joints = 3;
    g.edges = {{0, 1}, {1, 2}};
    g.bone_lengths = {1.0, 1.0};
    return g;
}

SkeletonGraph random_connected_graph(Rng& rng, int n) {
    SkeletonGraph g;
    g.num_joints = n;
    // spanning tree first, then optional extra edges
    for (int j = 1; j < n; ++j) {
        const int p = rng.uniform_int(0, j - 1);
        g.edges.emplace_back(std::min(p, j), std::max(p, j));
        g.bone_lengths.push_back(rng.uniform(0.5, 2.0));
    }
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (rng.uniform() < 0.15 &&
                std::find(g.edges.begin(), g.edges.end(), std::make_pair(a, b)) == g.edges.end()) {
                g.edges.emplace_back(a, b);
                g.bone_lengths.push_back(rng.uniform(0.5, 2.0));
            }
        }
    }
    return g;
}

SkeletonGraph random_tree(Rng& rng, int n, std::vector<int>* parents_out = nullptr) {
    SkeletonGraph g;
    g.num_joints = n;
    std::vector<int> parents(static_cast<size_t>(n), -1);
    for (int j = 1; j < n; ++j) {
        parents[static_cast<size_t>(j)] = rng.uniform_int(0, j - 1);
        g.edges.emplace_back(std::min(parents[static_cast<size_t>(j)], j),
                             std::max(parents[static_cast<size_t>(j)], j));
        g.bone_lengths.push_back(rng.uniform(0.5, 2.0));
    }
    if (parents_out) *parents_out = parents;
    return g;
}

std::vector<std::vector<int>> floyd_warshall_hops(const SkeletonGraph& g) {
    const int n = g.num_joints;
    const int inf = 1 << 20;
    std::vector<std::vector<int>> d(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n), inf));
    for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)][static_cast<size_t>(i)] = 0;
    for (const auto& [a, b] : g.edges) {
        d[static_cast<size_t>(a)][static_cast<size_t>(b)] = 1;
        d[static_cast<size_t>(b)][static_cast<size_t>(a)] = 1;
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                    std::min(d[static_cast<size_t>(i)][static_cast<size_t>(j)],
                             d[static_cast<size_t>(i)][static_cast<size_t>(k)] +
                                 d[static_cast<size_t>(k)][static_cast<size_t>(j)]);
    return d;
}

double pe_value_oracle(const PathTable& paths, const GraphEncodingParams& p, int i, int j, int h) {
    const auto& seq = paths.at(i, j);
    if (seq.empty()) return 0.0;
    const auto w = p.path_weights.values();
    const auto few = p.edge_embed_w.values();
    const auto feb = p.edge_embed_b.values();
    double acc = 0.0;
    for (size_t k = 0; k < seq.size(); ++k) {
        for (int t = 0; t < p.edge_dim; ++t) {
            const double f_t = seq[k] * few[static_cast<size_t>(t)] + feb[static_cast<size_t>(t)];
            acc += w[(k * static_cast<size_t>(p.heads) + static_cast<size_t>(h)) * static_cast<size_t>(p.edge_dim) +
                     static_cast<size_t>(t)] * f_t;
        }
    }
    return acc / static_cast<double>(seq.size());
}

double nnh_at(const Tensor& t, int i, int j, int h) {
    const int n = t.extent(0), heads = t.extent(2);
    return t.values()[(static_cast<size_t>(i) * n + j) * heads + static_cast<size_t>(h)];
}

}  // namespace

TEST_CASE("hop matrix: chain and star") {
    auto hops = hop_distance_matrix(chain3());
    const std::vector<int> expect = {0, 1, 2, 1, 0, 1, 2, 1, 0};
    CHECK(hops.d == expect);
    CHECK(hops.max_hop == 2);

    SkeletonGraph star;
    star.num_joints = 5;
    for (int leaf = 1; leaf <= 4; ++leaf) {
        star.edges.emplace_back(0, leaf);
        star.bone_lengths.push_back(1.0);
    }
    auto h = hop_distance_matrix(star);
    for (int leaf = 1; leaf <= 4; ++leaf) CHECK(h.at(0, leaf) == 1);
    for (int a = 1; a <= 4; ++a)
        for (int b = 1; b <= 4; ++b)
            if (a != b) CHECK(h.at(a, b) == 2);
}

TEST_CASE("hop matrix equals Floyd-Warshall on 100 random connected graphs") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto g = random_connected_graph(rng, rng.uniform_int(2, 12));
        auto hops = hop_distance_matrix(g);
        auto oracle = floyd_warshall_hops(g);
        for (int i = 0; i < g.num_joints; ++i)
            for (int j = 0; j < g.num_joints; ++j)
                CHECK(hops.at(i, j) == oracle[static_cast<size_t>(i)][static_cast<size_t>(j)]);
    }
}

TEST_CASE("disconnected graph reports the unreachable pair") {
    SkeletonGraph g;
    g.num_joints = 3;
    g.edges = {{0, 1}};
    g.bone_lengths = {1.0};
    try {
        hop_distance_matrix(g);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("(0,2)") != std::string::npos);
    }
}

TEST_CASE("graph validation rejects self-loops, duplicates, bad lengths") {
    SkeletonGraph g = chain3();
    g.edges.emplace_back(2, 2);
    g.bone_lengths.push_back(1.0);
    CHECK_THROWS_AS(g.validate(), ConfigError);

    SkeletonGraph dup = chain3();
    dup.edges.emplace_back(0, 1);
    dup.bone_lengths.push_back(2.0);
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    SkeletonGraph bad = chain3();
    bad.bone_lengths[0] = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("path table: chain lengths and 4-cycle tie-break") {
    SkeletonGraph g = chain3();
    g.bone_lengths = {0.7, 1.3};
    auto paths = shortest_path_table(g);
    CHECK(paths.at(0, 2) == std::vector<double>{0.7, 1.3});
    CHECK(paths.at(2, 0) == std::vector<double>{1.3, 0.7});
    CHECK(paths.at(1, 1).empty());

    SkeletonGraph cyc;
    cyc.num_joints = 4;
    cyc.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
    cyc.bone_lengths = {1.0, 2.0, 3.0, 4.0};
    auto cp = shortest_path_table(cyc);
    // both 0-1-2 and 0-3-2 are shortest; lexicographic rule goes through joint 1
    CHECK(cp.at(0, 2) == std::vector<double>{1.0, 2.0});
    CHECK(cp.at(2, 0) == std::vector<double>{2.0, 1.0});
}

TEST_CASE("path table: tree paths sum to the unique tree distance") {
    Rng rng(4);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = rng.uniform_int(2, 12);
        std::vector<int> parents;
        auto g = random_tree(rng, n, &parents);
        auto paths = shortest_path_table(g);
        auto hops = hop_distance_matrix(g);

        // oracle: climb to root collecting prefix distances
        auto root_path_dist = [&](int v) {
            double dist = 0.0;
            std::vector<std::pair<int, double>> chain;  // (node, distance from v)
            int cur = v;
            chain.emplace_back(cur, 0.0);
            while (parents[static_cast<size_t>(cur)] >= 0) {
                dist += g.edge_length(cur, parents[static_cast<size_t>(cur)]);
                cur = parents[static_cast<size_t>(cur)];
                chain.emplace_back(cur, dist);
            }
            return chain;
        };
        for (int i = 0; i < n; ++i) {
            auto ci = root_path_dist(i);
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                auto cj = root_path_dist(j);
                double expect = -1.0;
                for (const auto& [ni, di] : ci) {
                    for (const auto& [nj, dj] : cj) {
                        if (ni == nj) {
                            expect = di + dj;
                            break;
                        }
                    }
                    if (expect >= 0.0) break;
                }
                const auto& seq = paths.at(i, j);
                CHECK(static_cast<int>(seq.size()) == hops.at(i, j));
                const double total = std::accumulate(seq.begin(), seq.end(), 0.0);
                CHECK(total == doctest::Approx(expect).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("hop encoding is a table lookup") {
    auto g = chain3();
    auto hops = hop_distance_matrix(g);
    const int heads = 2;

    SUBCASE("constant table rows give a constant encoding") {
        Tensor table = Tensor::full({3, heads}, 0.25);
        Tensor he = hop_encoding(hops, table);
        for (double v : he.values()) CHECK(v == 0.25);
    }
    SUBCASE("row lookups land where the hop says") {
        Tensor table = Tensor::from_values({3, heads}, {10, 11, 20, 21, 30, 31});  // rows r0, r1, r2
        Tensor he = hop_encoding(hops, table);
        CHECK(he.shape() == std::vector<int>{3, 3, heads});
        CHECK(nnh_at(he, 0, 0, 0) == 10);  // diagonal is row 0
        CHECK(nnh_at(he, 1, 1, 1) == 11);
        CHECK(nnh_at(he, 0, 1, 0) == 20);
        CHECK(nnh_at(he, 0, 2, 0) == 30);
        CHECK(nnh_at(he, 0, 2, 1) == 31);
    }
    SUBCASE("hop beyond the table is an index error") {
        Tensor small = Tensor::zeros({2, heads});  // chain needs hop 2 -> row 2
        CHECK_THROWS_AS(hop_encoding(hops, small), IndexError);
    }
}

TEST_CASE("path encoding: zero weights, single edge, oracle on a random tree") {
    Rng rng(17);

    SUBCASE("zero position weights give an all-zero encoding") {
        auto g = random_tree(rng, 7);
        auto hops = hop_distance_matrix(g);
        auto paths = shortest_path_table(g);
        ParamSet ps;
        auto params = init_graph_encoding_params(hops.max_hop, 4, 8, rng, ps, "enc");
        Tensor pe = path_encoding(paths, params);
        for (double v : pe.values()) CHECK(v == 0.0);
    }

    SUBCASE("single-edge path is one dot product") {
        SkeletonGraph g;
        g.num_joints = 2;
        g.edges = {{0, 1}};
        g.bone_lengths = {1.7};
        auto hops = hop_distance_matrix(g);
        auto paths = shortest_path_table(g);
        ParamSet ps;
        auto params = init_graph_encoding_params(hops.max_hop, 2, 3, rng, ps, "enc");
        for (double& v : params.path_weights.values_mut()) v = rng.uniform(-1, 1);
        Tensor pe = path_encoding(paths, params);
        for (int h = 0; h < 2; ++h) {
            double expect = 0.0;
            for (int t = 0; t < 3; ++t) {
                const double f_t = 1.7 * params.edge_embed_w.values()[static_cast<size_t>(t)] +
                                   params.edge_embed_b.values()[static_cast<size_t>(t)];
                expect += params.path_weights.values()[static_cast<size_t>(h * 3 + t)] * f_t;
            }
            CHECK(nnh_at(pe, 0, 1, h) == doctest::Approx(expect).epsilon(1e-14));
            CHECK(nnh_at(pe, 0, 0, h) == 0.0);  // diagonal fixed at zero
        }
    }

    SUBCASE("random 6-joint tree matches the direct re-computation") {
        auto g = random_tree(rng, 6);
        auto hops = hop_distance_matrix(g);
        auto paths = shortest_path_table(g);
        ParamSet ps;
        auto params = init_graph_encoding_params(hops.max_hop, 3, 5, rng, ps, "enc");
        for (double& v : params.path_weights.values_mut()) v = rng.uniform(-1, 1);
        for (double& v : params.edge_embed_b.values_mut()) v = rng.uniform(-1, 1);
        Tensor pe = path_encoding(paths, params);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                for (int h = 0; h < 3; ++h)
                    CHECK(nnh_at(pe, i, j, h) ==
                          doctest::Approx(pe_value_oracle(paths, params, i, j, h)).epsilon(1e-12));
    }
}

TEST_CASE("path encoding stores ordered pairs (asymmetric by design)") {
    // 2-edge chain with distinct position weights: reversing the path pairs
    // positions with different edges, so PE_ij != PE_ji in general.
    SkeletonGraph g = chain3();
    g.bone_lengths = {0.5, 2.0};
    auto hops = hop_distance_matrix(g);
    auto paths = shortest_path_table(g);
    Rng rng(5);
    ParamSet ps;
    auto params = init_graph_encoding_params(hops.max_hop, 1, 2, rng, ps, "enc");
    auto w = params.path_weights.values_mut();
    w[0] = 1.0;
    w[1] = 0.0;  // position 1 looks only at f[0]
    w[2] = 0.0;
    w[3] = 1.0;  // position 2 looks only at f[1]
    Tensor pe = path_encoding(paths, params);
    CHECK(nnh_at(pe, 0, 2, 0) != nnh_at(pe, 2, 0, 0));
}

TEST_CASE("normalized adjacency") {
    SUBCASE("single edge") {
        SkeletonGraph g;
        g.num_joints = 2;
        g.edges = {{0, 1}};
        g.bone_lengths = {1.0};
        Tensor a = normalized_adjacency(g);
        for (double v : a.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("chain of 3: symmetric, entries in [0,1], hand-checked middle row") {
        Tensor a = normalized_adjacency(chain3());
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                CHECK(a.at(i, j) == a.at(j, i));
                CHECK(a.at(i, j) >= 0.0);
                CHECK(a.at(i, j) <= 1.0);
            }
        }
        CHECK(a.at(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(a.at(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-15));
        CHECK(a.at(0, 2) == 0.0);
    }
    SUBCASE("spectral radius <= 1 on random graphs") {
        Rng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            auto g = random_connected_graph(rng, rng.uniform_int(2, 10));
            Tensor a = normalized_adjacency(g);
            const int n = g.num_joints;
            std::vector<double> v(static_cast<size_t>(n));
            for (double& x : v) x = rng.uniform(-1, 1);
            double lambda = 0.0;
            for (int it = 0; it < 500; ++it) {
                std::vector<double> w(static_cast<size_t>(n), 0.0);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) w[static_cast<size_t>(i)] += a.at(i, j) * v[static_cast<size_t>(j)];
                double norm = 0.0;
                for (double x : w) norm += x * x;
                norm = std::sqrt(norm);
                if (norm < 1e-300) break;
                for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = w[static_cast<size_t>(i)] / norm;
                lambda = norm;
            }
            CHECK(lambda <= 1.0 + 1e-9);  // |eigenvalues| of the normalized adjacency stay in [-1,1]
        }
    }
}

TEST_CASE("relabeling a tree permutes D, paths, adjacency, HE and PE consistently") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = rng.uniform_int(3, 10);
        auto g = random_tree(rng, n);
        std::vector<int> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(rng.uniform_int(0, i))]);

        SkeletonGraph pg;
        pg.num_joints = n;
        for (size_t e = 0; e < g.edges.size(); ++e) {
            const int a = perm[static_cast<size_t>(g.edges[e].first)];
            const int b = perm[static_cast<size_t>(g.edges[e].second)];
            pg.edges.emplace_back(std::min(a, b), std::max(a, b));
            pg.bone_lengths.push_back(g.bone_lengths[e]);
        }

        auto hops = hop_distance_matrix(g), phops = hop_distance_matrix(pg);
        auto paths = shortest_path_table(g), ppaths = shortest_path_table(pg);
        Tensor adj = normalized_adjacency(g), padj = normalized_adjacency(pg);
        ParamSet ps;
        auto params = init_graph_encoding_params(hops.max_hop, 2, 4, rng, ps, "enc");
        for (double& v : params.path_weights.values_mut()) v = rng.uniform(-1, 1);
        for (double& v : params.hop_table.values_mut()) v = rng.uniform(-1, 1);
        Tensor he = hop_encoding(hops, params.hop_table), phe = hop_encoding(phops, params.hop_table);
        Tensor pe = path_encoding(paths, params), ppe = path_encoding(ppaths, params);

        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const int pi = perm[static_cast<size_t>(i)], pj = perm[static_cast<size_t>(j)];
                CHECK(hops.at(i, j) == phops.at(pi, pj));
                CHECK(paths.at(i, j) == ppaths.at(pi, pj));
                CHECK(adj.at(i, j) == padj.at(pi, pj));
                for (int h = 0; h < 2; ++h) {
                    CHECK(nnh_at(he, i, j, h) == nnh_at(phe, pi, pj, h));
                    CHECK(nnh_at(pe, i, j, h) == nnh_at(ppe, pi, pj, h));
                }
            }
        }
    }
}

TEST_CASE("skeleton text parsing") {
    std::vector<std::string> lines = {
        "pelvis - 0",
        "spine pelvis 0.35",
        "head spine 0.25 0 1 0",
    };
    auto desc = parse_skeleton_text(lines);
    CHECK(desc.size() == 3);
    CHECK(desc.parents == std::vector<int>{-1, 0, 1});
    CHECK(desc.lengths[2] == 0.25);
    CHECK(desc.has_direction[2]);
    CHECK_FALSE(desc.has_direction[1]);

    CHECK_THROWS_AS(parse_skeleton_text({"a - 0", "b missing 1.0"}), ConfigError);
    CHECK_THROWS_AS(parse_skeleton_text({"a - 0", "b a 0.0"}), ConfigError);
    CHECK_THROWS_AS(parse_skeleton_text({"a - 0", "b - 0"}), ConfigError);
}
