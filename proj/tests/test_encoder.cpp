#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gator/encoder.hpp"
#include "gator/gradcheck.hpp"
#include "gator/ops.hpp"

using namespace gator;

namespace {

SkeletonGraph chain(int n) {
    SkeletonGraph g;
    g.num_joints = n;
    for (int j = 1; j < n; ++j) {
        g.edges.emplace_back(j - 1, j);
        g.bone_lengths.push_back(0.5 + 0.1 * j);
    }
    return g;
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values_mut()) v = rng.uniform(lo, hi);
    return t;
}

void randomize_params(ParamSet& ps, Rng& rng, double scale = 0.5) {
    for (auto& [name, t] : ps.items()) {
        Tensor tt = t;
        for (double& v : tt.values_mut()) v = rng.uniform(-scale, scale);
    }
}

struct TestEncoder {
    EncoderConfig cfg;
    GraphArtifacts graph;
    ParamSet ps;
    EncoderParams params;

    TestEncoder(EncoderConfig c, const SkeletonGraph& g, uint64_t seed) : cfg(c), graph(build_graph_artifacts(g)) {
        Rng rng(seed);
        params = init_encoder_params(cfg, g.num_joints, graph.hops.max_hop, rng, ps);
    }

    EncoderOutput forward(const Tensor& pose2d) {
        auto ctx = build_encoder_context(cfg, graph, params);
        return encoder_forward(pose2d, params, ctx);
    }
};

}  // namespace

TEST_CASE("attention logits: zero input, single joint, loop oracle") {
    Rng rng(1);
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.dim = 8;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(4), 7);
    const auto& ap = enc.params.layers[0].attn;

    SUBCASE("zero features give zero logits") {
        Tensor x = Tensor::zeros({4, 8});
        for (const auto& a : attention_logits(x, ap, 2))
            for (double v : a.values()) CHECK(v == 0.0);
    }

    SUBCASE("single joint gives the 1x1 formula") {
        Tensor x = random_tensor({1, 8}, rng);
        auto logits = attention_logits(x, ap, 2);
        for (int h = 0; h < 2; ++h) {
            double q[4], k[4];
            for (int t = 0; t < 4; ++t) {
                q[t] = ap.bq.values()[static_cast<size_t>(h * 4 + t)];
                k[t] = ap.bk.values()[static_cast<size_t>(h * 4 + t)];
                for (int c = 0; c < 8; ++c) {
                    q[t] += x.at(0, c) * ap.wq.at(c, h * 4 + t);
                    k[t] += x.at(0, c) * ap.wk.at(c, h * 4 + t);
                }
            }
            double expect = 0.0;
            for (int t = 0; t < 4; ++t) expect += q[t] * k[t];
            expect /= std::sqrt(4.0);
            CHECK(logits[static_cast<size_t>(h)].value() == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    SUBCASE("random features match the per-pair loop oracle") {
        Tensor x = random_tensor({4, 8}, rng);
        auto logits = attention_logits(x, ap, 2);
        for (int h = 0; h < 2; ++h) {
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    double dot = 0.0;
                    for (int t = 0; t < 4; ++t) {
                        double qi = ap.bq.values()[static_cast<size_t>(h * 4 + t)];
                        double kj = ap.bk.values()[static_cast<size_t>(h * 4 + t)];
                        for (int c = 0; c < 8; ++c) {
                            qi += x.at(i, c) * ap.wq.at(c, h * 4 + t);
                            kj += x.at(j, c) * ap.wk.at(c, h * 4 + t);
                        }
                        dot += qi * kj;
                    }
                    CHECK(logits[static_cast<size_t>(h)].at(i, j) ==
                          doctest::Approx(dot / 2.0).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("ga_sa: zero encodings match disabled flags bit-for-bit") {
    Rng rng(3);
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.dim = 8;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(5), 11);
    randomize_params(enc.ps, rng);
    Tensor x = random_tensor({5, 8}, rng);
    std::vector<Tensor> zero_bias = {Tensor::zeros({5, 5}), Tensor::zeros({5, 5})};
    const auto& ap = enc.params.layers[0].attn;
    Tensor with_zero = ga_sa_forward(x, zero_bias, zero_bias, ap, 2, true, true);
    Tensor without = ga_sa_forward(x, {}, {}, ap, 2, false, false);
    CHECK(max_abs_diff(with_zero, without) == 0.0);
}

TEST_CASE("ga_sa: a huge hop bias saturates the attention row") {
    Rng rng(5);
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.dim = 8;
    cfg.heads = 1;
    TestEncoder enc(cfg, chain(4), 13);
    Tensor x = Tensor::zeros({4, 8});  // raw logits all zero
    std::vector<Tensor> he = {Tensor::zeros({4, 4})};
    he[0].at(1, 3) = 1e6;
    LayerCapture cap;
    ga_sa_forward(x, he, {}, enc.params.layers[0].attn, 1, true, false, &cap);
    CHECK(cap[0].attention[1 * 4 + 3] > 0.999);
}

TEST_CASE("ga_sa: Eq-3 style additivity is exact in the stated order") {
    Rng rng(9);
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.dim = 8;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(5), 17);
    randomize_params(enc.ps, rng);
    auto ctx = build_encoder_context(cfg, enc.graph, enc.params);
    // give the bias tensors real values
    Tensor he0 = random_tensor({5, 5}, rng), he1 = random_tensor({5, 5}, rng);
    Tensor pe0 = random_tensor({5, 5}, rng), pe1 = random_tensor({5, 5}, rng);
    std::vector<Tensor> he = {he0, he1}, pe = {pe0, pe1};
    Tensor x = random_tensor({5, 8}, rng);
    auto raw = attention_logits(x, enc.params.layers[0].attn, 2);
    for (int h = 0; h < 2; ++h) {
        Tensor on_on = add(add(raw[static_cast<size_t>(h)], he[static_cast<size_t>(h)]), pe[static_cast<size_t>(h)]);
        Tensor on_off = add(raw[static_cast<size_t>(h)], he[static_cast<size_t>(h)]);
        // logits(on,on) == logits(on,off) + PE, elementwise and bitwise
        CHECK(max_abs_diff(on_on, add(on_off, pe[static_cast<size_t>(h)])) == 0.0);
    }
}

TEST_CASE("gcn branch") {
    SUBCASE("identity adjacency (single node) reduces to relu(X Wg)") {
        Rng rng(2);
        Tensor x = random_tensor({1, 4}, rng);
        GcnParams p;
        p.weight = random_tensor({4, 4}, rng);
        p.adj_mod = Tensor::zeros({1, 1});
        Tensor adj = Tensor::from_values({1, 1}, {1.0});
        Tensor out = gcn_forward(x, adj, p);
        Tensor expect = relu(matmul(x, p.weight));
        CHECK(max_abs_diff(out, expect) == 0.0);
    }
    SUBCASE("identity weight mixes rows by the normalized adjacency") {
        Tensor x = Tensor::from_values({2, 2}, {1.0, 2.0, 3.0, 4.0});
        GcnParams p;
        p.weight = Tensor::from_values({2, 2}, {1, 0, 0, 1});
        p.adj_mod = Tensor::zeros({2, 2});
        Tensor adj = Tensor::from_values({2, 2}, {0.5, 0.5, 0.5, 0.5});
        Tensor out = gcn_forward(x, adj, p);
        CHECK(out.at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(out.at(0, 1) == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(out.at(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("2-joint hand computation") {
        Rng rng(6);
        Tensor x = random_tensor({2, 3}, rng, 0.1, 1.0);
        GcnParams p;
        p.weight = random_tensor({3, 3}, rng);
        p.adj_mod = random_tensor({2, 2}, rng, -0.1, 0.1);
        Tensor adj = Tensor::from_values({2, 2}, {0.5, 0.5, 0.5, 0.5});
        Tensor out = gcn_forward(x, adj, p);
        for (int i = 0; i < 2; ++i) {
            for (int c = 0; c < 3; ++c) {
                double mixed[3];
                for (int t = 0; t < 3; ++t) {
                    mixed[t] = 0.0;
                    for (int j = 0; j < 2; ++j) mixed[t] += (adj.at(i, j) + p.adj_mod.at(i, j)) * x.at(j, t);
                }
                double pre = 0.0;
                for (int t = 0; t < 3; ++t) pre += mixed[t] * p.weight.at(t, c);
                CHECK(out.at(i, c) == doctest::Approx(std::max(0.0, pre)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("sdga block: all-zero weights pass the input through") {
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.dim = 6;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(4), 23);
    for (auto& [name, t] : enc.ps.items()) {
        Tensor tt = t;
        for (double& v : tt.values_mut()) v = 0.0;
    }
    Rng rng(8);
    Tensor x = random_tensor({4, 6}, rng);
    auto ctx = build_encoder_context(cfg, enc.graph, enc.params);
    Tensor out = sdga_block(x, enc.params.layers[0], ctx, 0);
    CHECK(max_abs_diff(out, x) == 0.0);
}

TEST_CASE("sdga block: disabling gcn gives the plain biased-attention block") {
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.dim = 8;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(4), 29);
    Rng rng(10);
    randomize_params(enc.ps, rng);
    Tensor x = random_tensor({4, 8}, rng);

    EncoderConfig off = cfg;
    off.enable_gcn = false;
    auto ctx_off = build_encoder_context(off, enc.graph, enc.params);
    Tensor got = sdga_block(x, enc.params.layers[0], ctx_off, 0);

    const auto& p = enc.params.layers[0];
    Tensor normed = ln_affine(x, p.ln_attn);
    Tensor y = add(x, ga_sa_forward(normed, ctx_off.biases[0].he, ctx_off.biases[0].pe, p.attn, 2, true, true));
    Tensor expect = add(y, ffn_forward(ln_affine(y, p.ln_ffn), p.ffn));
    CHECK(max_abs_diff(got, expect) == 0.0);
}

TEST_CASE("sdga block gradients match finite differences") {
    EncoderConfig cfg;
    cfg.layers = 1;
    cfg.dim = 8;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(6), 31);
    Rng rng(12);
    randomize_params(enc.ps, rng);
    Tensor x = random_tensor({6, 8}, rng);
    Tensor probe = random_tensor({6, 8}, rng, 0.1, 1.0);
    auto loss = [&]() {
        auto ctx = build_encoder_context(cfg, enc.graph, enc.params);
        return sum_all(mul(sdga_block(x, enc.params.layers[0], ctx, 0), probe));
    };
    auto report = finite_diff_check(loss, enc.ps.items(), 1e-6);
    CHECK(report.finite);
    CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("encoder forward: determinism and NaN rejection") {
    EncoderConfig cfg;
    cfg.layers = 2;
    cfg.dim = 8;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(5), 37);
    Rng rng(14);
    randomize_params(enc.ps, rng);
    Tensor pose = random_tensor({5, 2}, rng);
    auto a = enc.forward(pose);
    auto b = enc.forward(pose);
    CHECK(max_abs_diff(a.joint_features, b.joint_features) == 0.0);
    CHECK(max_abs_diff(a.pose3d, b.pose3d) == 0.0);

    Tensor bad = pose;
    bad.at(2, 1) = std::nan("");
    CHECK_THROWS_AS(enc.forward(bad), DataError);
}

TEST_CASE("encoder is permutation-equivariant without positional embeddings") {
    EncoderConfig cfg;
    cfg.layers = 2;
    cfg.dim = 8;
    cfg.heads = 2;
    cfg.enable_pos_embed = false;
    Rng rng(16);
    SkeletonGraph g = chain(6);

    for (int trial = 0; trial < 5; ++trial) {
        std::vector<int> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = 5; i > 0; --i) std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(rng.uniform_int(0, i))]);

        SkeletonGraph pg;
        pg.num_joints = 6;
        for (size_t e = 0; e < g.edges.size(); ++e) {
            int a = perm[static_cast<size_t>(g.edges[e].first)];
            int b = perm[static_cast<size_t>(g.edges[e].second)];
            pg.edges.emplace_back(std::min(a, b), std::max(a, b));
            pg.bone_lengths.push_back(g.bone_lengths[e]);
        }

        TestEncoder e1(cfg, g, 41);
        TestEncoder e2(cfg, pg, 41);
        // same seeds give identical weights; graph-indexed params must be permuted by hand
        Rng vals(100 + static_cast<uint64_t>(trial));
        randomize_params(e1.ps, vals);
        for (size_t p = 0; p < e1.ps.items().size(); ++p) {
            const auto& [name, src] = e1.ps.items()[p];
            Tensor dst = e2.ps.items()[p].second;
            if (name.find("adj_mod") != std::string::npos) {
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j)
                        dst.at(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]) = src.at(i, j);
            } else {
                std::copy(src.values().begin(), src.values().end(), dst.values_mut().begin());
            }
        }

        Tensor pose = random_tensor({6, 2}, vals);
        Tensor ppose = Tensor::zeros({6, 2});
        for (int i = 0; i < 6; ++i)
            for (int c = 0; c < 2; ++c) ppose.at(perm[static_cast<size_t>(i)], c) = pose.at(i, c);

        auto out = e1.forward(pose);
        auto pout = e2.forward(ppose);
        double worst = 0.0;
        for (int i = 0; i < 6; ++i) {
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst, std::fabs(out.pose3d.at(i, c) - pout.pose3d.at(perm[static_cast<size_t>(i)], c)));
            for (int c = 0; c < 8; ++c)
                worst = std::max(worst, std::fabs(out.joint_features.at(i, c) -
                                                  pout.joint_features.at(perm[static_cast<size_t>(i)], c)));
        }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("ablation flags: no-op at zero-init encodings, effective after one step") {
    EncoderConfig on;
    on.layers = 1;
    on.dim = 8;
    on.heads = 2;
    EncoderConfig off = on;
    off.enable_he = false;
    off.enable_pe = false;
    TestEncoder enc(on, chain(5), 43);
    Rng rng(18);
    Tensor pose = random_tensor({5, 2}, rng);

    auto fwd = [&](const EncoderConfig& c) {
        auto ctx = build_encoder_context(c, enc.graph, enc.params);
        return encoder_forward(pose, enc.params, ctx).pose3d;
    };
    CHECK(max_abs_diff(fwd(on), fwd(off)) == 0.0);  // tables still zero

    // push a gradient through the encoding tables, then the flags must matter
    {
        Tape tape;
        Tape::Scope scope(tape);
        auto ctx = build_encoder_context(on, enc.graph, enc.params);
        Tensor out = encoder_forward(pose, enc.params, ctx).pose3d;
        tape.backward(sum_all(mul(out, out)));
    }
    Tensor hop_table = enc.ps.get("encoder.graph_enc.hop_table");
    bool moved = false;
    auto g = hop_table.grad();
    for (size_t i = 0; i < g.size(); ++i) {
        if (g[i] != 0.0) {
            hop_table.values_mut()[i] -= 0.1 * g[i];
            moved = true;
        }
    }
    CHECK(moved);
    CHECK(max_abs_diff(fwd(on), fwd(off)) > 0.0);
}

TEST_CASE("full encoder loss gradients match finite differences (N=6, d=8)") {
    EncoderConfig cfg;
    cfg.layers = 2;
    cfg.dim = 8;
    cfg.heads = 2;
    TestEncoder enc(cfg, chain(6), 47);
    Rng rng(20);
    Tensor pose = random_tensor({6, 2}, rng);
    Tensor target = random_tensor({6, 3}, rng);
    auto loss = [&]() {
        auto ctx = build_encoder_context(cfg, enc.graph, enc.params);
        Tensor diff = sub(encoder_forward(pose, enc.params, ctx).pose3d, target);
        return mean_all(mul(diff, diff));
    };
    auto report = finite_diff_check(loss, enc.ps.items(), 1e-6);
    CHECK(report.finite);
    CHECK(report.max_rel_error < 1e-5);
}
