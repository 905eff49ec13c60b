#include "gator/decoder.hpp"

#include <cmath>

#include "gator/error.hpp"
#include "gator/ops.hpp"

namespace gator {

void DecoderConfig::validate() const {
    if (layers < 1) throw ConfigError("decoder: layers must be >= 1");
    if (dim < 1 || heads < 1) throw ConfigError("decoder: dim and heads must be positive");
    if (dim % heads != 0) throw ConfigError("decoder: dim " + std::to_string(dim) +
                                            " not divisible by heads " + std::to_string(heads));
    if (base_motions < 1) throw ConfigError("decoder: base_motions must be >= 1");
}

namespace {

CrossAttnParams init_cross(int dim, Rng& rng, ParamSet& ps, const std::string& prefix) {
    CrossAttnParams p;
    p.ln_q = init_layer_norm(dim, ps, prefix + ".ln_q");
    p.ln_kv = init_layer_norm(dim, ps, prefix + ".ln_kv");
    p.wq = ps.add(prefix + ".wq", xavier_uniform({dim, dim}, rng));
    p.bq = ps.add(prefix + ".bq", Tensor::zeros({1, dim}));
    p.wk = ps.add(prefix + ".wk", xavier_uniform({dim, dim}, rng));
    p.bk = ps.add(prefix + ".bk", Tensor::zeros({1, dim}));
    p.wv = ps.add(prefix + ".wv", xavier_uniform({dim, dim}, rng));
    p.bv = ps.add(prefix + ".bv", Tensor::zeros({1, dim}));
    p.wo = ps.add(prefix + ".wo", xavier_uniform({dim, dim}, rng));
    p.bo = ps.add(prefix + ".bo", Tensor::zeros({1, dim}));
    return p;
}

AttentionParams init_self(int dim, Rng& rng, ParamSet& ps, const std::string& prefix) {
    AttentionParams p;
    p.wq = ps.add(prefix + ".wq", xavier_uniform({dim, dim}, rng));
    p.bq = ps.add(prefix + ".bq", Tensor::zeros({1, dim}));
    p.wk = ps.add(prefix + ".wk", xavier_uniform({dim, dim}, rng));
    p.bk = ps.add(prefix + ".bk", Tensor::zeros({1, dim}));
    p.wv = ps.add(prefix + ".wv", xavier_uniform({dim, dim}, rng));
    p.bv = ps.add(prefix + ".bv", Tensor::zeros({1, dim}));
    p.wo = ps.add(prefix + ".wo", xavier_uniform({dim, dim}, rng));
    p.bo = ps.add(prefix + ".bo", Tensor::zeros({1, dim}));
    return p;
}

FfnParams init_ffn2(int dim, Rng& rng, ParamSet& ps, const std::string& prefix) {
    FfnParams p;
    p.w1 = ps.add(prefix + ".w1", xavier_uniform({dim, 2 * dim}, rng));
    p.b1 = ps.add(prefix + ".b1", Tensor::zeros({1, 2 * dim}));
    p.w2 = ps.add(prefix + ".w2", xavier_uniform({2 * dim, dim}, rng));
    p.b2 = ps.add(prefix + ".b2", Tensor::zeros({1, dim}));
    return p;
}

}  // namespace

DecoderParams init_decoder_params(const DecoderConfig& cfg, int encoder_dim, const MeshTopology& topo,
                                  Rng& rng, ParamSet& ps, const std::string& prefix) {
    cfg.validate();
    DecoderParams p;
    const int d = cfg.dim;
    const int m = cfg.base_motions;
    const int vc = topo.coarse_count();
    p.joint_w = ps.add(prefix + ".joint_w", xavier_uniform({5 + encoder_dim, d}, rng));
    p.joint_b = ps.add(prefix + ".joint_b", Tensor::zeros({1, d}));
    p.vertex_w = ps.add(prefix + ".vertex_w", xavier_uniform({6, d}, rng));
    p.vertex_b = ps.add(prefix + ".vertex_b", Tensor::zeros({1, d}));
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string lp = prefix + ".lbf" + std::to_string(l);
        LbfLayerParams layer;
        layer.cross = init_cross(d, rng, ps, lp + ".cross");
        layer.ln_self = init_layer_norm(d, ps, lp + ".ln_self");
        layer.self_attn = init_self(d, rng, ps, lp + ".self");
        layer.ln_ffn = init_layer_norm(d, ps, lp + ".ln_ffn");
        layer.ffn = init_ffn2(d, rng, ps, lp + ".ffn");
        p.layers.push_back(std::move(layer));
    }
    p.ln_final = init_layer_norm(d, ps, prefix + ".ln_final");

    // zero-init head outputs: the untrained model reproduces the template exactly
    p.head.is_static = cfg.head_params_static;
    p.head.base_motions = m;
    if (cfg.head_params_static) {
        p.head.static_ma = ps.add(prefix + ".head.static_ma", Tensor::zeros({vc, m}));
        p.head.static_mb = ps.add(prefix + ".head.static_mb", Tensor::zeros({m, 3}));
        p.head.static_mc = ps.add(prefix + ".head.static_mc", Tensor::zeros({vc, 3}));
        p.head.static_alpha_raw = ps.add(prefix + ".head.static_alpha_raw", Tensor::zeros({vc, 1}));
    } else {
        p.head.wa = ps.add(prefix + ".head.wa", Tensor::zeros({d, m}));
        p.head.ba = ps.add(prefix + ".head.ba", Tensor::zeros({1, m}));
        p.head.walpha = ps.add(prefix + ".head.walpha", Tensor::zeros({d, 1}));
        p.head.balpha = ps.add(prefix + ".head.balpha", Tensor::zeros({1, 1}));
        p.head.wc = ps.add(prefix + ".head.wc", Tensor::zeros({d, 3}));
        p.head.bc = ps.add(prefix + ".head.bc", Tensor::zeros({1, 3}));
        p.head.wb = ps.add(prefix + ".head.wb", Tensor::zeros({d, 3 * m}));
        p.head.bb = ps.add(prefix + ".head.bb", Tensor::zeros({1, 3 * m}));
    }
    p.linear_w = ps.add(prefix + ".linear_w", Tensor::zeros({d, 3}));
    p.linear_b = ps.add(prefix + ".linear_b", Tensor::zeros({1, 3}));

    Tensor u0 = Tensor::zeros({topo.full_count(), vc});
    std::copy(topo.upsample_init.values().begin(), topo.upsample_init.values().end(), u0.values_mut().begin());
    p.upsample = ps.add(prefix + ".upsample", u0);
    return p;
}

Tensor build_joint_tokens(const Tensor& pose2d, const Tensor& pose3d, const Tensor& joint_features,
                          const DecoderParams& p) {
    if (pose2d.rows() != pose3d.rows() || pose2d.rows() != joint_features.rows()) {
        throw ContractError("build_joint_tokens: row count mismatch");
    }
    if (pose2d.cols() != 2 || pose3d.cols() != 3) throw ContractError("build_joint_tokens: bad coordinate widths");
    Tensor tokens = concat({pose2d, pose3d, joint_features}, 1);
    return add_rowvec(matmul(tokens, p.joint_w), p.joint_b);
}

Tensor build_vertex_tokens(const MeshTopology& topo, const Tensor& pose3d, const DecoderParams& p) {
    if (pose3d.cols() != 3) throw ContractError("build_vertex_tokens: pose3d must be [N,3]");
    for (int idx : topo.nearest_joint) {
        if (idx < 0 || idx >= pose3d.rows()) throw ContractError("build_vertex_tokens: nearest_joint out of range");
    }
    // static template-derived assignment, dynamic predicted coordinate
    Tensor joint_coords = gather_rows(pose3d, topo.nearest_joint);
    Tensor tokens = concat({topo.template_coarse, joint_coords}, 1);
    return add_rowvec(matmul(tokens, p.vertex_w), p.vertex_b);
}

Tensor cross_attention(const Tensor& q_in, const Tensor& kv_in, const CrossAttnParams& p, int heads,
                       std::vector<Tensor>* maps) {
    const int dim = p.wq.cols();
    const int dh = dim / heads;
    Tensor q = add_rowvec(matmul(q_in, p.wq), p.bq);
    Tensor k = add_rowvec(matmul(kv_in, p.wk), p.bk);
    Tensor v = add_rowvec(matmul(kv_in, p.wv), p.bv);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> head_out;
    head_out.reserve(static_cast<size_t>(heads));
    if (maps) maps->clear();
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, dh);
        Tensor kh = slice_cols(k, h * dh, dh);
        Tensor att = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
        if (maps) maps->push_back(att);
        head_out.push_back(matmul(att, slice_cols(v, h * dh, dh)));
    }
    Tensor merged = heads == 1 ? head_out[0] : concat(head_out, 1);
    return add_rowvec(matmul(merged, p.wo), p.bo);
}

Tensor lbf_layer(const Tensor& xv, const Tensor& xj, const LbfLayerParams& p, int heads) {
    Tensor x = add(xv, cross_attention(ln_affine(xv, p.cross.ln_q), ln_affine(xj, p.cross.ln_kv), p.cross, heads));
    x = add(x, ga_sa_forward(ln_affine(x, p.ln_self), {}, {}, p.self_attn, heads, false, false));
    return add(x, ffn_forward(ln_affine(x, p.ln_ffn), p.ffn));
}

MDRHeadOutput compose_offsets(const Tensor& motion_logits, const Tensor& base_motions,
                              const Tensor& biases, const Tensor& alpha) {
    const int vc = motion_logits.rows();
    const int m = motion_logits.cols();
    if (base_motions.rows() != m || base_motions.cols() != 3) {
        throw ContractError("compose_offsets: base motions must be [m,3]");
    }
    if (biases.rows() != vc || biases.cols() != 3) throw ContractError("compose_offsets: biases must be [V_c,3]");
    if (alpha.rows() != vc || alpha.cols() != 1) throw ContractError("compose_offsets: alpha must be [V_c,1]");

    MDRHeadOutput out;
    out.motion_logits = motion_logits;
    out.base_motions = base_motions;
    out.biases = biases;
    out.alpha = alpha;
    out.motion_weights = softmax_rows(motion_logits);
    out.delta_coarse = add(mul_colvec(matmul(out.motion_weights, base_motions), alpha), biases);

    // per-forward identity checks on the assembled fields
    for (int i = 0; i < vc; ++i) {
        double sum = 0.0;
        for (int b = 0; b < m; ++b) sum += out.motion_weights.at(i, b);
        if (std::fabs(sum - 1.0) > 1e-12) throw DomainError("mdr head: motion weight row does not sum to 1");
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int b = 0; b < m; ++b) acc += out.motion_weights.at(i, b) * base_motions.at(b, c);
            acc = alpha.at(i, 0) * acc + biases.at(i, c);
            if (acc != out.delta_coarse.at(i, c)) throw ContractError("mdr head: offset identity violated");
        }
    }
    return out;
}

MDRHeadOutput mdr_head(const Tensor& xv, const MdrHeadParams& p) {
    if (p.base_motions < 1) throw ConfigError("mdr head: base_motions must be >= 1");
    if (p.is_static) {
        return compose_offsets(p.static_ma, p.static_mb, p.static_mc, softplus(p.static_alpha_raw));
    }
    Tensor ma = add_rowvec(matmul(xv, p.wa), p.ba);
    Tensor alpha = softplus(add_rowvec(matmul(xv, p.walpha), p.balpha));
    Tensor mc = add_rowvec(matmul(xv, p.wc), p.bc);
    Tensor pooled = mean_axis(xv, 0);  // sample-dependent base motions
    Tensor mb = reshape(add_rowvec(matmul(pooled, p.wb), p.bb), {p.base_motions, 3});
    return compose_offsets(ma, mb, mc, alpha);
}

Tensor upsample_offsets(const Tensor& delta_coarse, const Tensor& upsample) {
    if (upsample.cols() != delta_coarse.rows()) {
        throw ContractError("upsample_offsets: U is " + shape_str(upsample.shape()) + ", offsets are " +
                            shape_str(delta_coarse.shape()));
    }
    return matmul(upsample, delta_coarse);
}

DecoderOutput decoder_forward(const Tensor& pose2d, const Tensor& pose3d, const Tensor& joint_features,
                              const MeshTopology& topo, const DecoderParams& params, const DecoderConfig& cfg) {
    Tensor xj = build_joint_tokens(pose2d, pose3d, joint_features, params);
    Tensor xv = build_vertex_tokens(topo, pose3d, params);
    if (cfg.use_lbf) {
        for (const auto& layer : params.layers) xv = lbf_layer(xv, xj, layer, cfg.heads);
    }
    DecoderOutput out;
    out.vertex_features = ln_affine(xv, params.ln_final);
    if (cfg.head == RegressorHead::Mdr) {
        out.head = mdr_head(out.vertex_features, params.head);
        out.delta_coarse = out.head.delta_coarse;
    } else {
        out.delta_coarse = add_rowvec(matmul(out.vertex_features, params.linear_w), params.linear_b);
    }
    out.mesh = add(topo.template_full, upsample_offsets(out.delta_coarse, params.upsample));
    return out;
}

}  // namespace gator
