#include "gator/encoder.hpp"

#include <cmath>

#include "gator/error.hpp"
#include "gator/ops.hpp"

namespace gator {

void EncoderConfig::validate() const {
    if (layers < 1) throw ConfigError("encoder: layers must be >= 1");
    if (dim < 1 || heads < 1) throw ConfigError("encoder: dim and heads must be positive");
    if (dim % heads != 0) throw ConfigError("encoder: dim " + std::to_string(dim) +
                                            " not divisible by heads " + std::to_string(heads));
    if (ffn_multiple < 1) throw ConfigError("encoder: ffn_multiple must be >= 1");
    if (edge_embed_dim < 1) throw ConfigError("encoder: edge_embed_dim must be >= 1");
}

LayerNormParams init_layer_norm(int dim, ParamSet& ps, const std::string& prefix) {
    LayerNormParams p;
    p.gamma = ps.add(prefix + ".gamma", Tensor::full({1, dim}, 1.0));
    p.beta = ps.add(prefix + ".beta", Tensor::zeros({1, dim}));
    return p;
}

Tensor ln_affine(const Tensor& x, const LayerNormParams& p) {
    return add_rowvec(mul_rowvec(layer_norm_rows(x, kLayerNormEps), p.gamma), p.beta);
}

namespace {

AttentionParams init_attention(int in_dim, int dim, Rng& rng, ParamSet& ps, const std::string& prefix) {
    AttentionParams p;
    p.wq = ps.add(prefix + ".wq", xavier_uniform({in_dim, dim}, rng));
    p.bq = ps.add(prefix + ".bq", Tensor::zeros({1, dim}));
    p.wk = ps.add(prefix + ".wk", xavier_uniform({in_dim, dim}, rng));
    p.bk = ps.add(prefix + ".bk", Tensor::zeros({1, dim}));
    p.wv = ps.add(prefix + ".wv", xavier_uniform({in_dim, dim}, rng));
    p.bv = ps.add(prefix + ".bv", Tensor::zeros({1, dim}));
    p.wo = ps.add(prefix + ".wo", xavier_uniform({dim, dim}, rng));
    p.bo = ps.add(prefix + ".bo", Tensor::zeros({1, dim}));
    return p;
}

FfnParams init_ffn(int dim, int hidden, Rng& rng, ParamSet& ps, const std::string& prefix) {
    FfnParams p;
    p.w1 = ps.add(prefix + ".w1", xavier_uniform({dim, hidden}, rng));
    p.b1 = ps.add(prefix + ".b1", Tensor::zeros({1, hidden}));
    p.w2 = ps.add(prefix + ".w2", xavier_uniform({hidden, dim}, rng));
    p.b2 = ps.add(prefix + ".b2", Tensor::zeros({1, dim}));
    return p;
}

}  // namespace

EncoderParams init_encoder_params(const EncoderConfig& cfg, int num_joints, int max_hop,
                                  Rng& rng, ParamSet& ps, const std::string& prefix) {
    cfg.validate();
    EncoderParams p;
    p.input_w = ps.add(prefix + ".input_w", xavier_uniform({2, cfg.dim}, rng));
    p.input_b = ps.add(prefix + ".input_b", Tensor::zeros({1, cfg.dim}));
    p.pos_embed = ps.add(prefix + ".pos_embed", Tensor::zeros({num_joints, cfg.dim}));
    const int n_enc = cfg.per_layer_graph_encodings ? cfg.layers : 1;
    for (int e = 0; e < n_enc; ++e) {
        p.encodings.push_back(init_graph_encoding_params(
            max_hop, cfg.heads, cfg.edge_embed_dim, rng, ps,
            prefix + ".graph_enc" + (cfg.per_layer_graph_encodings ? std::to_string(e) : std::string())));
    }
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string lp = prefix + ".layer" + std::to_string(l);
        EncoderLayerParams layer;
        layer.ln_attn = init_layer_norm(cfg.dim, ps, lp + ".ln_attn");
        layer.attn = init_attention(cfg.dim, cfg.dim, rng, ps, lp + ".attn");
        layer.gcn.weight = ps.add(lp + ".gcn.weight", xavier_uniform({cfg.dim, cfg.dim}, rng));
        layer.gcn.adj_mod = ps.add(lp + ".gcn.adj_mod", Tensor::zeros({num_joints, num_joints}));
        layer.ln_ffn = init_layer_norm(cfg.dim, ps, lp + ".ln_ffn");
        layer.ffn = init_ffn(cfg.dim, cfg.dim * cfg.ffn_multiple, rng, ps, lp + ".ffn");
        p.layers.push_back(std::move(layer));
    }
    p.ln_final = init_layer_norm(cfg.dim, ps, prefix + ".ln_final");
    p.pose_w = ps.add(prefix + ".pose_w", xavier_uniform({cfg.dim, 3}, rng));
    p.pose_b = ps.add(prefix + ".pose_b", Tensor::zeros({1, 3}));
    return p;
}

std::vector<Tensor> attention_logits(const Tensor& x, const AttentionParams& p, int heads) {
    const int dim = p.wq.cols();
    const int dh = dim / heads;
    Tensor q = add_rowvec(matmul(x, p.wq), p.bq);
    Tensor k = add_rowvec(matmul(x, p.wk), p.bk);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> logits;
    logits.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, dh);
        Tensor kh = slice_cols(k, h * dh, dh);
        logits.push_back(scale(matmul(qh, transpose(kh)), inv_sqrt));
    }
    return logits;
}

Tensor ga_sa_forward(const Tensor& x, const std::vector<Tensor>& he, const std::vector<Tensor>& pe,
                     const AttentionParams& p, int heads, bool use_he, bool use_pe,
                     LayerCapture* capture) {
    const int dim = p.wv.cols();
    const int dh = dim / heads;
    if (use_he && static_cast<int>(he.size()) != heads) throw ContractError("ga_sa: HE head count mismatch");
    if (use_pe && static_cast<int>(pe.size()) != heads) throw ContractError("ga_sa: PE head count mismatch");
    std::vector<Tensor> logits = attention_logits(x, p, heads);
    Tensor v = add_rowvec(matmul(x, p.wv), p.bv);
    std::vector<Tensor> head_ctx;
    head_ctx.reserve(static_cast<size_t>(heads));
    if (capture) capture->assign(static_cast<size_t>(heads), HeadCapture{});
    for (int h = 0; h < heads; ++h) {
        Tensor a = logits[static_cast<size_t>(h)];
        // left-associated adds keep the Eq-3 decomposition bit-exact
        if (use_he) a = add(a, he[static_cast<size_t>(h)]);
        if (use_pe) a = add(a, pe[static_cast<size_t>(h)]);
        Tensor att = softmax_rows(a);
        if (capture) {
            auto& hc = (*capture)[static_cast<size_t>(h)];
            hc.attention.assign(att.values().begin(), att.values().end());
            if (static_cast<int>(he.size()) == heads) {
                hc.he.assign(he[static_cast<size_t>(h)].values().begin(), he[static_cast<size_t>(h)].values().end());
            }
            if (static_cast<int>(pe.size()) == heads) {
                hc.pe.assign(pe[static_cast<size_t>(h)].values().begin(), pe[static_cast<size_t>(h)].values().end());
            }
        }
        head_ctx.push_back(matmul(att, slice_cols(v, h * dh, dh)));
    }
    Tensor merged = heads == 1 ? head_ctx[0] : concat(head_ctx, 1);
    return add_rowvec(matmul(merged, p.wo), p.bo);
}

Tensor gcn_forward(const Tensor& x, const Tensor& adj, const GcnParams& p) {
    return relu(matmul(matmul(add(adj, p.adj_mod), x), p.weight));
}

Tensor ffn_forward(const Tensor& x, const FfnParams& p) {
    Tensor hidden = relu(add_rowvec(matmul(x, p.w1), p.b1));
    return add_rowvec(matmul(hidden, p.w2), p.b2);
}

GraphArtifacts build_graph_artifacts(const SkeletonGraph& graph) {
    GraphArtifacts g;
    g.graph = graph;
    g.hops = hop_distance_matrix(graph);
    g.paths = shortest_path_table(graph);
    g.adj = normalized_adjacency(graph);
    return g;
}

EncoderContext build_encoder_context(const EncoderConfig& cfg, const GraphArtifacts& g,
                                     const EncoderParams& params) {
    EncoderContext ctx;
    ctx.cfg = cfg;
    ctx.adj = g.adj;
    ctx.biases.resize(static_cast<size_t>(cfg.layers));
    const int shared = cfg.per_layer_graph_encodings ? -1 : 0;
    GraphBias shared_bias;
    for (int l = 0; l < cfg.layers; ++l) {
        const auto& enc = params.encodings[static_cast<size_t>(shared >= 0 ? shared : l)];
        if (shared >= 0 && l > 0) {
            ctx.biases[static_cast<size_t>(l)] = shared_bias;
            continue;
        }
        GraphBias bias;
        if (cfg.enable_he) bias.he = split_bias_heads(hop_encoding(g.hops, enc.hop_table));
        if (cfg.enable_pe) bias.pe = split_bias_heads(path_encoding(g.paths, enc));
        ctx.biases[static_cast<size_t>(l)] = bias;
        if (shared >= 0) shared_bias = bias;
    }
    return ctx;
}

Tensor sdga_block(const Tensor& x, const EncoderLayerParams& p, const EncoderContext& ctx,
                  int layer, LayerCapture* capture) {
    const auto& cfg = ctx.cfg;
    const auto& bias = ctx.biases[static_cast<size_t>(layer)];
    Tensor normed = ln_affine(x, p.ln_attn);
    Tensor y = add(x, ga_sa_forward(normed, bias.he, bias.pe, p.attn, cfg.heads,
                                    cfg.enable_he, cfg.enable_pe, capture));
    if (cfg.enable_gcn) y = add(y, gcn_forward(normed, ctx.adj, p.gcn));
    return add(y, ffn_forward(ln_affine(y, p.ln_ffn), p.ffn));
}

EncoderOutput encoder_forward(const Tensor& pose2d, const EncoderParams& params,
                              const EncoderContext& ctx,
                              std::vector<LayerCapture>* capture) {
    if (pose2d.rank() != 2 || pose2d.cols() != 2) {
        throw ContractError("encoder_forward: pose2d must be [N,2], got " + shape_str(pose2d.shape()));
    }
    if (pose2d.rows() != params.pos_embed.rows()) {
        throw ContractError("encoder_forward: pose has " + std::to_string(pose2d.rows()) +
                            " joints, model expects " + std::to_string(params.pos_embed.rows()));
    }
    if (!pose2d.all_finite()) throw DataError("encoder_forward: pose2d contains non-finite values");

    Tensor x = add_rowvec(matmul(pose2d, params.input_w), params.input_b);
    if (ctx.cfg.enable_pos_embed) x = add(x, params.pos_embed);
    if (capture) capture->resize(static_cast<size_t>(ctx.cfg.layers));
    for (int l = 0; l < ctx.cfg.layers; ++l) {
        x = sdga_block(x, params.layers[static_cast<size_t>(l)], ctx, l,
                       capture ? &(*capture)[static_cast<size_t>(l)] : nullptr);
    }
    EncoderOutput out;
    out.joint_features = ln_affine(x, params.ln_final);
    out.pose3d = add_rowvec(matmul(out.joint_features, params.pose_w), params.pose_b);
    return out;
}

}  // namespace gator
