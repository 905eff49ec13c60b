#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gator/params.hpp"
#include "gator/rng.hpp"
#include "gator/skeleton.hpp"
#include "gator/tensor.hpp"

namespace gator {

inline constexpr double kLayerNormEps = 1e-5;

struct EncoderConfig {
    int layers = 6;
    int dim = 128;
    int heads = 4;
    bool enable_he = true;
    bool enable_pe = true;
    bool enable_gcn = true;
    bool enable_pos_embed = true;
    int ffn_multiple = 2;
    int edge_embed_dim = 8;
    bool per_layer_graph_encodings = false;

    void validate() const;
};

struct LayerNormParams {
    Tensor gamma, beta;  // [1,d]
};

struct AttentionParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct GcnParams {
    Tensor weight;   // [d,d]
    Tensor adj_mod;  // [N,N], zero-init additive modulation
};

struct FfnParams {
    Tensor w1, b1, w2, b2;
};

struct EncoderLayerParams {
    LayerNormParams ln_attn;  // shared pre-norm feeding both branches
    AttentionParams attn;
    GcnParams gcn;
    LayerNormParams ln_ffn;
    FfnParams ffn;
};

struct EncoderParams {
    Tensor input_w, input_b;  // 2 -> d
    Tensor pos_embed;         // [N,d], zero-init
    std::vector<EncoderLayerParams> layers;
    std::vector<GraphEncodingParams> encodings;  // one entry, or one per layer
    LayerNormParams ln_final;
    Tensor pose_w, pose_b;  // d -> 3
};

EncoderParams init_encoder_params(const EncoderConfig& cfg, int num_joints, int max_hop,
                                  Rng& rng, ParamSet& ps, const std::string& prefix = "encoder");

LayerNormParams init_layer_norm(int dim, ParamSet& ps, const std::string& prefix);
Tensor ln_affine(const Tensor& x, const LayerNormParams& p);

// raw per-head logits Q K^T / sqrt(d_head), before any graph bias
std::vector<Tensor> attention_logits(const Tensor& x, const AttentionParams& p, int heads);

// per-head post-softmax map plus the bias fields that produced it
struct HeadCapture {
    std::vector<double> attention, he, pe;  // row-major N*N
};
using LayerCapture = std::vector<HeadCapture>;

Tensor ga_sa_forward(const Tensor& x, const std::vector<Tensor>& he, const std::vector<Tensor>& pe,
                     const AttentionParams& p, int heads, bool use_he, bool use_pe,
                     LayerCapture* capture = nullptr);

Tensor gcn_forward(const Tensor& x, const Tensor& adj, const GcnParams& p);

Tensor ffn_forward(const Tensor& x, const FfnParams& p);

// constant graph products reused across forwards
struct GraphArtifacts {
    SkeletonGraph graph;
    HopMatrix hops;
    PathTable paths;
    Tensor adj;
};
GraphArtifacts build_graph_artifacts(const SkeletonGraph& graph);

// per-head HE/PE bias matrices for a layer; empty vectors when disabled
struct GraphBias {
    std::vector<Tensor> he, pe;
};

// differentiable; rebuilt per forward pass so encoding params stay trainable
struct EncoderContext {
    EncoderConfig cfg;
    Tensor adj;
    std::vector<GraphBias> biases;  // size cfg.layers
};
EncoderContext build_encoder_context(const EncoderConfig& cfg, const GraphArtifacts& g,
                                     const EncoderParams& params);

Tensor sdga_block(const Tensor& x, const EncoderLayerParams& p, const EncoderContext& ctx,
                  int layer, LayerCapture* capture = nullptr);

struct EncoderOutput {
    Tensor joint_features;  // [N,d], pre-head (after the final layer norm)
    Tensor pose3d;          // [N,3]
};

EncoderOutput encoder_forward(const Tensor& pose2d, const EncoderParams& params,
                              const EncoderContext& ctx,
                              std::vector<LayerCapture>* capture = nullptr);

}  // namespace gator
