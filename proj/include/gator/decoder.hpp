#pragma once

#include <string>
#include <vector>

#include "gator/encoder.hpp"
#include "gator/mesh.hpp"
#include "gator/params.hpp"
#include "gator/tensor.hpp"

namespace gator {

enum class RegressorHead { Mdr, Linear };

struct DecoderConfig {
    int layers = 3;
    int dim = 64;
    int heads = 4;
    int base_motions = 20;
    bool use_lbf = true;
    RegressorHead head = RegressorHead::Mdr;
    bool head_params_static = false;  // Eq-8 quantities as free parameters instead of feature-predicted
    bool freeze_upsample = false;

    void validate() const;
};

struct CrossAttnParams {
    LayerNormParams ln_q, ln_kv;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct LbfLayerParams {
    CrossAttnParams cross;
    LayerNormParams ln_self;
    AttentionParams self_attn;
    LayerNormParams ln_ffn;
    FfnParams ffn;
};

struct MdrHeadParams {
    bool is_static = false;
    int base_motions = 0;
    // feature-predicted quantities
    Tensor wa, ba;          // d2 -> m
    Tensor walpha, balpha;  // d2 -> 1
    Tensor wc, bc;          // d2 -> 3
    Tensor wb, bb;          // d2 -> 3m, applied to the mean-pooled vertex feature
    // free-parameter variant
    Tensor static_ma, static_mb, static_mc, static_alpha_raw;
};

struct DecoderParams {
    Tensor joint_w, joint_b;    // (5+d1) -> d2
    Tensor vertex_w, vertex_b;  // 6 -> d2
    std::vector<LbfLayerParams> layers;
    LayerNormParams ln_final;
    MdrHeadParams head;
    Tensor linear_w, linear_b;  // plain linear regressor variant
    Tensor upsample;            // [V_full, V_c], initialized from the topology
};

DecoderParams init_decoder_params(const DecoderConfig& cfg, int encoder_dim, const MeshTopology& topo,
                                  Rng& rng, ParamSet& ps, const std::string& prefix = "decoder");

Tensor build_joint_tokens(const Tensor& pose2d, const Tensor& pose3d, const Tensor& joint_features,
                          const DecoderParams& p);
Tensor build_vertex_tokens(const MeshTopology& topo, const Tensor& pose3d, const DecoderParams& p);

// Q from vertices, K/V from joints; optionally reports per-head attention maps
Tensor cross_attention(const Tensor& q_in, const Tensor& kv_in, const CrossAttnParams& p, int heads,
                       std::vector<Tensor>* maps = nullptr);

Tensor lbf_layer(const Tensor& xv, const Tensor& xj, const LbfLayerParams& p, int heads);

struct MDRHeadOutput {
    Tensor motion_logits;   // M_A
    Tensor motion_weights;  // softmax(M_A), rows sum to 1
    Tensor base_motions;    // M_B
    Tensor biases;          // M_C
    Tensor alpha;           // [V_c, 1], positive
    Tensor delta_coarse;    // alpha * softmax(M_A) M_B + M_C
};

// the Eq-8 assembly; checked against a plain-loop recomputation on every call
MDRHeadOutput compose_offsets(const Tensor& motion_logits, const Tensor& base_motions,
                              const Tensor& biases, const Tensor& alpha);

MDRHeadOutput mdr_head(const Tensor& xv, const MdrHeadParams& p);

Tensor upsample_offsets(const Tensor& delta_coarse, const Tensor& upsample);

struct DecoderOutput {
    Tensor vertex_features;
    MDRHeadOutput head;  // tensors undefined for the linear head
    Tensor delta_coarse;
    Tensor mesh;  // template + upsampled offsets
};

DecoderOutput decoder_forward(const Tensor& pose2d, const Tensor& pose3d, const Tensor& joint_features,
                              const MeshTopology& topo, const DecoderParams& params, const DecoderConfig& cfg);

}  // namespace gator
