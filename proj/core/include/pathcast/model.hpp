#pragma once

#include <cstdint>

#include "pathcast/features.hpp"
#include "pathcast/nn.hpp"

namespace pathcast {

struct ModelConfig {
  std::size_t dim = 64;
  int appnp_layers = 4;
  double alpha = 0.1;           // APPNP teleport probability
  AggScheme agg = AggScheme::kMul;
  std::size_t neighbor_budget = 10;  // most recent temporal neighbors per node
  std::size_t max_seq = 50;          // session sequence truncation
};

// One temporal attention layer: scaled dot-product over [state || time]
// keys, followed by a combiner over [state || attended].
struct GatLayer {
  Tensor wq, wk, wv;  // [d, 2d]
  Mlp combine;        // {2d, d, d}
};

struct AttentionParams {
  Tensor w1;      // [d]
  Tensor wg, wh;  // [d, d]
  Tensor b;       // [d]
};

// All trainable state. Node ids pack videos first, then communities.
struct Model {
  ModelConfig cfg;
  std::size_t n_videos = 0;
  std::size_t n_communities = 0;
  std::size_t n_channels = 0;

  ParamStore store;

  Tensor community_table;  // [S, d]
  Tensor channel_table;    // [C, d]
  Mlp content_proj;        // concat scheme only, {2d, d}
  AttentionParams attn;
  Mlp static_head;         // {2d, d}

  Tensor time_w, time_b;   // [d]
  Mlp node_msg;            // {3d, d}
  Mlp edge_msg;            // {5d, d}
  GruCell gru;
  GatLayer gat1, gat2;
  Mlp score_inner;         // {d, d}
  Mlp score_outer;         // {d, d, 1}

  static Model create(const ModelConfig& cfg, std::size_t n_videos, std::size_t n_communities,
                      std::size_t n_channels, std::uint64_t seed);

  std::size_t n_nodes() const { return n_videos + n_communities; }
  std::uint32_t video_node(std::uint32_t v) const { return v; }
  std::uint32_t community_node(std::uint32_t s) const {
    return static_cast<std::uint32_t>(n_videos) + s;
  }
  bool is_video_node(std::uint32_t node) const { return node < n_videos; }
  std::uint32_t community_of_node(std::uint32_t node) const {
    return node - static_cast<std::uint32_t>(n_videos);
  }
};

}  // namespace pathcast
