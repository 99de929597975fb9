#include "pathcast/model.hpp"

#include <cmath>

namespace pathcast {

Model Model::create(const ModelConfig& cfg, std::size_t n_videos, std::size_t n_communities,
                    std::size_t n_channels, std::uint64_t seed) {
  Model m;
  m.cfg = cfg;
  m.n_videos = n_videos;
  m.n_communities = n_communities;
  m.n_channels = n_channels;
  const std::size_t d = cfg.dim;
  Rng rng(mix64(seed, 0x70617468ULL));

  m.community_table = m.store.xavier("community_table", n_communities, d, rng);
  m.channel_table = m.store.xavier("channel_table", std::max<std::size_t>(n_channels, 1), d, rng);
  if (cfg.agg == AggScheme::kConcat) {
    m.content_proj = make_mlp(m.store, "content_proj", {2 * d, d}, Activation::kTanh, rng);
  }
  m.attn.wg = m.store.xavier("attn.wg", d, d, rng);
  m.attn.wh = m.store.xavier("attn.wh", d, d, rng);
  m.attn.b = m.store.zeros_vec("attn.b", d);
  m.attn.w1 = m.store.xavier_vec("attn.w1", d, rng);
  m.static_head = make_mlp(m.store, "static_head", {2 * d, d}, Activation::kTanh, rng);

  // Inverse log-spaced timescales from seconds up to ~1e5 s, with random
  // phases. Zero phases sit on the flat top of the cosine, where slow
  // components barely move and their key projections degenerate into a
  // shared score shift that the attention softmax cannot see.
  {
    std::vector<double> w(d), b(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double expo = d > 1 ? 5.0 * static_cast<double>(k) / static_cast<double>(d - 1) : 0.0;
      w[k] = std::pow(10.0, -expo);
      b[k] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    }
    m.time_w = m.store.add("time.w", Tensor::vector(std::move(w)));
    m.time_b = m.store.add("time.b", Tensor::vector(std::move(b)));
  }

  m.node_msg = make_mlp(m.store, "node_msg", {3 * d, d}, Activation::kTanh, rng);
  m.edge_msg = make_mlp(m.store, "edge_msg", {5 * d, d}, Activation::kTanh, rng);
  m.gru = make_gru(m.store, "gru", d, d, rng);

  for (int layer = 0; layer < 2; ++layer) {
    GatLayer& gat = layer == 0 ? m.gat1 : m.gat2;
    const std::string prefix = "gat" + std::to_string(layer + 1);
    gat.wq = m.store.xavier(prefix + ".wq", d, 2 * d, rng);
    gat.wk = m.store.xavier(prefix + ".wk", d, 2 * d, rng);
    gat.wv = m.store.xavier(prefix + ".wv", d, 2 * d, rng);
    gat.combine = make_mlp(m.store, prefix + ".combine", {2 * d, d, d}, Activation::kTanh, rng);
  }

  m.score_inner = make_mlp(m.store, "score_inner", {d, d}, Activation::kTanh, rng);
  // the score feeds pairwise and ranking losses only, so its absolute level
  // is unidentifiable; a trainable terminal offset would never move
  m.score_outer = make_mlp(m.store, "score_outer", {d, d, 1}, Activation::kTanh, rng,
                           /*final_bias=*/false);
  return m;
}

}  // namespace pathcast
