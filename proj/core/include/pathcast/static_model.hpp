#pragma once

#include <optional>
#include <vector>

#include "pathcast/cig.hpp"
#include "pathcast/model.hpp"

namespace pathcast {

// Merged CIG lowered to dense form over global community indices:
// symmetrically normalized adjacency with self-loops, ready for APPNP.
struct CigDense {
  std::vector<std::uint32_t> comms;  // ascending global community indices
  std::vector<double> nhat;          // k*k row-major D^-1/2 (A + A^T + I) D^-1/2

  std::size_t size() const { return comms.size(); }
  std::optional<std::size_t> local_of(std::uint32_t comm) const;
};

CigDense densify_cig(const Cig& merged, const IdIndex& communities);

// S(l) = (1-alpha) Nhat S(l-1) + alpha S(0), seeded by gathering the
// graph's rows from the global table. Output rows align with cig.comms.
Tensor appnp_propagate(const CigDense& cig, const Tensor& table, double alpha, int layers);

struct SessionAttentionOut {
  Tensor context;  // [d]
  Tensor beta;     // [k], unnormalized
};

// beta_i = w1 . sigmoid(Wg s_last + Wh s_i + b); context = sum_i beta_i s_i.
SessionAttentionOut session_attention(const Tensor& seq_embs, const AttentionParams& params);

// softmax(head([last || context]) . table^T) over every community.
Tensor next_community_distribution(const Tensor& context, const Tensor& last,
                                   const Tensor& table, const Mlp& head);

// Per-video dense CIGs built from training events only.
struct CigCache {
  std::vector<std::optional<CigDense>> per_video;
  double threshold_seconds = 0.0;
};

CigCache build_cig_cache(const Corpus& corpus, std::size_t train_begin, std::size_t train_end,
                         double threshold, CigMode mode, std::uint64_t seed);

}  // namespace pathcast
