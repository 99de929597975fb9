#include "pathcast/static_model.hpp"

#include <algorithm>
#include <cmath>

#include "pathcast/common.hpp"

namespace pathcast {

std::optional<std::size_t> CigDense::local_of(std::uint32_t comm) const {
  const auto it = std::lower_bound(comms.begin(), comms.end(), comm);
  if (it == comms.end() || *it != comm) return std::nullopt;
  return static_cast<std::size_t>(it - comms.begin());
}

CigDense densify_cig(const Cig& merged, const IdIndex& communities) {
  if (!merged.merged) throw NumericError("densify_cig: merge_weights first");
  CigDense out;
  out.comms.reserve(merged.nodes.size());
  for (const auto& id : merged.nodes) {
    const auto idx = communities.find(id);
    if (!idx) throw DataError("densify_cig: community not in corpus: " + id);
    out.comms.push_back(*idx);
  }
  // merged.nodes is sorted by id string; re-sort locals by global index so
  // rows align with ascending community indices.
  std::vector<std::size_t> order(out.comms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return out.comms[a] < out.comms[b]; });
  std::vector<std::uint32_t> sorted;
  sorted.reserve(out.comms.size());
  std::vector<std::size_t> pos(out.comms.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    sorted.push_back(out.comms[order[r]]);
    pos[order[r]] = r;
  }
  out.comms = std::move(sorted);

  const std::size_t k = out.comms.size();
  std::vector<double> a(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) a[i * k + i] = 1.0;  // self-loops
  for (const auto& [key, w] : merged.edges) {
    const std::size_t src = pos[key.first];
    const std::size_t dst = pos[key.second];
    a[src * k + dst] += w;  // A + A^T keeps symmetric normalization valid
    a[dst * k + src] += w;
  }
  std::vector<double> dinv(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < k; ++j) deg += a[i * k + j];
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  out.nhat.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out.nhat[i * k + j] = dinv[i] * a[i * k + j] * dinv[j];
  return out;
}

Tensor appnp_propagate(const CigDense& cig, const Tensor& table, double alpha, int layers) {
  if (layers < 1) throw NumericError("appnp_propagate: layers must be >= 1");
  if (alpha < 0.0 || alpha >= 1.0) throw NumericError("appnp_propagate: alpha must be in [0,1)");
  std::vector<std::size_t> idx(cig.comms.begin(), cig.comms.end());
  const Tensor s0 = gather_rows(table, idx);
  const Tensor nhat =
      Tensor::from(cig.nhat, {cig.size(), cig.size()});  // constant, no gradient
  Tensor s = s0;
  for (int l = 0; l < layers; ++l) {
    s = add(scale(matmul(nhat, s), 1.0 - alpha), scale(s0, alpha));
  }
  return s;
}

SessionAttentionOut session_attention(const Tensor& seq_embs, const AttentionParams& params) {
  if (seq_embs.rank() != 2 || seq_embs.rows() == 0)
    throw NumericError("session_attention: non-empty [k,d] sequence required");
  const std::size_t k = seq_embs.rows();
  const Tensor s_last = row(seq_embs, k - 1);
  const Tensor g = matmul(params.wg, s_last);
  std::vector<Tensor> gates;
  gates.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Tensor pre = add(add(g, matmul(params.wh, row(seq_embs, i))), params.b);
    gates.push_back(sigmoid(pre));
  }
  SessionAttentionOut out;
  out.beta = matmul(stack_rows(gates), params.w1);  // [k]
  out.context = matmul(out.beta, seq_embs);         // [d]
  return out;
}

Tensor next_community_distribution(const Tensor& context, const Tensor& last,
                                   const Tensor& table, const Mlp& head) {
  const Tensor z = head(concat({last, context}));
  const Tensor scores = matmul(table, z);  // [S]
  return softmax(scores);
}

CigCache build_cig_cache(const Corpus& corpus, std::size_t train_begin, std::size_t train_end,
                         double threshold, CigMode mode, std::uint64_t seed) {
  CigCache cache;
  cache.threshold_seconds = threshold;
  cache.per_video.assign(corpus.videos.size(), std::nullopt);

  std::vector<PostingSequence> seqs(corpus.videos.size());
  for (std::size_t i = train_begin; i < train_end && i < corpus.events.size(); ++i) {
    const auto& e = corpus.indexed[i];
    auto& seq = seqs[e.video];
    if (seq.video_id.empty()) seq.video_id = corpus.videos.name(e.video);
    seq.postings.push_back(corpus.events[i]);
  }
  for (std::size_t v = 0; v < seqs.size(); ++v) {
    if (seqs[v].postings.empty()) continue;
    const Cig merged =
        merge_weights(build_cig(seqs[v], threshold, mode, mix64(seed, v)));
    cache.per_video[v] = densify_cig(merged, corpus.communities);
  }
  return cache;
}

}  // namespace pathcast
