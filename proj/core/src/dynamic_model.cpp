#include "pathcast/dynamic_model.hpp"

#include <algorithm>
#include <cmath>

#include "pathcast/common.hpp"

namespace pathcast {

TemporalState::TemporalState(std::size_t n_nodes, std::size_t dim) : dim_(dim) {
  memory_.assign(n_nodes, std::vector<double>(dim, 0.0));
  last_update_.assign(n_nodes, 0);
  seen_.assign(n_nodes, false);
  neighbors_.assign(n_nodes, {});
}

void TemporalState::reset() {
  for (auto& m : memory_) std::fill(m.begin(), m.end(), 0.0);
  std::fill(last_update_.begin(), last_update_.end(), 0);
  seen_.assign(seen_.size(), false);
  for (auto& n : neighbors_) n.clear();
  pending_.clear();
}

std::vector<NeighborEntry> TemporalState::recent_neighbors(std::uint32_t node,
                                                           std::size_t k) const {
  const auto& all = neighbors_[node];
  const std::size_t take = std::min(k, all.size());
  return {all.end() - static_cast<std::ptrdiff_t>(take), all.end()};
}

void TemporalState::enqueue_batch(const std::vector<EdgeEvent>& events) {
  for (const auto& e : events) {
    for (const auto node : {e.video_node, e.comm_node}) {
      if (seen_[node] && e.time < last_update_[node])
        throw DataError("enqueue_batch: out-of-order event at t=" + std::to_string(e.time));
    }
    pending_.push_back(e);
    neighbors_[e.video_node].push_back({e.comm_node, e.time});
    neighbors_[e.comm_node].push_back({e.video_node, e.time});
    for (const auto node : {e.video_node, e.comm_node}) {
      if (!seen_[node]) {
        seen_[node] = true;
        last_update_[node] = e.time;  // clock starts at first appearance
      }
    }
  }
}

FeatureMap::FeatureMap(const Model& model, const ContentFeatures& features, const CigCache& cigs)
    : model_(model), features_(features), cigs_(cigs) {
  if (features.dim != model.cfg.dim)
    throw NumericError("FeatureMap: feature dimension does not match model dim");
}

Tensor FeatureMap::video_feature(std::uint32_t video) {
  auto it = video_cache_.find(video);
  if (it != video_cache_.end()) return it->second;
  const Tensor vvec = Tensor::vector(features_.video_vecs.at(video));
  const std::uint32_t ch = features_.channel_of.at(video);
  const Tensor cvec = features_.channel_vecs ? Tensor::vector(features_.channel_vecs->at(ch))
                                             : row(model_.channel_table, ch);
  Tensor agg = aggregate_content(vvec, cvec, model_.cfg.agg);
  if (model_.cfg.agg == AggScheme::kConcat) agg = model_.content_proj(agg);
  video_cache_.emplace(video, agg);
  return agg;
}

Tensor FeatureMap::community_feature(std::uint32_t comm, std::optional<std::uint32_t> ctx_video) {
  const std::uint64_t key =
      (static_cast<std::uint64_t>(ctx_video ? *ctx_video + 1 : 0) << 32) | comm;
  auto it = comm_cache_.find(key);
  if (it != comm_cache_.end()) return it->second;
  Tensor out;
  if (ctx_video && cigs_.per_video[*ctx_video]) {
    const CigDense& cig = *cigs_.per_video[*ctx_video];
    if (const auto local = cig.local_of(comm)) {
      out = row(appnp_of(*ctx_video), *local);
    }
  }
  if (!out.defined()) out = row(model_.community_table, comm);
  comm_cache_.emplace(key, out);
  return out;
}

Tensor FeatureMap::appnp_of(std::uint32_t video) {
  auto it = appnp_cache_.find(video);
  if (it != appnp_cache_.end()) return it->second;
  const auto& cig = cigs_.per_video.at(video);
  if (!cig) throw NumericError("FeatureMap::appnp_of: video has no training CIG");
  Tensor out =
      appnp_propagate(*cig, model_.community_table, model_.cfg.alpha, model_.cfg.appnp_layers);
  appnp_cache_.emplace(video, out);
  return out;
}

const CigDense* FeatureMap::cig_of(std::uint32_t video) const {
  const auto& cig = cigs_.per_video.at(video);
  return cig ? &*cig : nullptr;
}

Tensor time_encode(const Model& model, double t) {
  return cos(add(scale(model.time_w, t), model.time_b));
}

Tensor node_message(const Model& model, const Tensor& h, const Tensor& x, double dt) {
  return model.node_msg(concat({h, x, time_encode(model, dt)}));
}

std::pair<Tensor, Tensor> edge_messages(const Model& model, const Tensor& h_video,
                                        const Tensor& h_comm, const Tensor& x_video,
                                        const Tensor& x_comm, double dt_video, double dt_comm) {
  const Tensor m_video =
      model.edge_msg(concat({h_video, h_comm, x_video, x_comm, time_encode(model, dt_video)}));
  const Tensor m_comm =
      model.edge_msg(concat({h_comm, h_video, x_comm, x_video, time_encode(model, dt_comm)}));
  return {m_video, m_comm};
}

PendingUpdate compute_pending_update(const Model& model, const TemporalState& state,
                                     FeatureMap& fm) {
  PendingUpdate out;
  if (state.pending().empty()) return out;

  std::map<std::uint32_t, std::vector<Tensor>> inbox;
  std::map<std::uint32_t, std::int64_t> latest;
  std::map<std::uint32_t, Tensor> h_cache;
  auto memory_of = [&](std::uint32_t node) {
    auto it = h_cache.find(node);
    if (it != h_cache.end()) return it->second;
    Tensor h = Tensor::vector(state.memory(node));
    h_cache.emplace(node, h);
    return h;
  };

  for (const auto& e : state.pending()) {
    const std::uint32_t video = e.video_node;
    const std::uint32_t comm_global = model.community_of_node(e.comm_node);
    const Tensor x_v = fm.video_feature(video);
    const Tensor x_c = fm.community_feature(comm_global, video);
    const double dt_v = static_cast<double>(e.time - state.last_update(e.video_node));
    const double dt_c = static_cast<double>(e.time - state.last_update(e.comm_node));
    auto [m_v, m_c] =
        edge_messages(model, memory_of(e.video_node), memory_of(e.comm_node), x_v, x_c, dt_v, dt_c);
    inbox[e.video_node].push_back(m_v);
    inbox[e.comm_node].push_back(m_c);
    // pending events are time ordered, so the last write is the max
    latest[e.video_node] = e.time;
    latest[e.comm_node] = e.time;
  }

  for (auto& [node, messages] : inbox) {
    Tensor pooled = messages.front();
    for (std::size_t i = 1; i < messages.size(); ++i) pooled = add(pooled, messages[i]);
    if (messages.size() > 1) pooled = scale(pooled, 1.0 / static_cast<double>(messages.size()));
    out.memory[node] = model.gru.step(pooled, memory_of(node));
    out.new_time[node] = latest[node];
  }
  return out;
}

void commit_pending_update(TemporalState& state, const PendingUpdate& update) {
  for (const auto& [node, mem] : update.memory) {
    if (!mem.all_finite()) throw NumericError("memory update produced non-finite values");
    state.memory(node) = mem.value();
    state.set_last_update(node, update.new_time.at(node));
  }
  state.clear_pending();
}

Embedder::Embedder(const Model& model, const TemporalState& state, FeatureMap& fm,
                   const std::map<std::uint32_t, Tensor>* mem_override, double t,
                   std::optional<std::uint32_t> ctx_video)
    : model_(model), state_(state), fm_(fm), mem_override_(mem_override), t_(t),
      ctx_video_(ctx_video) {}

Tensor Embedder::memory_tensor(std::uint32_t node) {
  if (mem_override_) {
    auto it = mem_override_->find(node);
    if (it != mem_override_->end()) return it->second;
  }
  return Tensor::vector(state_.memory(node));
}

Tensor Embedder::base_state(std::uint32_t node) {
  const Tensor h = memory_tensor(node);
  const Tensor x = model_.is_video_node(node)
                       ? fm_.video_feature(node)
                       : fm_.community_feature(model_.community_of_node(node), ctx_video_);
  return add(h, x);
}

Tensor Embedder::embed_layer(std::uint32_t node, int layer) {
  const std::uint64_t key = (static_cast<std::uint64_t>(layer) << 32) | node;
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;

  Tensor out;
  if (layer == 0) {
    out = base_state(node);
  } else {
    const GatLayer& gat = layer == 1 ? model_.gat1 : model_.gat2;
    const Tensor self = embed_layer(node, layer - 1);
    const auto neighbors = state_.recent_neighbors(node, model_.cfg.neighbor_budget);
    Tensor attended;
    if (neighbors.empty()) {
      attended = Tensor::zeros({model_.cfg.dim});
    } else {
      const Tensor query =
          matmul(gat.wq, concat({self, time_encode(model_, 0.0)}));
      std::vector<Tensor> keys, vals;
      keys.reserve(neighbors.size());
      vals.reserve(neighbors.size());
      for (const auto& nb : neighbors) {
        const Tensor kin = concat({embed_layer(nb.peer, layer - 1),
                                   time_encode(model_, t_ - static_cast<double>(nb.time))});
        keys.push_back(matmul(gat.wk, kin));
        vals.push_back(matmul(gat.wv, kin));
      }
      const Tensor scores = scale(matmul(stack_rows(keys), query),
                                  1.0 / std::sqrt(static_cast<double>(model_.cfg.dim)));
      const Tensor alpha = softmax(scores);
      attended = matmul(alpha, stack_rows(vals));
    }
    out = gat.combine(concat({self, attended}));
  }
  memo_.emplace(key, out);
  return out;
}

Tensor Embedder::embed(std::uint32_t node) { return embed_layer(node, 2); }

Tensor score(const Model& model, const Tensor& video_emb, const Tensor& comm_emb) {
  return score_with(model.score_inner, model.score_outer, video_emb, comm_emb);
}

Tensor score_with(const Mlp& inner, const Mlp& outer, const Tensor& video_emb,
                  const Tensor& comm_emb) {
  if (video_emb.shape() != comm_emb.shape())
    throw NumericError("score: embedding dimension mismatch");
  const Tensor out = outer(elementwise_mul(video_emb, inner(comm_emb)));
  return pick(out, 0);
}

}  // namespace pathcast
