#pragma once

#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pathcast/static_model.hpp"

namespace pathcast {

struct EdgeEvent {
  std::uint32_t video_node = 0;
  std::uint32_t comm_node = 0;
  std::int64_t time = 0;
};

struct NeighborEntry {
  std::uint32_t peer = 0;
  std::int64_t time = 0;
};

// Per-node temporal memory, last-update clocks, recency-ordered adjacency,
// and the raw events awaiting their memory update. A sequential state
// machine over time-ordered batches.
class TemporalState {
 public:
  TemporalState() = default;
  TemporalState(std::size_t n_nodes, std::size_t dim);

  void reset();

  std::size_t n_nodes() const { return memory_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& memory(std::uint32_t node) const { return memory_[node]; }
  std::vector<double>& memory(std::uint32_t node) { return memory_[node]; }
  std::int64_t last_update(std::uint32_t node) const { return last_update_[node]; }
  void set_last_update(std::uint32_t node, std::int64_t t) { last_update_[node] = t; }

  // Last k events touching the node, oldest first.
  std::vector<NeighborEntry> recent_neighbors(std::uint32_t node, std::size_t k) const;

  // Marks a batch as past: events join the pending queue and adjacency;
  // clocks of first-seen nodes start at their first event.
  void enqueue_batch(const std::vector<EdgeEvent>& events);

  const std::vector<EdgeEvent>& pending() const { return pending_; }
  void clear_pending() { pending_.clear(); }

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> memory_;
  std::vector<std::int64_t> last_update_;
  std::vector<bool> seen_;
  std::vector<std::vector<NeighborEntry>> neighbors_;
  std::vector<EdgeEvent> pending_;
};

// Graph-building view over static inputs: video feature vectors (content
// aggregation), per-video APPNP outputs, and community features resolved
// against a video context with a table fallback. Caches live as long as the
// instance, so instances must not outlive one backward pass.
class FeatureMap {
 public:
  FeatureMap(const Model& model, const ContentFeatures& features, const CigCache& cigs);

  Tensor video_feature(std::uint32_t video);
  Tensor community_feature(std::uint32_t comm, std::optional<std::uint32_t> ctx_video);
  Tensor appnp_of(std::uint32_t video);  // [k,d] rows aligned with cig comms
  const CigDense* cig_of(std::uint32_t video) const;

  const Model& model() const { return model_; }

 private:
  const Model& model_;
  const ContentFeatures& features_;
  const CigCache& cigs_;
  std::unordered_map<std::uint32_t, Tensor> video_cache_;
  std::unordered_map<std::uint32_t, Tensor> appnp_cache_;
  std::unordered_map<std::uint64_t, Tensor> comm_cache_;
};

Tensor time_encode(const Model& model, double t);

// MLP([h || x || phi(dt)]).
Tensor node_message(const Model& model, const Tensor& h, const Tensor& x, double dt);

// MLP([h_self || h_other || x_self || x_other || phi(dt_self)]) per endpoint.
std::pair<Tensor, Tensor> edge_messages(const Model& model, const Tensor& h_video,
                                        const Tensor& h_comm, const Tensor& x_video,
                                        const Tensor& x_comm, double dt_video, double dt_comm);

// Mean-pooled messages for the pending events, one GRU step per touched
// node. Pure with respect to the state; commit writes the values back.
struct PendingUpdate {
  std::map<std::uint32_t, Tensor> memory;
  std::map<std::uint32_t, std::int64_t> new_time;
};

PendingUpdate compute_pending_update(const Model& model, const TemporalState& state,
                                     FeatureMap& fm);
void commit_pending_update(TemporalState& state, const PendingUpdate& update);

// Two-layer temporal attention readout at time t; memo-caches node/layer
// pairs, so one instance serves all embeddings of a single event.
class Embedder {
 public:
  Embedder(const Model& model, const TemporalState& state, FeatureMap& fm,
           const std::map<std::uint32_t, Tensor>* mem_override, double t,
           std::optional<std::uint32_t> ctx_video);

  Tensor embed(std::uint32_t node);

 private:
  Tensor embed_layer(std::uint32_t node, int layer);
  Tensor base_state(std::uint32_t node);
  Tensor memory_tensor(std::uint32_t node);

  const Model& model_;
  const TemporalState& state_;
  FeatureMap& fm_;
  const std::map<std::uint32_t, Tensor>* mem_override_;
  double t_;
  std::optional<std::uint32_t> ctx_video_;
  std::unordered_map<std::uint64_t, Tensor> memo_;
};

// MLP(v * MLP(s)) with the model's score heads.
Tensor score(const Model& model, const Tensor& video_emb, const Tensor& comm_emb);
// Same composition with explicit heads.
Tensor score_with(const Mlp& inner, const Mlp& outer, const Tensor& video_emb,
                  const Tensor& comm_emb);

}  // namespace pathcast
