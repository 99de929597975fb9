#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pathcast/cig.hpp"
#include "pathcast/events.hpp"
#include "pathcast/kvconfig.hpp"

namespace pathcast {

// Planted community graph and sampling scales for synthetic corpora.
// planted_edges is either an explicit "0->1,1->2" index list or
// "random:<density>", which draws a layered graph: communities are split
// into consecutive layers and every consecutive layer pair is fully
// connected (density scales the layer width). Layered graphs are exactly
// the family whose cross-session bipartite structure an influence CIG can
// reproduce without spurious edges.
struct SynthConfig {
  std::size_t n_communities = 12;
  std::size_t n_users = 400;
  std::size_t n_videos = 50;
  std::string planted_edges = "random:0.25";
  double session_gap_logmean = 1.0;   // log10 seconds within a session
  double session_gap_logstd = 0.3;
  double cross_gap_logmean = 6.0;     // log10 seconds between sessions
  double cross_gap_logstd = 0.3;
  double concurrent_share_prob = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  static SynthConfig from_kv(const KvConfig& kv);
};

using DirectedEdge = std::pair<std::uint32_t, std::uint32_t>;

struct PlantedTruth {
  std::vector<DirectedEdge> dag;                                // global planted edges
  std::map<std::string, std::set<DirectedEdge>> per_video;      // intended edges per video

  std::string to_json() const;
  static PlantedTruth from_json(const std::string& text);
};

struct SynthResult {
  std::vector<PostingInstance> events;
  PlantedTruth truth;
};

SynthResult generate(const SynthConfig& cfg);

struct RecoveryScore {
  double precision = 1.0;
  double recall = 1.0;
};

// Directed edge-set agreement, weights ignored. Node names must come from
// the same namespace as the truth (community ids "c<k>").
RecoveryScore recovery_score(const Cig& built, const std::set<DirectedEdge>& intended);

// Mean per-video precision/recall over every video present in the truth.
RecoveryScore recovery_score_mean(const std::map<std::string, Cig>& built,
                                  const PlantedTruth& truth);

// Union of built edges against the union of intended edges.
RecoveryScore recovery_score_pooled(const std::map<std::string, Cig>& built,
                                    const PlantedTruth& truth);

std::string synth_community_name(std::uint32_t idx);
std::uint32_t synth_community_index(const std::string& name);

}  // namespace pathcast
