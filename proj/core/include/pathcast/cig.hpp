#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pathcast/events.hpp"
#include "pathcast/rng.hpp"

namespace pathcast {

// Maximal run of postings whose consecutive gaps stay within the threshold.
struct Session {
  std::vector<PostingInstance> postings;
  std::int64_t start = 0;
  std::int64_t end = 0;
};

enum class CigMode { kInfluence, kSeq, kFc, kEr };

CigMode parse_cig_mode(const std::string& name);
std::string cig_mode_name(CigMode mode);

// Per-video directed community influence graph. Multigraph stage keeps
// integer parallel-edge counts; merge_weights turns counts into ln(1+k).
struct Cig {
  std::string video_id;
  CigMode mode = CigMode::kInfluence;
  std::vector<std::string> nodes;                        // sorted community ids
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> multi_edges;  // local (src,dst) -> count
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> edges;             // after merge
  bool merged = false;
  std::size_t session_count = 0;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const { return merged ? edges.size() : multi_edges.size(); }
};

std::vector<Session> partition_sessions(const PostingSequence& seq, double threshold_seconds);

// Multigraph stage; er mode mirrors the influence graph's density with the
// given seed. The sequence must come from training events only.
Cig build_cig(const PostingSequence& seq, double threshold_seconds, CigMode mode,
              std::uint64_t er_seed = 0);

// Collapses parallel edges; weight = ln(1 + count).
Cig merge_weights(const Cig& multigraph);

enum class GraphFormat { kDot, kJson };

std::string export_graph(const Cig& cig, GraphFormat format);
Cig import_graph_json(const std::string& text);

}  // namespace pathcast
