#include "pathcast/cig.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

// Local index of each distinct community, over sorted node ids.
std::vector<std::string> collect_nodes(const PostingSequence& seq) {
  std::set<std::string> distinct;
  for (const auto& p : seq.postings) distinct.insert(p.community_id);
  return {distinct.begin(), distinct.end()};
}

std::uint32_t local_index(const std::vector<std::string>& nodes, const std::string& id) {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
  return static_cast<std::uint32_t>(it - nodes.begin());
}

void add_multi_edge(Cig& cig, std::uint32_t src, std::uint32_t dst) {
  if (src == dst) return;  // no self-loops
  ++cig.multi_edges[{src, dst}];
}

void build_influence_edges(Cig& cig, const std::vector<Session>& sessions,
                           const std::vector<std::string>& nodes) {
  // Within a session, only same-user postings in different communities
  // influence each other, in both directions.
  for (const auto& session : sessions) {
    const auto& ps = session.postings;
    for (std::size_t a = 0; a < ps.size(); ++a) {
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        if (ps[a].user_id != ps[b].user_id) continue;
        if (ps[a].community_id == ps[b].community_id) continue;
        const auto sa = local_index(nodes, ps[a].community_id);
        const auto sb = local_index(nodes, ps[b].community_id);
        add_multi_edge(cig, sa, sb);
        add_multi_edge(cig, sb, sa);
      }
    }
  }
  // Across adjacent sessions, every posting influences every later posting
  // except repeat shares by the same user.
  for (std::size_t m = 0; m + 1 < sessions.size(); ++m) {
    for (const auto& earlier : sessions[m].postings) {
      for (const auto& later : sessions[m + 1].postings) {
        if (earlier.user_id == later.user_id) continue;
        const auto src = local_index(nodes, earlier.community_id);
        const auto dst = local_index(nodes, later.community_id);
        add_multi_edge(cig, src, dst);
      }
    }
  }
}

void build_seq_edges(Cig& cig, const PostingSequence& seq, const std::vector<std::string>& nodes) {
  for (std::size_t i = 0; i + 1 < seq.postings.size(); ++i) {
    add_multi_edge(cig, local_index(nodes, seq.postings[i].community_id),
                   local_index(nodes, seq.postings[i + 1].community_id));
  }
}

void build_fc_edges(Cig& cig, const PostingSequence& seq, const std::vector<std::string>& nodes) {
  for (std::size_t i = 0; i < seq.postings.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.postings.size(); ++j) {
      add_multi_edge(cig, local_index(nodes, seq.postings[i].community_id),
                     local_index(nodes, seq.postings[j].community_id));
    }
  }
}

void build_er_edges(Cig& cig, const Cig& influence, std::uint64_t seed) {
  const std::size_t n = cig.nodes.size();
  if (n < 2) return;
  Cig merged = influence.merged ? influence : merge_weights(influence);
  const double denom = static_cast<double>(n) * static_cast<double>(n - 1);
  const double p = static_cast<double>(merged.edges.size()) / denom;
  Rng rng(seed);
  for (std::uint32_t src = 0; src < n; ++src) {
    for (std::uint32_t dst = 0; dst < n; ++dst) {
      if (src == dst) continue;
      if (rng.bernoulli(p)) add_multi_edge(cig, src, dst);
    }
  }
}

}  // namespace

CigMode parse_cig_mode(const std::string& name) {
  if (name == "influence") return CigMode::kInfluence;
  if (name == "seq") return CigMode::kSeq;
  if (name == "fc") return CigMode::kFc;
  if (name == "er") return CigMode::kEr;
  throw UsageError("unknown cig mode: " + name);
}

std::string cig_mode_name(CigMode mode) {
  switch (mode) {
    case CigMode::kInfluence: return "influence";
    case CigMode::kSeq: return "seq";
    case CigMode::kFc: return "fc";
    case CigMode::kEr: return "er";
  }
  throw UsageError("unknown cig mode");
}

std::vector<Session> partition_sessions(const PostingSequence& seq, double threshold_seconds) {
  if (threshold_seconds <= 0) throw DataError("partition_sessions: threshold must be positive");
  std::vector<Session> sessions;
  for (const auto& p : seq.postings) {
    const bool fresh = sessions.empty() ||
                       static_cast<double>(p.timestamp - sessions.back().end) > threshold_seconds;
    if (fresh) {
      Session s;
      s.start = p.timestamp;
      s.end = p.timestamp;
      sessions.push_back(std::move(s));
    }
    sessions.back().postings.push_back(p);
    sessions.back().end = p.timestamp;
  }
  return sessions;
}

Cig build_cig(const PostingSequence& seq, double threshold_seconds, CigMode mode,
              std::uint64_t er_seed) {
  Cig cig;
  cig.video_id = seq.video_id;
  cig.mode = mode;
  cig.nodes = collect_nodes(seq);
  const auto sessions = partition_sessions(seq, threshold_seconds);
  cig.session_count = sessions.size();
  switch (mode) {
    case CigMode::kInfluence:
      build_influence_edges(cig, sessions, cig.nodes);
      break;
    case CigMode::kSeq:
      build_seq_edges(cig, seq, cig.nodes);
      break;
    case CigMode::kFc:
      build_fc_edges(cig, seq, cig.nodes);
      break;
    case CigMode::kEr: {
      Cig influence = build_cig(seq, threshold_seconds, CigMode::kInfluence);
      build_er_edges(cig, influence, er_seed);
      break;
    }
  }
  return cig;
}

Cig merge_weights(const Cig& multigraph) {
  Cig out = multigraph;
  out.edges.clear();
  for (const auto& [key, count] : multigraph.multi_edges) {
    out.edges[key] = std::log1p(static_cast<double>(count));
  }
  out.multi_edges.clear();
  out.merged = true;
  return out;
}

std::string export_graph(const Cig& cig, GraphFormat format) {
  const Cig g = cig.merged ? cig : merge_weights(cig);
  if (format == GraphFormat::kDot) {
    std::ostringstream out;
    out << "digraph cig {\n";
    for (const auto& node : g.nodes) out << "  \"" << node << "\";\n";
    for (const auto& [key, w] : g.edges) {
      out << "  \"" << g.nodes[key.first] << "\" -> \"" << g.nodes[key.second]
          << "\" [weight=" << nlohmann::json(w).dump() << "];\n";
    }
    out << "}\n";
    return out.str();
  }
  nlohmann::ordered_json j;
  j["video_id"] = g.video_id;
  j["mode"] = cig_mode_name(g.mode);
  j["sessions"] = g.session_count;
  j["nodes"] = g.nodes;
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& [key, w] : g.edges) {
    nlohmann::ordered_json e;
    e["src"] = g.nodes[key.first];
    e["dst"] = g.nodes[key.second];
    e["weight"] = w;
    edges.push_back(e);
  }
  j["edges"] = edges;
  return j.dump(2) + "\n";
}

Cig import_graph_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("import_graph_json: malformed JSON: ") + e.what());
  }
  Cig cig;
  try {
    cig.video_id = j.at("video_id").get<std::string>();
    cig.mode = parse_cig_mode(j.at("mode").get<std::string>());
    cig.session_count = j.at("sessions").get<std::size_t>();
    cig.nodes = j.at("nodes").get<std::vector<std::string>>();
    for (const auto& e : j.at("edges")) {
      const auto src = local_index(cig.nodes, e.at("src").get<std::string>());
      const auto dst = local_index(cig.nodes, e.at("dst").get<std::string>());
      if (src >= cig.nodes.size() || dst >= cig.nodes.size() ||
          cig.nodes[src] != e.at("src").get<std::string>() ||
          cig.nodes[dst] != e.at("dst").get<std::string>()) {
        throw DataError("import_graph_json: edge endpoint not in node list");
      }
      cig.edges[{src, dst}] = e.at("weight").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("import_graph_json: bad graph: ") + e.what());
  }
  cig.merged = true;
  return cig;
}

}  // namespace pathcast
