#include "pathcast/synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pathcast/common.hpp"
#include "pathcast/rng.hpp"

namespace pathcast {

namespace {

constexpr double kSameUserPairShare = 0.125;  // fraction of concurrent events

struct PlantedDag {
  std::size_t n = 0;
  std::vector<std::vector<std::uint32_t>> out;  // adjacency
  std::vector<DirectedEdge> edges;
};

PlantedDag layered_random_dag(std::size_t n, double density, Rng& rng) {
  PlantedDag dag;
  dag.n = n;
  dag.out.assign(n, {});
  // Consecutive layers, fully connected pairwise; density widens layers.
  const std::size_t max_extra =
      static_cast<std::size_t>(std::floor(std::clamp(density, 0.0, 1.0) * 4.0));
  std::vector<std::vector<std::uint32_t>> layers;
  std::uint32_t next = 0;
  while (next < n) {
    const std::size_t width =
        std::min<std::size_t>(1 + (max_extra > 0 ? rng.uniform_int(max_extra + 1) : 0),
                              n - next);
    std::vector<std::uint32_t> layer;
    for (std::size_t i = 0; i < width; ++i) layer.push_back(next++);
    layers.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    for (const auto u : layers[l])
      for (const auto v : layers[l + 1]) {
        dag.out[u].push_back(v);
        dag.edges.emplace_back(u, v);
      }
  }
  return dag;
}

PlantedDag parse_planted(const std::string& text, std::size_t n, Rng& rng) {
  if (text.rfind("random:", 0) == 0) {
    const double density = std::stod(text.substr(7));
    return layered_random_dag(n, density, rng);
  }
  PlantedDag dag;
  dag.n = n;
  dag.out.assign(n, {});
  for (const auto& part : split(text, ',')) {
    const std::string item = trim(part);
    if (item.empty()) continue;
    const auto arrow = item.find("->");
    if (arrow == std::string::npos)
      throw DataError("planted_edges: expected 'src->dst' entries: " + item);
    const auto src = static_cast<std::uint32_t>(std::stoul(trim(item.substr(0, arrow))));
    const auto dst = static_cast<std::uint32_t>(std::stoul(trim(item.substr(arrow + 2))));
    if (src >= n || dst >= n) throw DataError("planted_edges: index out of range: " + item);
    if (src == dst) throw DataError("planted_edges: self edge: " + item);
    dag.out[src].push_back(dst);
    dag.edges.emplace_back(src, dst);
  }
  return dag;
}

std::set<DirectedEdge> edge_set(const Cig& built) {
  std::set<DirectedEdge> out;
  auto insert = [&](std::uint32_t src_local, std::uint32_t dst_local) {
    out.emplace(synth_community_index(built.nodes[src_local]),
                synth_community_index(built.nodes[dst_local]));
  };
  if (built.merged) {
    for (const auto& [key, _] : built.edges) insert(key.first, key.second);
  } else {
    for (const auto& [key, _] : built.multi_edges) insert(key.first, key.second);
  }
  return out;
}

RecoveryScore score_sets(const std::set<DirectedEdge>& built,
                         const std::set<DirectedEdge>& intended) {
  RecoveryScore s;
  std::size_t hit = 0;
  for (const auto& e : built)
    if (intended.count(e)) ++hit;
  s.precision = built.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(built.size());
  s.recall =
      intended.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(intended.size());
  return s;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_communities < 2) throw UsageError("synth config: need at least 2 communities");
  if (n_users < 2 * n_communities + 4)
    throw UsageError("synth config: n_users too small for fresh-user walks");
  if (cross_gap_logmean - session_gap_logmean < 2.0)
    throw UsageError("synth config: cross/session gap log-means must be separated by >= 2");
  if (session_gap_logstd < 0 || cross_gap_logstd < 0)
    throw UsageError("synth config: negative log-std");
  if (concurrent_share_prob < 0 || concurrent_share_prob > 1)
    throw UsageError("synth config: concurrent_share_prob must be in [0,1]");
}

SynthConfig SynthConfig::from_kv(const KvConfig& kv) {
  SynthConfig cfg;
  cfg.n_communities =
      static_cast<std::size_t>(kv.get_int("n_communities", static_cast<std::int64_t>(cfg.n_communities)));
  cfg.n_users = static_cast<std::size_t>(kv.get_int("n_users", static_cast<std::int64_t>(cfg.n_users)));
  cfg.n_videos = static_cast<std::size_t>(kv.get_int("n_videos", static_cast<std::int64_t>(cfg.n_videos)));
  cfg.planted_edges = kv.get_string("planted_edges", cfg.planted_edges);
  cfg.session_gap_logmean = kv.get_double("session_gap_logmean", cfg.session_gap_logmean);
  cfg.session_gap_logstd = kv.get_double("session_gap_logstd", cfg.session_gap_logstd);
  cfg.cross_gap_logmean = kv.get_double("cross_gap_logmean", cfg.cross_gap_logmean);
  cfg.cross_gap_logstd = kv.get_double("cross_gap_logstd", cfg.cross_gap_logstd);
  cfg.concurrent_share_prob = kv.get_double("concurrent_share_prob", cfg.concurrent_share_prob);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(cfg.seed)));
  cfg.validate();
  return cfg;
}

std::string synth_community_name(std::uint32_t idx) { return "c" + std::to_string(idx); }

std::uint32_t synth_community_index(const std::string& name) {
  if (name.size() < 2 || name[0] != 'c')
    throw DataError("not a synthetic community id: " + name);
  return static_cast<std::uint32_t>(std::stoul(name.substr(1)));
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  Rng dag_rng = root.fork(0xda6);
  const PlantedDag dag = parse_planted(cfg.planted_edges, cfg.n_communities, dag_rng);
  if (cfg.n_videos > 0 && dag.n == 0) throw DataError("generate: empty planted graph");

  SynthResult result;
  result.truth.dag = dag.edges;

  // Diffusion starts at planted sources; without any the walk may start
  // anywhere with outgoing edges, and on an edgeless graph anywhere at all.
  std::vector<std::uint32_t> seeds_pool;
  {
    std::vector<std::size_t> indeg(dag.n, 0);
    for (const auto& [src, dst] : dag.edges) ++indeg[dst];
    for (std::uint32_t u = 0; u < dag.n; ++u)
      if (indeg[u] == 0 && !dag.out[u].empty()) seeds_pool.push_back(u);
    if (seeds_pool.empty())
      for (std::uint32_t u = 0; u < dag.n; ++u)
        if (!dag.out[u].empty()) seeds_pool.push_back(u);
    if (seeds_pool.empty())
      for (std::uint32_t u = 0; u < dag.n; ++u) seeds_pool.push_back(u);
  }

  const double offset_span = 8.0 * std::pow(10.0, cfg.cross_gap_logmean);

  for (std::size_t vid = 0; vid < cfg.n_videos; ++vid) {
    Rng rng = root.fork(1000 + vid);
    const std::string video_id = "vid" + std::to_string(vid);
    const std::string channel_id = "ch" + std::to_string(vid % 8);
    std::set<DirectedEdge>& intended = result.truth.per_video[video_id];

    std::size_t user_cursor = (vid * 131) % cfg.n_users;
    auto fresh_user = [&]() {
      const std::string id = "u" + std::to_string(user_cursor);
      user_cursor = (user_cursor + 1) % cfg.n_users;
      return id;
    };

    double clock = rng.uniform(0.0, offset_span);
    std::vector<std::uint32_t> frontier = {seeds_pool[rng.uniform_int(seeds_pool.size())]};

    auto emit = [&](const std::string& user, std::uint32_t comm) {
      PostingInstance p;
      p.video_id = video_id;
      p.community_id = synth_community_name(comm);
      p.user_id = user;
      p.timestamp = static_cast<std::int64_t>(std::llround(clock));
      p.channel_id = channel_id;
      result.events.push_back(std::move(p));
    };

    bool first_session = true;
    std::size_t hops = 0;
    while (!frontier.empty() && hops++ <= cfg.n_communities) {  // cap guards cyclic input
      if (!first_session) clock += rng.log10_normal(cfg.cross_gap_logmean, cfg.cross_gap_logstd);
      first_session = false;

      // One fresh user per community in the frontier, all within a session.
      std::string anchor_user;
      std::uint32_t anchor_comm = frontier.front();
      for (std::size_t i = 0; i < frontier.size(); ++i) {
        if (i > 0) clock += rng.log10_normal(cfg.session_gap_logmean, cfg.session_gap_logstd);
        const std::string user = fresh_user();
        if (i == 0) {
          anchor_user = user;
          anchor_comm = frontier[i];
        }
        emit(user, frontier[i]);
      }

      if (cfg.concurrent_share_prob > 0 && rng.bernoulli(cfg.concurrent_share_prob)) {
        clock += rng.log10_normal(cfg.session_gap_logmean, cfg.session_gap_logstd);
        if (rng.uniform() < kSameUserPairShare) {
          // Same user, second community: a planted bidirectional edge in the
          // built graph but adversarial noise with respect to the truth.
          std::uint32_t other = static_cast<std::uint32_t>(rng.uniform_int(cfg.n_communities));
          if (other == anchor_comm) other = (other + 1) % static_cast<std::uint32_t>(cfg.n_communities);
          emit(anchor_user, other);
        } else {
          // Different user, same community: concurrent share, no edge.
          emit(fresh_user(), frontier[rng.uniform_int(frontier.size())]);
        }
      }

      // Advance the diffusion: union of out-neighbors, deduplicated.
      std::set<std::uint32_t> next;
      for (const auto u : frontier) {
        for (const auto v : dag.out[u]) {
          intended.emplace(u, v);
          next.insert(v);
        }
      }
      frontier.assign(next.begin(), next.end());
    }
  }
  return result;
}

RecoveryScore recovery_score(const Cig& built, const std::set<DirectedEdge>& intended) {
  return score_sets(edge_set(built), intended);
}

RecoveryScore recovery_score_mean(const std::map<std::string, Cig>& built,
                                  const PlantedTruth& truth) {
  RecoveryScore total{0.0, 0.0};
  std::size_t n = 0;
  for (const auto& [video, intended] : truth.per_video) {
    const auto it = built.find(video);
    if (it == built.end()) continue;
    const auto s = recovery_score(it->second, intended);
    total.precision += s.precision;
    total.recall += s.recall;
    ++n;
  }
  if (n == 0) return {1.0, 1.0};
  return {total.precision / static_cast<double>(n), total.recall / static_cast<double>(n)};
}

RecoveryScore recovery_score_pooled(const std::map<std::string, Cig>& built,
                                    const PlantedTruth& truth) {
  std::set<DirectedEdge> built_union, intended_union;
  for (const auto& [video, cig] : built) {
    const auto s = edge_set(cig);
    built_union.insert(s.begin(), s.end());
  }
  for (const auto& [video, intended] : truth.per_video)
    intended_union.insert(intended.begin(), intended.end());
  return score_sets(built_union, intended_union);
}

std::string PlantedTruth::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json dag_arr = nlohmann::ordered_json::array();
  for (const auto& [src, dst] : dag)
    dag_arr.push_back({{"src", synth_community_name(src)}, {"dst", synth_community_name(dst)}});
  j["dag"] = dag_arr;
  nlohmann::ordered_json videos;
  for (const auto& [video, edges] : per_video) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [src, dst] : edges)
      arr.push_back({{"src", synth_community_name(src)}, {"dst", synth_community_name(dst)}});
    videos[video] = arr;
  }
  j["videos"] = videos;
  return j.dump(2) + "\n";
}

PlantedTruth PlantedTruth::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("truth file: malformed JSON: ") + e.what());
  }
  PlantedTruth truth;
  for (const auto& e : j.at("dag"))
    truth.dag.emplace_back(synth_community_index(e.at("src").get<std::string>()),
                           synth_community_index(e.at("dst").get<std::string>()));
  for (const auto& [video, arr] : j.at("videos").items()) {
    auto& edges = truth.per_video[video];
    for (const auto& e : arr)
      edges.emplace(synth_community_index(e.at("src").get<std::string>()),
                    synth_community_index(e.at("dst").get<std::string>()));
  }
  return truth;
}

}  // namespace pathcast
