#include "pathcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

int rank_candidates(double pos_score, const std::vector<double>& neg_scores) {
  int rank = 1;
  for (const double s : neg_scores) {
    if (s >= pos_score) ++rank;
  }
  return rank;
}

double ndcg_at_k(int rank, int k) {
  if (rank < 1) throw NumericError("ndcg_at_k: rank must be >= 1");
  if (rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double recall_at_k(int rank, int k) {
  if (rank < 1) throw NumericError("recall_at_k: rank must be >= 1");
  return rank <= k ? 1.0 : 0.0;
}

double mrr(const std::vector<int>& ranks) {
  if (ranks.empty()) throw NumericError("mrr: empty rank list");
  double acc = 0.0;
  for (const int r : ranks) {
    if (r < 1) throw NumericError("mrr: rank must be >= 1");
    acc += 1.0 / static_cast<double>(r);
  }
  return acc / static_cast<double>(ranks.size());
}

std::vector<int> simulate_random_ranks(std::size_t n_trials, std::size_t n_candidates, Rng& rng) {
  std::vector<int> ranks;
  ranks.reserve(n_trials);
  std::vector<double> negs(n_candidates > 0 ? n_candidates - 1 : 0);
  for (std::size_t i = 0; i < n_trials; ++i) {
    const double pos = rng.uniform();
    for (auto& v : negs) v = rng.uniform();
    ranks.push_back(rank_candidates(pos, negs));
  }
  return ranks;
}

// Top 25th percentile of training posting counts: the cutoff is the count
// at rank floor(0.75*m) of the ascending actives, so about a quarter of the
// communities seen in training qualify (ties widen the set).
std::vector<bool> popular_mask(const Corpus& corpus, const Split& split) {
  std::vector<std::size_t> counts(corpus.communities.size(), 0);
  for (std::size_t i = split.train_begin; i < split.train_end; ++i)
    ++counts[corpus.indexed[i].community];
  std::vector<std::size_t> active;
  for (const auto c : counts)
    if (c > 0) active.push_back(c);
  std::vector<bool> popular(counts.size(), false);
  if (active.empty()) return popular;
  std::sort(active.begin(), active.end());
  const std::size_t idx = std::min(
      active.size() - 1,
      static_cast<std::size_t>(std::floor(0.75 * static_cast<double>(active.size()))));
  const std::size_t cutoff = std::max<std::size_t>(active[idx], 1);
  for (std::size_t s = 0; s < counts.size(); ++s) popular[s] = counts[s] >= cutoff;
  return popular;
}

namespace {

// Shared walker: applies the pending-update protocol over [begin,end) and
// invokes the prediction hook before each batch is folded into memory.
template <typename PredictFn>
void walk_range(const Model& model, const Corpus& corpus, TemporalState& state,
                std::size_t begin, std::size_t end, std::size_t batch_size, FeatureMap& fm,
                PredictFn&& predict) {
  for (std::size_t batch_start = begin; batch_start < end; batch_start += batch_size) {
    const std::size_t batch_end = std::min(end, batch_start + batch_size);
    commit_pending_update(state, compute_pending_update(model, state, fm));
    predict(batch_start, batch_end);
    std::vector<EdgeEvent> events;
    events.reserve(batch_end - batch_start);
    for (std::size_t i = batch_start; i < batch_end; ++i) {
      const auto& e = corpus.indexed[i];
      events.push_back(
          {model.video_node(e.video), model.community_node(e.community), e.timestamp});
    }
    state.enqueue_batch(events);
  }
  commit_pending_update(state, compute_pending_update(model, state, fm));
}

struct Protocol {
  std::vector<std::size_t> train_count;               // per video
  std::vector<std::set<std::uint32_t>> interacted;    // per video, whole corpus
  std::vector<std::set<std::uint32_t>> train_pairs;   // per video, train communities
  std::vector<std::vector<std::uint32_t>> pool_cache;  // per video, lazily built
  std::vector<bool> pool_ready;

  const std::vector<std::uint32_t>& pool(std::uint32_t video, std::size_t n_communities) {
    if (!pool_ready[video]) {
      auto& pool = pool_cache[video];
      for (std::uint32_t s = 0; s < n_communities; ++s)
        if (!interacted[video].count(s)) pool.push_back(s);
      pool_ready[video] = true;
    }
    return pool_cache[video];
  }
};

Protocol build_protocol(const Corpus& corpus, const Split& split) {
  Protocol p;
  p.train_count.assign(corpus.videos.size(), 0);
  p.interacted.assign(corpus.videos.size(), {});
  p.train_pairs.assign(corpus.videos.size(), {});
  p.pool_cache.assign(corpus.videos.size(), {});
  p.pool_ready.assign(corpus.videos.size(), false);
  for (std::size_t i = 0; i < corpus.indexed.size(); ++i) {
    const auto& e = corpus.indexed[i];
    p.interacted[e.video].insert(e.community);
    if (i >= split.train_begin && i < split.train_end) {
      ++p.train_count[e.video];
      p.train_pairs[e.video].insert(e.community);
    }
  }
  return p;
}

struct SliceAccum {
  double ndcg5 = 0, rec5 = 0, ndcg10 = 0, rec10 = 0, rr = 0;
  std::size_t n = 0;
  void push(int rank, const std::vector<int>& ks) {
    ndcg5 += ndcg_at_k(rank, ks[0]);
    rec5 += recall_at_k(rank, ks[0]);
    ndcg10 += ndcg_at_k(rank, ks[1]);
    rec10 += recall_at_k(rank, ks[1]);
    rr += 1.0 / static_cast<double>(rank);
    ++n;
  }
};

MetricStats stats_over_seeds(const std::vector<double>& per_seed) {
  MetricStats st;
  if (per_seed.empty()) return st;
  double sum = 0;
  for (const double v : per_seed) sum += v;
  st.mean = sum / static_cast<double>(per_seed.size());
  double sq = 0;
  for (const double v : per_seed) sq += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(sq / static_cast<double>(per_seed.size()));
  return st;
}

}  // namespace

EvalReport evaluate(const Model& model, const ContentFeatures& features, const CigCache& cigs,
                    const Corpus& corpus, const Split& split, const EvalConfig& cfg) {
  if (cfg.ks.size() != 2) throw UsageError("evaluate: exactly two cutoffs expected");
  NoGradGuard ng;
  EvalReport report;
  report.n_seeds = cfg.n_seeds;
  report.test_events = split.test_size();

  Protocol protocol = build_protocol(corpus, split);
  const std::vector<bool> popular = popular_mask(corpus, split);

  TemporalState state(model.n_nodes(), model.cfg.dim);
  FeatureMap fm(model, features, cigs);

  // Replay history without predictions.
  walk_range(model, corpus, state, split.train_begin, split.val_end,
             cfg.batch_size, fm, [](std::size_t, std::size_t) {});

  // 4 slices + overall, per seed.
  std::map<std::string, std::vector<SliceAccum>> accum;
  for (const char* name :
       {"warm_popular", "warm_nonpopular", "cold_popular", "cold_nonpopular", "overall"})
    accum[name].assign(cfg.n_seeds, {});

  walk_range(model, corpus, state, split.test_begin, split.test_end,
             cfg.batch_size, fm, [&](std::size_t batch_start, std::size_t batch_end) {
    for (std::size_t i = batch_start; i < batch_end; ++i) {
      const auto& e = corpus.indexed[i];
      if (protocol.train_count[e.video] == 0) {
        ++report.skipped_no_train;
        continue;
      }
      if (protocol.train_pairs[e.video].count(e.community)) continue;  // seen in training

      const auto& pool = protocol.pool(e.video, corpus.communities.size());
      Embedder emb(model, state, fm, nullptr, static_cast<double>(e.timestamp), e.video);
      const Tensor v_emb = emb.embed(model.video_node(e.video));
      const double pos =
          score(model, v_emb, emb.embed(model.community_node(e.community))).item();
      std::map<std::uint32_t, double> score_cache;
      auto score_of = [&](std::uint32_t comm) {
        auto it = score_cache.find(comm);
        if (it != score_cache.end()) return it->second;
        const double s = score(model, v_emb, emb.embed(model.community_node(comm))).item();
        score_cache.emplace(comm, s);
        return s;
      };

      const bool warm = protocol.train_count[e.video] >= 2;
      const bool pop = popular[e.community];
      const std::string slice =
          std::string(warm ? "warm" : "cold") + (pop ? "_popular" : "_nonpopular");

      for (std::size_t seed_idx = 0; seed_idx < cfg.n_seeds; ++seed_idx) {
        RankedTrial trial;
        trial.video = e.video;
        trial.timestamp = e.timestamp;
        trial.positive = e.community;
        Rng trial_rng(mix64(mix64(cfg.base_seed, seed_idx), i));
        trial.negatives = sample_without_replacement(pool, cfg.n_negatives, trial_rng);
        std::vector<double> neg_scores;
        neg_scores.reserve(trial.negatives.size());
        for (const auto s : trial.negatives) neg_scores.push_back(score_of(s));
        trial.rank = rank_candidates(pos, neg_scores);
        accum[slice][seed_idx].push(trial.rank, cfg.ks);
        accum["overall"][seed_idx].push(trial.rank, cfg.ks);
      }
    }
  });

  for (auto& [name, per_seed] : accum) {
    SliceReport slice;
    slice.trials_per_seed = per_seed.empty() ? 0 : per_seed.front().n;
    std::vector<double> ndcg5, rec5, ndcg10, rec10, rrs;
    for (const auto& acc : per_seed) {
      if (acc.n == 0) continue;
      const double n = static_cast<double>(acc.n);
      ndcg5.push_back(acc.ndcg5 / n);
      rec5.push_back(acc.rec5 / n);
      ndcg10.push_back(acc.ndcg10 / n);
      rec10.push_back(acc.rec10 / n);
      rrs.push_back(acc.rr / n);
    }
    slice.metrics["ndcg@" + std::to_string(cfg.ks[0])] = stats_over_seeds(ndcg5);
    slice.metrics["rec@" + std::to_string(cfg.ks[0])] = stats_over_seeds(rec5);
    slice.metrics["ndcg@" + std::to_string(cfg.ks[1])] = stats_over_seeds(ndcg10);
    slice.metrics["rec@" + std::to_string(cfg.ks[1])] = stats_over_seeds(rec10);
    slice.metrics["mrr"] = stats_over_seeds(rrs);
    report.slices[name] = std::move(slice);
  }
  return report;
}

ValMetrics validation_metrics(const Model& model, const ContentFeatures& features,
                              const CigCache& cigs, const Corpus& corpus, const Split& split,
                              TemporalState state, std::size_t n_negatives, std::uint64_t seed,
                              std::size_t batch_size) {
  NoGradGuard ng;
  ValMetrics out;
  Protocol protocol = build_protocol(corpus, split);
  FeatureMap fm(model, features, cigs);
  double ndcg_sum = 0.0, rr_sum = 0.0;
  std::size_t n = 0;

  walk_range(model, corpus, state, split.val_begin, split.val_end, batch_size,
             fm, [&](std::size_t batch_start, std::size_t batch_end) {
    for (std::size_t i = batch_start; i < batch_end; ++i) {
      const auto& e = corpus.indexed[i];
      if (protocol.train_count[e.video] == 0) continue;
      const auto& pool = protocol.pool(e.video, corpus.communities.size());
      Rng trial_rng(mix64(mix64(seed, 0x7a11), i));
      const auto negs = sample_without_replacement(pool, n_negatives, trial_rng);

      Embedder emb(model, state, fm, nullptr, static_cast<double>(e.timestamp), e.video);
      const Tensor v_emb = emb.embed(model.video_node(e.video));
      const double pos =
          score(model, v_emb, emb.embed(model.community_node(e.community))).item();
      std::vector<double> neg_scores;
      neg_scores.reserve(negs.size());
      for (const auto s : negs)
        neg_scores.push_back(score(model, v_emb, emb.embed(model.community_node(s))).item());
      const int rank = rank_candidates(pos, neg_scores);
      ndcg_sum += ndcg_at_k(rank, 5);
      rr_sum += 1.0 / static_cast<double>(rank);
      ++n;
    }
  });
  if (n > 0) {
    out.ndcg5 = ndcg_sum / static_cast<double>(n);
    out.mrr = rr_sum / static_cast<double>(n);
  }
  out.trials = n;
  return out;
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["seeds"] = report.n_seeds;
  j["test_events"] = report.test_events;
  j["skipped_no_train"] = report.skipped_no_train;
  nlohmann::ordered_json slices;
  for (const auto& [name, slice] : report.slices) {
    nlohmann::ordered_json js;
    js["trials_per_seed"] = slice.trials_per_seed;
    for (const auto& [metric, st] : slice.metrics) {
      js[metric] = {{"mean", st.mean}, {"std", st.stddev}};
    }
    slices[name] = js;
  }
  j["slices"] = slices;
  return j.dump(2) + "\n";
}

std::string eval_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "slice,metric,mean,std\n";
  for (const auto& [name, slice] : report.slices) {
    for (const auto& [metric, st] : slice.metrics) {
      out << name << "," << metric << "," << st.mean << "," << st.stddev << "\n";
    }
  }
  return out.str();
}

}  // namespace pathcast
