#pragma once

#include <map>
#include <string>
#include <vector>

#include "pathcast/dynamic_model.hpp"

namespace pathcast {

struct EvalConfig {
  std::vector<int> ks = {5, 10};
  std::size_t n_negatives = 100;
  std::uint64_t base_seed = 1;
  std::size_t n_seeds = 5;
  std::size_t batch_size = 256;
};

// One ranking trial: a positive community against sampled negatives that
// never interacted with the video anywhere in the corpus.
struct RankedTrial {
  std::uint32_t video = 0;
  std::int64_t timestamp = 0;
  std::uint32_t positive = 0;
  std::vector<std::uint32_t> negatives;  // distinct, != positive
  int rank = 0;                          // 1-based, pessimistic ties
};

// Pessimistic tie-breaking: the positive ranks after every negative with a
// greater or equal score.
int rank_candidates(double pos_score, const std::vector<double>& neg_scores);

double ndcg_at_k(int rank, int k);
double recall_at_k(int rank, int k);
double mrr(const std::vector<int>& ranks);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // population std over seeds
};

struct SliceReport {
  std::map<std::string, MetricStats> metrics;  // ndcg@5, rec@5, ndcg@10, rec@10, mrr
  std::size_t trials_per_seed = 0;
};

struct EvalReport {
  std::map<std::string, SliceReport> slices;  // warm/cold x popular/nonpopular + overall
  std::size_t skipped_no_train = 0;
  std::size_t test_events = 0;
  std::size_t n_seeds = 0;
};

std::string eval_report_json(const EvalReport& report);
std::string eval_report_csv(const EvalReport& report);

// Replays train+validation into a fresh memory bank, then walks the test
// range; negatives are drawn per (seed, trial) from communities with no
// interaction with the video anywhere in the corpus.
EvalReport evaluate(const Model& model, const ContentFeatures& features, const CigCache& cigs,
                    const Corpus& corpus, const Split& split, const EvalConfig& cfg);

struct ValMetrics {
  double ndcg5 = 0.0;
  double mrr = 0.0;
  std::size_t trials = 0;
};

// Lightweight per-epoch validation pass from a post-train state snapshot.
ValMetrics validation_metrics(const Model& model, const ContentFeatures& features,
                              const CigCache& cigs, const Corpus& corpus, const Split& split,
                              TemporalState state, std::size_t n_negatives, std::uint64_t seed,
                              std::size_t batch_size);

// Ranks of a scorer drawing iid uniform scores, for protocol calibration.
std::vector<int> simulate_random_ranks(std::size_t n_trials, std::size_t n_candidates, Rng& rng);

// Communities in the top 25th percentile of training posting counts.
std::vector<bool> popular_mask(const Corpus& corpus, const Split& split);

}  // namespace pathcast
