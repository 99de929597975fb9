#pragma once

#include <string>
#include <vector>

#include "pathcast/dynamic_model.hpp"
#include "pathcast/kvconfig.hpp"

namespace pathcast {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 256;
  double alpha = 0.1;
  double c = 3.0;
  double lambda1 = 1.0;
  double lambda2 = 1e-3;
  int appnp_layers = 4;
  std::size_t dim = 64;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  AggScheme agg = AggScheme::kMul;
  CigMode cig_mode = CigMode::kInfluence;
  std::size_t neighbor_budget = 10;
  std::size_t max_seq = 50;
  std::size_t grad_chunk = 32;      // events per backward pass
  std::size_t eval_negatives = 100;

  void validate() const;
  static TrainConfig from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
  ModelConfig model_config() const;
};

// Learning rates searched when tuning is requested.
const std::vector<double>& lr_grid();

Tensor bpr_loss(const Tensor& pos_score, const Tensor& neg_score);
Tensor ce_loss(const Tensor& probs, std::size_t target);
Tensor total_loss(const Tensor& bpr, const std::vector<Tensor>& ce_terms,
                  const ParamStore& params, double lambda1, double lambda2);

// Uniform over the complement of the observed set; throws when every
// community has been observed.
std::uint32_t sample_negative(const std::vector<bool>& observed, std::size_t observed_count,
                              Rng& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_ndcg5 = 0.0;
  std::int64_t wall_ms = 0;
};

std::string epoch_log_csv(const std::vector<EpochLog>& logs);

struct TrainedModel {
  Model model;
  ContentFeatures features;
  CigCache cigs;
  TemporalState state;  // after the final epoch, all train events applied
  std::vector<EpochLog> logs;
  double threshold_seconds = 0.0;
};

TrainedModel train(const Corpus& corpus, const Split& split, const ContentFeatures& features,
                   const TrainConfig& cfg);

// Runs the lr grid, returns the config whose final validation MRR is best
// (ties keep the earlier grid entry).
struct TuneResult {
  double best_lr = 0.0;
  std::vector<std::pair<double, double>> grid_mrr;  // (lr, val mrr)
};
TuneResult tune_lr(const Corpus& corpus, const Split& split, const ContentFeatures& features,
                   TrainConfig cfg);

}  // namespace pathcast
