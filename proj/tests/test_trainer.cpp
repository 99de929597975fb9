#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pathcast/synth.hpp"
#include "pathcast/trainer.hpp"

using namespace pathcast;

namespace {

SynthConfig small_synth(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_communities = 6;
  cfg.n_users = 40;
  cfg.n_videos = 18;
  cfg.planted_edges = "0->1,1->2,3->4,4->5";
  cfg.session_gap_logmean = 1.0;
  cfg.cross_gap_logmean = 4.5;
  cfg.seed = seed;
  return cfg;
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.grad_chunk = 8;
  cfg.neighbor_budget = 4;
  cfg.eval_negatives = 20;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("bpr loss values and monotonicity") {
  CHECK(bpr_loss(Tensor::scalar(1.3), Tensor::scalar(1.3)).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // softplus(-20)
  CHECK(bpr_loss(Tensor::scalar(20.0), Tensor::scalar(0.0)).item() ==
        doctest::Approx(2.0611536e-9).epsilon(1e-4));
  double prev = bpr_loss(Tensor::scalar(-3.0), Tensor::scalar(0.0)).item();
  for (double margin = -2.5; margin <= 3.0; margin += 0.5) {
    const double cur = bpr_loss(Tensor::scalar(margin), Tensor::scalar(0.0)).item();
    CHECK(cur < prev);
    prev = cur;
  }
  // stable far into the tail
  CHECK(std::isfinite(bpr_loss(Tensor::scalar(-800.0), Tensor::scalar(200.0)).item()));
}

TEST_CASE("ce loss values") {
  const Tensor uniform = Tensor::vector({0.25, 0.25, 0.25, 0.25});
  for (std::size_t target = 0; target < 4; ++target)
    CHECK(ce_loss(uniform, target).item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(ce_loss(Tensor::vector({0.0, 1.0}), 1).item() == doctest::Approx(0.0));
  CHECK(ce_loss(Tensor::vector({0.25, 0.5, 0.25}), 0).item() ==
        doctest::Approx(1.386294).epsilon(1e-6));
  CHECK_THROWS_AS(ce_loss(uniform, 9), NumericError);
}

TEST_CASE("total loss composition") {
  ParamStore store;
  store.add("w", Tensor::vector({0.5, -0.5}));
  const Tensor bpr = Tensor::scalar(2.0);
  const std::vector<Tensor> ces = {Tensor::scalar(1.0), Tensor::scalar(3.0)};
  CHECK(total_loss(bpr, ces, store, 0.0, 0.0).item() == doctest::Approx(2.0));
  // lambda1=1, lambda2=1e-3, |theta|^2 = 0.5
  CHECK(total_loss(bpr, ces, store, 1.0, 1e-3).item() ==
        doctest::Approx(2.0 + 4.0 + 1e-3 * 0.5).epsilon(1e-12));
  ParamStore empty;
  CHECK(total_loss(bpr, {}, empty, 1.0, 1e-3).item() == doctest::Approx(2.0));
}

TEST_CASE("total loss gradient equals the sum of component gradients") {
  ParamStore store;
  Tensor w = store.add("w", Tensor::vector({0.3, -0.7}));
  auto bpr_term = [&] { return bpr_loss(sum(w), Tensor::scalar(0.1)); };
  auto ce_term = [&] { return scale(l2_norm_sq(w), 0.5); };

  store.zero_grad();
  backward(total_loss(bpr_term(), {ce_term()}, store, 1.0, 1e-3));
  const std::vector<double> combined = w.grad();

  store.zero_grad();
  backward(bpr_term());
  const std::vector<double> bpr_grad = w.grad();
  store.zero_grad();
  backward(scale(ce_term(), 1.0));
  const std::vector<double> ce_grad = w.grad();
  store.zero_grad();
  backward(scale(store.l2_penalty(), 1e-3));
  const std::vector<double> reg_grad = w.grad();

  for (std::size_t i = 0; i < 2; ++i)
    CHECK(combined[i] ==
          doctest::Approx(bpr_grad[i] + ce_grad[i] + reg_grad[i]).epsilon(1e-12));
}

TEST_CASE("with zero data loss, weight decay shrinks parameter norm monotonically") {
  ParamStore store;
  Tensor w = store.add("w", Tensor::vector({0.8, -0.6, 0.4}));
  auto norm = [&] {
    double n = 0;
    for (const double v : w.value()) n += v * v;
    return n;
  };
  double prev = norm();
  for (int step = 0; step < 5; ++step) {
    store.zero_grad();
    backward(scale(store.l2_penalty(), 1e-3));
    store.adam_step(1e-2);
    const double cur = norm();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("negative sampling: forced choice and exhaustion") {
  Rng rng(1);
  std::vector<bool> observed = {true, true, false};
  for (int i = 0; i < 10; ++i) CHECK(sample_negative(observed, 2, rng) == 2);
  std::vector<bool> all = {true, true, true};
  CHECK_THROWS_AS(sample_negative(all, 3, rng), DataError);
}

TEST_CASE("negative sampling is uniform over the complement") {
  Rng rng(7);
  std::vector<bool> observed(10, false);
  observed[2] = observed[7] = true;
  std::vector<std::size_t> counts(10, 0);
  const std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) ++counts[sample_negative(observed, 2, rng)];
  CHECK(counts[2] == 0);
  CHECK(counts[7] == 0);
  const double expected = static_cast<double>(draws) / 8.0;
  for (std::size_t s = 0; s < 10; ++s) {
    if (observed[s]) continue;
    CHECK(std::fabs(static_cast<double>(counts[s]) - expected) < 0.05 * draws);
  }
}

TEST_CASE("train config parsing, defaults and validation") {
  KvConfig kv = KvConfig::from_string("lr = 0.003\nepochs = 4\nagg = concat\ncig_mode = seq\n");
  const TrainConfig cfg = TrainConfig::from_kv(kv);
  CHECK(cfg.lr == doctest::Approx(0.003));
  CHECK(cfg.epochs == 4);
  CHECK(cfg.agg == AggScheme::kConcat);
  CHECK(cfg.cig_mode == CigMode::kSeq);
  // paper-faithful defaults stay in place
  CHECK(cfg.batch_size == 256);
  CHECK(cfg.alpha == doctest::Approx(0.1));
  CHECK(cfg.c == doctest::Approx(3.0));
  CHECK(cfg.lambda1 == doctest::Approx(1.0));
  CHECK(cfg.lambda2 == doctest::Approx(1e-3));
  CHECK(cfg.appnp_layers == 4);
  CHECK(cfg.dim == 64);

  KvConfig bad = KvConfig::from_string("lr = -1\n");
  CHECK_THROWS_AS(TrainConfig::from_kv(bad), UsageError);
  CHECK_THROWS_AS(TrainConfig::from_kv(KvConfig::from_string("alpha = 1.0\n")), UsageError);

  const auto& grid = lr_grid();
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == doctest::Approx(1e-4));
  CHECK(grid.back() == doctest::Approx(1e-2));
}

TEST_CASE("zero epochs returns the initialization unchanged") {
  const auto synth = generate(small_synth(11));
  const Corpus corpus = corpus_from_events(synth.events);
  const Split split = chronological_split(corpus);
  auto cfg = tiny_train_config();
  cfg.epochs = 0;
  const ContentFeatures features = default_content_features(corpus, cfg.dim);
  const TrainedModel trained = train(corpus, split, features, cfg);
  const Model fresh = Model::create(cfg.model_config(), corpus.videos.size(),
                                    corpus.communities.size(), corpus.channels.size(), cfg.seed);
  CHECK(trained.model.store.value_checksum() == fresh.store.value_checksum());
  CHECK(trained.logs.empty());
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto synth = generate(small_synth(13));
  const Corpus corpus = corpus_from_events(synth.events);
  const Split split = chronological_split(corpus);
  const auto cfg = tiny_train_config();
  const ContentFeatures features = default_content_features(corpus, cfg.dim);

  const TrainedModel a = train(corpus, split, features, cfg);
  const TrainedModel b = train(corpus, split, features, cfg);
  CHECK(a.model.store.value_checksum() == b.model.store.value_checksum());
  REQUIRE(a.logs.size() == b.logs.size());
  for (std::size_t i = 0; i < a.logs.size(); ++i) {
    CHECK(a.logs[i].train_loss == b.logs[i].train_loss);
    CHECK(a.logs[i].val_ndcg5 == b.logs[i].val_ndcg5);
  }
}

TEST_CASE("training loss is finite and logged per epoch") {
  const auto synth = generate(small_synth(17));
  const Corpus corpus = corpus_from_events(synth.events);
  const Split split = chronological_split(corpus);
  const auto cfg = tiny_train_config();
  const ContentFeatures features = default_content_features(corpus, cfg.dim);
  const TrainedModel trained = train(corpus, split, features, cfg);
  REQUIRE(trained.logs.size() == cfg.epochs);
  for (const auto& log : trained.logs) {
    CHECK(std::isfinite(log.train_loss));
    CHECK(log.val_ndcg5 >= 0.0);
    CHECK(log.val_ndcg5 <= 1.0);
  }
  const std::string csv = epoch_log_csv(trained.logs);
  CHECK(csv.rfind("epoch,train_loss,val_ndcg5,wall_ms", 0) == 0);
}

TEST_CASE("epoch log csv renders rows") {
  std::vector<EpochLog> logs = {{0, 1.5, 0.2, 10}, {1, 1.2, 0.3, 11}};
  const auto csv = epoch_log_csv(logs);
  CHECK(csv.find("0,1.5,0.2,10") != std::string::npos);
  CHECK(csv.find("1,1.2,0.3,11") != std::string::npos);
}

TEST_CASE("leakage guard rejects train events after the validation start") {
  const auto synth = generate(small_synth(19));
  const Corpus corpus = corpus_from_events(synth.events);
  Split bad = chronological_split(corpus);
  // overlap the ranges so a train event postdates the first validation event
  bad.train_end = bad.val_end;
  const auto cfg = tiny_train_config();
  CHECK_THROWS_AS(train(corpus, bad, default_content_features(corpus, cfg.dim), cfg), DataError);
}

TEST_CASE("lr tuning sweeps the grid and picks by validation MRR") {
  const auto synth = generate(small_synth(23));
  const Corpus corpus = corpus_from_events(synth.events);
  const Split split = chronological_split(corpus);
  auto cfg = tiny_train_config();
  cfg.epochs = 1;
  const auto result = tune_lr(corpus, split, default_content_features(corpus, cfg.dim), cfg);
  REQUIRE(result.grid_mrr.size() == lr_grid().size());
  bool in_grid = false;
  double best = -1.0;
  for (const auto& [lr, m] : result.grid_mrr) {
    if (lr == result.best_lr) in_grid = true;
    best = std::max(best, m);
  }
  CHECK(in_grid);
  for (const auto& [lr, m] : result.grid_mrr)
    if (lr == result.best_lr) CHECK(m == doctest::Approx(best));
}
