#include "pathcast/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "pathcast/common.hpp"
#include "pathcast/eval.hpp"
#include "pathcast/intervals.hpp"

namespace pathcast {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void TrainConfig::validate() const {
  if (lr <= 0) throw UsageError("train config: lr must be positive");
  if (batch_size == 0) throw UsageError("train config: batch_size must be positive");
  if (alpha < 0 || alpha >= 1) throw UsageError("train config: alpha must be in [0,1)");
  if (c < 0) throw UsageError("train config: c must be non-negative");
  if (lambda1 < 0 || lambda2 < 0) throw UsageError("train config: lambdas must be non-negative");
  if (appnp_layers < 1) throw UsageError("train config: appnp_layers must be >= 1");
  if (dim == 0) throw UsageError("train config: dim must be positive");
  if (max_seq == 0) throw UsageError("train config: max_seq must be positive");
  if (grad_chunk == 0) throw UsageError("train config: grad_chunk must be positive");
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig cfg;
  cfg.lr = kv.get_double("lr", cfg.lr);
  cfg.batch_size = static_cast<std::size_t>(kv.get_int("batch_size", static_cast<std::int64_t>(cfg.batch_size)));
  cfg.alpha = kv.get_double("alpha", cfg.alpha);
  cfg.c = kv.get_double("c", cfg.c);
  cfg.lambda1 = kv.get_double("lambda1", cfg.lambda1);
  cfg.lambda2 = kv.get_double("lambda2", cfg.lambda2);
  cfg.appnp_layers = static_cast<int>(kv.get_int("appnp_layers", cfg.appnp_layers));
  cfg.dim = static_cast<std::size_t>(kv.get_int("dim", static_cast<std::int64_t>(cfg.dim)));
  cfg.epochs = static_cast<std::size_t>(kv.get_int("epochs", static_cast<std::int64_t>(cfg.epochs)));
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(cfg.seed)));
  cfg.agg = parse_agg_scheme(kv.get_string("agg", agg_scheme_name(cfg.agg)));
  cfg.cig_mode = parse_cig_mode(kv.get_string("cig_mode", cig_mode_name(cfg.cig_mode)));
  cfg.neighbor_budget = static_cast<std::size_t>(
      kv.get_int("neighbor_budget", static_cast<std::int64_t>(cfg.neighbor_budget)));
  cfg.max_seq = static_cast<std::size_t>(kv.get_int("max_seq", static_cast<std::int64_t>(cfg.max_seq)));
  cfg.grad_chunk = static_cast<std::size_t>(kv.get_int("grad_chunk", static_cast<std::int64_t>(cfg.grad_chunk)));
  cfg.eval_negatives = static_cast<std::size_t>(
      kv.get_int("eval_negatives", static_cast<std::int64_t>(cfg.eval_negatives)));
  cfg.validate();
  return cfg;
}

KvConfig TrainConfig::to_kv() const {
  KvConfig kv;
  std::ostringstream lr_s;
  lr_s << lr;
  kv.set("lr", lr_s.str());
  kv.set("batch_size", std::to_string(batch_size));
  auto set_d = [&](const char* key, double v) {
    std::ostringstream s;
    s << v;
    kv.set(key, s.str());
  };
  set_d("alpha", alpha);
  set_d("c", c);
  set_d("lambda1", lambda1);
  set_d("lambda2", lambda2);
  kv.set("appnp_layers", std::to_string(appnp_layers));
  kv.set("dim", std::to_string(dim));
  kv.set("epochs", std::to_string(epochs));
  kv.set("seed", std::to_string(seed));
  kv.set("agg", agg_scheme_name(agg));
  kv.set("cig_mode", cig_mode_name(cig_mode));
  kv.set("neighbor_budget", std::to_string(neighbor_budget));
  kv.set("max_seq", std::to_string(max_seq));
  kv.set("grad_chunk", std::to_string(grad_chunk));
  kv.set("eval_negatives", std::to_string(eval_negatives));
  return kv;
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig mc;
  mc.dim = dim;
  mc.appnp_layers = appnp_layers;
  mc.alpha = alpha;
  mc.agg = agg;
  mc.neighbor_budget = neighbor_budget;
  mc.max_seq = max_seq;
  return mc;
}

const std::vector<double>& lr_grid() {
  static const std::vector<double> grid = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  return grid;
}

Tensor bpr_loss(const Tensor& pos_score, const Tensor& neg_score) {
  return scale(logsigmoid(sub(pos_score, neg_score)), -1.0);
}

Tensor ce_loss(const Tensor& probs, std::size_t target) {
  return scale(log(pick(probs, target)), -1.0);
}

Tensor total_loss(const Tensor& bpr, const std::vector<Tensor>& ce_terms,
                  const ParamStore& params, double lambda1, double lambda2) {
  Tensor acc = bpr.defined() ? bpr : Tensor::scalar(0.0);
  if (!ce_terms.empty()) {
    Tensor ce = ce_terms.front();
    for (std::size_t i = 1; i < ce_terms.size(); ++i) ce = add(ce, ce_terms[i]);
    acc = add(acc, scale(ce, lambda1));
  }
  if (lambda2 != 0.0) acc = add(acc, scale(params.l2_penalty(), lambda2));
  return acc;
}

std::uint32_t sample_negative(const std::vector<bool>& observed, std::size_t observed_count,
                              Rng& rng) {
  if (observed_count >= observed.size())
    throw DataError("sample_negative: every community is observed");
  const std::uint64_t k = rng.uniform_int(observed.size() - observed_count);
  std::uint64_t skip = k;
  for (std::size_t s = 0; s < observed.size(); ++s) {
    if (observed[s]) continue;
    if (skip == 0) return static_cast<std::uint32_t>(s);
    --skip;
  }
  throw DataError("sample_negative: inconsistent observed count");
}

std::string epoch_log_csv(const std::vector<EpochLog>& logs) {
  std::ostringstream out;
  out << "epoch,train_loss,val_ndcg5,wall_ms\n";
  for (const auto& log : logs) {
    out << log.epoch << "," << log.train_loss << "," << log.val_ndcg5 << "," << log.wall_ms
        << "\n";
  }
  return out.str();
}

TrainedModel train(const Corpus& corpus, const Split& split, const ContentFeatures& features,
                   const TrainConfig& cfg) {
  cfg.validate();
  if (split.train_size() == 0) throw DataError("train: empty training range");
  if (split.val_size() > 0 &&
      corpus.events[split.train_end - 1].timestamp > corpus.events[split.val_begin].timestamp)
    throw DataError("train: leakage guard failed, train events after validation start");

  // Session threshold fit on training interactions only; small corpora
  // without enough interval samples fall back to one hour.
  double threshold = 3600.0;
  try {
    const auto report = analyze_intervals(corpus, split.train_begin, split.train_end, cfg.c);
    threshold = report.threshold;
  } catch (const DataError&) {
  }

  TrainedModel out;
  out.threshold_seconds = threshold;
  out.cigs = build_cig_cache(corpus, split.train_begin, split.train_end, threshold, cfg.cig_mode,
                             cfg.seed);
  out.features = features;
  out.model = Model::create(cfg.model_config(), corpus.videos.size(), corpus.communities.size(),
                            corpus.channels.size(), cfg.seed);
  Model& model = out.model;

  // Observed community sets over the train range, for negative sampling.
  std::vector<std::vector<bool>> observed(corpus.videos.size(),
                                          std::vector<bool>(corpus.communities.size(), false));
  std::vector<std::size_t> observed_count(corpus.videos.size(), 0);
  // Per-video train sequence as (time, community) pairs in stream order.
  std::vector<std::vector<std::pair<std::int64_t, std::uint32_t>>> train_seq(
      corpus.videos.size());
  for (std::size_t i = split.train_begin; i < split.train_end; ++i) {
    const auto& e = corpus.indexed[i];
    if (!observed[e.video][e.community]) {
      observed[e.video][e.community] = true;
      ++observed_count[e.video];
    }
    train_seq[e.video].emplace_back(e.timestamp, e.community);
  }

  out.state = TemporalState(model.n_nodes(), cfg.dim);
  TemporalState& state = out.state;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::int64_t t0 = now_ms();
    state.reset();
    Rng neg_rng(mix64(cfg.seed, 0xba5e + epoch));
    double loss_sum = 0.0;

    for (std::size_t batch_start = split.train_begin; batch_start < split.train_end;
         batch_start += cfg.batch_size) {
      const std::size_t batch_end = std::min(split.train_end, batch_start + cfg.batch_size);

      // Values committed after the optimizer step; per-chunk graphs rebuild
      // the same update so gradients reach the message and GRU parameters.
      PendingUpdate committed;
      {
        NoGradGuard ng;
        FeatureMap fm(model, features, out.cigs);
        committed = compute_pending_update(model, state, fm);
      }

      for (std::size_t chunk_start = batch_start; chunk_start < batch_end;
           chunk_start += cfg.grad_chunk) {
        const std::size_t chunk_end = std::min(batch_end, chunk_start + cfg.grad_chunk);
        FeatureMap fm(model, features, out.cigs);
        const PendingUpdate update = compute_pending_update(model, state, fm);

        Tensor bpr_total;
        std::vector<Tensor> ce_terms;
        for (std::size_t i = chunk_start; i < chunk_end; ++i) {
          const auto& e = corpus.indexed[i];
          const double t = static_cast<double>(e.timestamp);
          Embedder emb(model, state, fm, &update.memory, t, e.video);
          const Tensor v_emb = emb.embed(model.video_node(e.video));
          const Tensor pos_emb = emb.embed(model.community_node(e.community));
          const Tensor pos = score(model, v_emb, pos_emb);

          if (observed_count[e.video] < corpus.communities.size()) {
            const std::uint32_t neg =
                sample_negative(observed[e.video], observed_count[e.video], neg_rng);
            const Tensor neg_emb = emb.embed(model.community_node(neg));
            const Tensor term = bpr_loss(pos, score(model, v_emb, neg_emb));
            bpr_total = bpr_total.defined() ? add(bpr_total, term) : term;
          }

          // Next-community objective over the strict-past train prefix.
          const auto& seq = train_seq[e.video];
          std::vector<std::size_t> locals;
          const CigDense* cig = fm.cig_of(e.video);
          if (cig != nullptr) {
            for (const auto& [ts, comm] : seq) {
              if (ts >= e.timestamp) break;
              const auto local = cig->local_of(comm);
              if (local) locals.push_back(*local);
            }
            if (locals.size() > cfg.max_seq)
              locals.erase(locals.begin(),
                           locals.end() - static_cast<std::ptrdiff_t>(cfg.max_seq));
            if (!locals.empty()) {
              const Tensor prop = fm.appnp_of(e.video);
              const Tensor seq_embs = gather_rows(prop, locals);
              const auto attn = session_attention(seq_embs, model.attn);
              const Tensor probs =
                  next_community_distribution(attn.context, row(seq_embs, locals.size() - 1),
                                              model.community_table, model.static_head);
              ce_terms.push_back(ce_loss(probs, e.community));
            }
          }
        }

        const double l2 = chunk_start == batch_start ? cfg.lambda2 : 0.0;
        const Tensor loss = total_loss(bpr_total, ce_terms, model.store, cfg.lambda1, l2);
        if (!loss.all_finite())
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", event " + std::to_string(chunk_start));
        loss_sum += loss.item();
        backward(loss);
      }

      model.store.adam_step(cfg.lr);
      commit_pending_update(state, committed);

      std::vector<EdgeEvent> batch_events;
      batch_events.reserve(batch_end - batch_start);
      for (std::size_t i = batch_start; i < batch_end; ++i) {
        const auto& e = corpus.indexed[i];
        batch_events.push_back(
            {model.video_node(e.video), model.community_node(e.community), e.timestamp});
      }
      state.enqueue_batch(batch_events);
    }

    // Fold the last batch into memory so snapshots see every train event.
    {
      NoGradGuard ng;
      FeatureMap fm(model, features, out.cigs);
      commit_pending_update(state, compute_pending_update(model, state, fm));
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss =
        loss_sum / static_cast<double>(std::max<std::size_t>(1, split.train_size()));
    if (split.val_size() > 0) {
      const auto vm = validation_metrics(model, features, out.cigs, corpus, split, state,
                                         cfg.eval_negatives, cfg.seed, cfg.batch_size);
      log.val_ndcg5 = vm.ndcg5;
    }
    log.wall_ms = now_ms() - t0;
    out.logs.push_back(log);
  }
  return out;
}

TuneResult tune_lr(const Corpus& corpus, const Split& split, const ContentFeatures& features,
                   TrainConfig cfg) {
  TuneResult result;
  double best_mrr = -1.0;
  for (const double lr : lr_grid()) {
    cfg.lr = lr;
    const auto trained = train(corpus, split, features, cfg);
    const auto vm = validation_metrics(trained.model, trained.features, trained.cigs, corpus,
                                       split, trained.state, cfg.eval_negatives, cfg.seed,
                                       cfg.batch_size);
    result.grid_mrr.emplace_back(lr, vm.mrr);
    if (vm.mrr > best_mrr) {
      best_mrr = vm.mrr;
      result.best_lr = lr;
    }
  }
  return result;
}

}  // namespace pathcast
