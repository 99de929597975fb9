#include <benchmark/benchmark.h>

#include "pathcast/dynamic_model.hpp"
#include "pathcast/synth.hpp"
#include "pathcast/trainer.hpp"

using namespace pathcast;

namespace {

PostingSequence walk_sequence(std::size_t n_postings, std::uint64_t seed) {
  Rng rng(seed);
  PostingSequence seq;
  seq.video_id = "v";
  std::int64_t t = 0;
  for (std::size_t i = 0; i < n_postings; ++i) {
    PostingInstance p;
    p.video_id = "v";
    p.community_id = "c" + std::to_string(rng.uniform_int(24));
    p.user_id = "u" + std::to_string(i);
    t += rng.bernoulli(0.4) ? static_cast<std::int64_t>(rng.uniform_int(40))
                            : 500 + static_cast<std::int64_t>(rng.uniform_int(5000));
    p.timestamp = t;
    seq.postings.push_back(p);
  }
  return seq;
}

void BM_BuildInfluenceCig(benchmark::State& state) {
  const auto seq = walk_sequence(static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_cig(seq, 100.0, CigMode::kInfluence));
  }
}
BENCHMARK(BM_BuildInfluenceCig)->Arg(200)->Arg(1000);

void BM_MergeWeights(benchmark::State& state) {
  const Cig multi = build_cig(walk_sequence(1000, 7), 100.0, CigMode::kInfluence);
  for (auto _ : state) {
    benchmark::DoNotOptimize(merge_weights(multi));
  }
}
BENCHMARK(BM_MergeWeights);

void BM_AppnpPropagate(benchmark::State& state) {
  const std::size_t d = 64;
  IdIndex communities;
  const Cig merged = merge_weights(build_cig(walk_sequence(200, 7), 100.0, CigMode::kInfluence));
  for (const auto& node : merged.nodes) communities.intern(node);
  const CigDense dense = densify_cig(merged, communities);
  Rng rng(3);
  std::vector<double> table(communities.size() * d);
  for (auto& v : table) v = rng.uniform(-1, 1);
  const Tensor t = Tensor::from(table, {communities.size(), d});
  for (auto _ : state) {
    NoGradGuard ng;
    benchmark::DoNotOptimize(appnp_propagate(dense, t, 0.1, 4));
  }
}
BENCHMARK(BM_AppnpPropagate);

struct EmbedBench {
  Corpus corpus;
  Model model;
  ContentFeatures features;
  CigCache cigs;
  TemporalState state;

  EmbedBench() {
    SynthConfig cfg;
    cfg.n_communities = 12;
    cfg.n_videos = 40;
    cfg.n_users = 200;
    cfg.seed = 5;
    corpus = corpus_from_events(generate(cfg).events);
    ModelConfig mc;
    mc.dim = 64;
    mc.neighbor_budget = 10;
    model = Model::create(mc, corpus.videos.size(), corpus.communities.size(),
                          corpus.channels.size(), 1);
    features = default_content_features(corpus, 64);
    cigs.per_video.assign(corpus.videos.size(), std::nullopt);
    state = TemporalState(model.n_nodes(), 64);
    std::vector<EdgeEvent> events;
    for (const auto& e : corpus.indexed)
      events.push_back(
          {model.video_node(e.video), model.community_node(e.community), e.timestamp});
    state.enqueue_batch(events);
    FeatureMap fm(model, features, cigs);
    commit_pending_update(state, compute_pending_update(model, state, fm));
  }
};

void BM_TemporalEmbed(benchmark::State& state_) {
  static EmbedBench bench;
  const double t = static_cast<double>(bench.corpus.events.back().timestamp) + 100.0;
  for (auto _ : state_) {
    NoGradGuard ng;
    FeatureMap fm(bench.model, bench.features, bench.cigs);
    Embedder emb(bench.model, bench.state, fm, nullptr, t, 0);
    benchmark::DoNotOptimize(emb.embed(bench.model.video_node(0)));
  }
}
BENCHMARK(BM_TemporalEmbed);

void BM_BackwardThroughScore(benchmark::State& state_) {
  static EmbedBench bench;
  const double t = static_cast<double>(bench.corpus.events.back().timestamp) + 100.0;
  for (auto _ : state_) {
    FeatureMap fm(bench.model, bench.features, bench.cigs);
    Embedder emb(bench.model, bench.state, fm, nullptr, t, 0);
    const Tensor v = emb.embed(bench.model.video_node(0));
    const Tensor s = emb.embed(bench.model.community_node(1));
    backward(score(bench.model, v, s));
    bench.model.store.zero_grad();
  }
}
BENCHMARK(BM_BackwardThroughScore);

void BM_AdamStep(benchmark::State& state) {
  ParamStore store;
  Rng rng(9);
  store.xavier("a", 64, 64, rng);
  store.xavier("b", 64, 64, rng);
  for (auto _ : state) {
    store.zero_grad();
    backward(store.l2_penalty());
    store.adam_step(1e-3);
  }
}
BENCHMARK(BM_AdamStep);

}  // namespace

BENCHMARK_MAIN();
