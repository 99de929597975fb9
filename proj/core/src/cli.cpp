#include "pathcast/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathcast/common.hpp"
#include "pathcast/eval.hpp"
#include "pathcast/intervals.hpp"
#include "pathcast/manifest.hpp"
#include "pathcast/parallel.hpp"
#include "pathcast/synth.hpp"
#include "pathcast/trainer.hpp"

namespace pathcast::cli {

namespace {

namespace fs = std::filesystem;

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string sanitize_filename(const std::string& id) {
  std::string out;
  out.reserve(id.size());
  for (const char c : id) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  }
  return out.empty() ? "_" : out;
}

struct CommonState {
  std::string manifest_path;
  RunManifest manifest;
  std::int64_t started = 0;

  void begin(const std::string& command) {
    manifest.command = command;
    started = now_ms();
  }
  void finish(const std::string& default_path) {
    manifest.wall_ms = now_ms() - started;
    const std::string path = manifest_path.empty() ? default_path : manifest_path;
    manifest.write(path);
  }
};

KvConfig load_optional_config(const std::string& path) {
  if (path.empty()) return {};
  return KvConfig::from_file(path);
}

ContentFeatures make_features(const Corpus& corpus, std::size_t dim,
                              const std::string& video_feature_path,
                              const std::string& channel_feature_path) {
  ContentFeatures features = default_content_features(corpus, dim);
  if (!video_feature_path.empty()) load_video_features(features, corpus, video_feature_path);
  if (!channel_feature_path.empty()) load_channel_features(features, corpus, channel_feature_path);
  return features;
}

struct SplitFlags {
  double train = 0.70, val = 0.15, test = 0.15;
  void attach(CLI::App* cmd) {
    cmd->add_option("--train-frac", train, "training fraction");
    cmd->add_option("--val-frac", val, "validation fraction");
    cmd->add_option("--test-frac", test, "test fraction");
  }
};

int cmd_synth(const std::string& config_path, const std::string& out_path,
              const std::string& truth_path, std::int64_t seed_override,
              CommonState& common) {
  common.begin("synth");
  KvConfig kv = load_optional_config(config_path);
  if (seed_override >= 0) kv.set("seed", std::to_string(seed_override));
  const SynthConfig cfg = SynthConfig::from_kv(kv);
  common.manifest.config = kv;
  common.manifest.seed = cfg.seed;
  if (!config_path.empty()) common.manifest.add_input(config_path);

  const SynthResult result = generate(cfg);
  const Corpus corpus = corpus_from_events(result.events);
  write_corpus(corpus, out_path);
  write_text_file(truth_path, result.truth.to_json());
  common.manifest.add_output(out_path);
  common.manifest.add_output(truth_path);
  std::cout << "generated " << corpus.size() << " events, " << corpus.videos.size()
            << " videos, " << corpus.communities.size() << " communities\n";
  common.finish(out_path + ".manifest.json");
  return 0;
}

int cmd_ingest(const std::string& in_path, const std::string& format,
               const std::string& out_path, std::size_t min_communities, CommonState& common) {
  common.begin("ingest");
  common.manifest.config.set("format", format);
  common.manifest.config.set("min_communities", std::to_string(min_communities));
  common.manifest.add_input(in_path);
  Corpus corpus = ingest_events(in_path, parse_event_format(format));
  if (min_communities > 1) corpus = filter_min_communities(corpus, min_communities);
  write_corpus(corpus, out_path);
  common.manifest.add_output(out_path);
  std::cout << "events=" << corpus.size() << " videos=" << corpus.videos.size()
            << " communities=" << corpus.communities.size() << " users=" << corpus.users.size()
            << "\n";
  common.finish(out_path + ".manifest.json");
  return 0;
}

int cmd_analyze(const std::string& in_path, const std::string& format, double c, bool train_only,
                const SplitFlags& ratios, const std::string& out_path,
                const std::string& csv_path, CommonState& common) {
  common.begin("analyze-intervals");
  common.manifest.config.set("c", std::to_string(c));
  common.manifest.config.set("train_only", train_only ? "true" : "false");
  common.manifest.add_input(in_path);
  const Corpus corpus = ingest_events(in_path, parse_event_format(format));
  std::size_t end = corpus.size();
  if (train_only) {
    const Split split = chronological_split(corpus, ratios.train, ratios.val, ratios.test);
    end = split.train_end;
  }
  const IntervalReport report = analyze_intervals(corpus, 0, end, c);
  write_text_file(out_path, interval_report_json(report));
  common.manifest.add_output(out_path);
  if (!csv_path.empty()) {
    write_text_file(csv_path, interval_histogram_csv(report));
    common.manifest.add_output(csv_path);
  }
  std::cout << "mu=" << report.diff_fit.mu << " sigma=" << report.diff_fit.sigma
            << " n=" << report.diff_fit.n << " threshold_seconds=" << report.threshold << "\n";
  common.finish(out_path + ".manifest.json");
  return 0;
}

int cmd_build_cig(const std::string& in_path, const std::string& format, const std::string& mode,
                  double c, const std::string& video, const std::string& out_dir,
                  std::uint64_t seed, const SplitFlags& ratios, CommonState& common) {
  common.begin("build-cig");
  common.manifest.config.set("mode", mode);
  common.manifest.config.set("c", std::to_string(c));
  common.manifest.config.set("video", video);
  common.manifest.seed = seed;
  common.manifest.add_input(in_path);
  const CigMode cig_mode = parse_cig_mode(mode);
  const Corpus corpus = ingest_events(in_path, parse_event_format(format));
  const Split split = chronological_split(corpus, ratios.train, ratios.val, ratios.test);
  const IntervalReport intervals = analyze_intervals(corpus, split.train_begin, split.train_end, c);
  const double threshold = intervals.threshold;

  fs::create_directories(out_dir);
  std::vector<std::uint32_t> targets;
  if (video == "all") {
    for (std::uint32_t v = 0; v < corpus.videos.size(); ++v) targets.push_back(v);
  } else {
    const auto idx = corpus.videos.find(video);
    if (!idx) throw DataError("build-cig: unknown video: " + video);
    targets.push_back(*idx);
  }

  // Restrict to training events per video.
  std::vector<PostingSequence> seqs(corpus.videos.size());
  for (std::size_t i = split.train_begin; i < split.train_end; ++i) {
    const auto& e = corpus.indexed[i];
    auto& seq = seqs[e.video];
    if (seq.video_id.empty()) seq.video_id = corpus.videos.name(e.video);
    seq.postings.push_back(corpus.events[i]);
  }

  std::vector<Cig> built(targets.size());
  parallel_for(targets.size(), [&](std::size_t k) {
    const auto v = targets[k];
    if (seqs[v].postings.empty()) {
      Cig empty;
      empty.video_id = corpus.videos.name(v);
      empty.mode = cig_mode;
      empty.merged = true;
      built[k] = empty;
      return;
    }
    built[k] = merge_weights(build_cig(seqs[v], threshold, cig_mode, mix64(seed, v)));
  });

  std::ostringstream summary;
  summary << "video_id,nodes,edges,sessions\n";
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const Cig& cig = built[k];
    const std::string path = out_dir + "/" + sanitize_filename(cig.video_id) + ".json";
    write_text_file(path, export_graph(cig, GraphFormat::kJson));
    common.manifest.add_output(path);
    summary << cig.video_id << "," << cig.node_count() << "," << cig.edge_count() << ","
            << cig.session_count << "\n";
  }
  const std::string summary_path = out_dir + "/summary.csv";
  write_text_file(summary_path, summary.str());
  common.manifest.add_output(summary_path);
  std::cout << "built " << targets.size() << " graphs (threshold " << threshold << " s) into "
            << out_dir << "\n";
  common.finish(out_dir + "/manifest.json");
  return 0;
}

std::vector<CheckpointEntry> memory_buffers(const TemporalState& state) {
  std::vector<CheckpointEntry> buffers;
  CheckpointEntry mem;
  mem.name = "memory.rows";
  mem.shape = {state.n_nodes(), state.dim()};
  mem.data.reserve(state.n_nodes() * state.dim());
  for (std::size_t n = 0; n < state.n_nodes(); ++n) {
    const auto& row = state.memory(static_cast<std::uint32_t>(n));
    mem.data.insert(mem.data.end(), row.begin(), row.end());
  }
  buffers.push_back(std::move(mem));
  CheckpointEntry times;
  times.name = "memory.last_update";
  times.shape = {state.n_nodes()};
  for (std::size_t n = 0; n < state.n_nodes(); ++n)
    times.data.push_back(static_cast<double>(state.last_update(static_cast<std::uint32_t>(n))));
  buffers.push_back(std::move(times));
  return buffers;
}

int cmd_train(const std::string& in_path, const std::string& format,
              const std::string& config_path, const KvConfig& overrides, bool tune,
              const std::string& out_prefix, const std::string& log_path,
              const std::string& video_features, const std::string& channel_features,
              const SplitFlags& ratios, CommonState& common) {
  common.begin("train");
  KvConfig kv = load_optional_config(config_path);
  for (const auto& [k, v] : overrides.entries()) kv.set(k, v);
  TrainConfig cfg = TrainConfig::from_kv(kv);
  common.manifest.seed = cfg.seed;
  common.manifest.add_input(in_path);
  if (!config_path.empty()) common.manifest.add_input(config_path);
  if (!video_features.empty()) common.manifest.add_input(video_features);
  if (!channel_features.empty()) common.manifest.add_input(channel_features);

  const Corpus corpus = ingest_events(in_path, parse_event_format(format));
  const Split split = chronological_split(corpus, ratios.train, ratios.val, ratios.test);
  const ContentFeatures features =
      make_features(corpus, cfg.dim, video_features, channel_features);

  if (tune) {
    const TuneResult tuned = tune_lr(corpus, split, features, cfg);
    cfg.lr = tuned.best_lr;
    std::cout << "tuned lr=" << cfg.lr << " (validation MRR";
    for (const auto& [lr, m] : tuned.grid_mrr) std::cout << " " << lr << ":" << m;
    std::cout << ")\n";
  }
  common.manifest.config = cfg.to_kv();

  const TrainedModel trained = train(corpus, split, features, cfg);

  auto meta = cfg.to_kv().entries();
  std::map<std::string, std::string> meta_map(meta.begin(), meta.end());
  {
    // full precision: eval rebuilds the training CIGs from this value
    std::ostringstream thr;
    thr.precision(17);
    thr << trained.threshold_seconds;
    meta_map["threshold_seconds"] = thr.str();
  }
  meta_map["train_frac"] = std::to_string(ratios.train);
  meta_map["val_frac"] = std::to_string(ratios.val);
  meta_map["test_frac"] = std::to_string(ratios.test);
  save_checkpoint(out_prefix, trained.model.store, memory_buffers(trained.state), meta_map);
  common.manifest.add_output(out_prefix + ".json");
  common.manifest.add_output(out_prefix + ".bin");

  const std::string log_file = log_path.empty() ? out_prefix + ".log.csv" : log_path;
  write_text_file(log_file, epoch_log_csv(trained.logs));
  common.manifest.add_output(log_file);

  if (!trained.logs.empty()) {
    const auto& last = trained.logs.back();
    std::cout << "epoch " << last.epoch << ": train_loss=" << last.train_loss
              << " val_ndcg5=" << last.val_ndcg5 << "\n";
  }
  common.finish(out_prefix + ".manifest.json");
  return 0;
}

int cmd_eval(const std::string& in_path, const std::string& format,
             const std::string& checkpoint_prefix, const std::string& out_path,
             const std::string& csv_path, std::size_t n_seeds, const std::string& ks,
             std::int64_t seed_override, const std::string& video_features,
             const std::string& channel_features, CommonState& common) {
  common.begin("eval");
  common.manifest.add_input(in_path);
  common.manifest.add_input(checkpoint_prefix + ".json");
  common.manifest.add_input(checkpoint_prefix + ".bin");

  const Checkpoint ckpt = load_checkpoint(checkpoint_prefix);
  KvConfig meta;
  for (const auto& [k, v] : ckpt.meta) meta.set(k, v);
  const TrainConfig cfg = TrainConfig::from_kv(meta);
  const double train_frac = meta.get_double("train_frac", 0.70);
  const double val_frac = meta.get_double("val_frac", 0.15);
  const double test_frac = meta.get_double("test_frac", 0.15);

  const Corpus corpus = ingest_events(in_path, parse_event_format(format));
  const Split data_split = chronological_split(corpus, train_frac, val_frac, test_frac);
  const ContentFeatures features =
      make_features(corpus, cfg.dim, video_features, channel_features);

  Model model = Model::create(cfg.model_config(), corpus.videos.size(),
                              corpus.communities.size(), corpus.channels.size(), cfg.seed);
  restore_params(model.store, ckpt.entries);
  const double threshold = meta.get_double("threshold_seconds", 3600.0);
  const CigCache cigs = build_cig_cache(corpus, data_split.train_begin, data_split.train_end,
                                        threshold, cfg.cig_mode, cfg.seed);

  EvalConfig ecfg;
  ecfg.n_seeds = n_seeds;
  ecfg.base_seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : cfg.seed;
  ecfg.n_negatives = cfg.eval_negatives;
  const auto parts = split(ks, ',');
  if (parts.size() != 2) throw UsageError("--k expects two comma-separated cutoffs");
  ecfg.ks = {std::stoi(parts[0]), std::stoi(parts[1])};

  common.manifest.seed = ecfg.base_seed;
  common.manifest.config = meta;

  const EvalReport report = evaluate(model, features, cigs, corpus, data_split, ecfg);
  write_text_file(out_path, eval_report_json(report));
  common.manifest.add_output(out_path);
  if (!csv_path.empty()) {
    write_text_file(csv_path, eval_report_csv(report));
    common.manifest.add_output(csv_path);
  }
  const auto& overall = report.slices.at("overall");
  std::cout << "overall ndcg@" << ecfg.ks[0] << "="
            << overall.metrics.at("ndcg@" + std::to_string(ecfg.ks[0])).mean
            << " mrr=" << overall.metrics.at("mrr").mean << " (" << report.n_seeds
            << " seeds)\n";
  common.finish(out_path + ".manifest.json");
  return 0;
}

int cmd_export(const std::string& in_path, const std::string& format,
               const std::string& out_path, CommonState& common) {
  common.begin("export-graph");
  common.manifest.add_input(in_path);
  const Cig cig = import_graph_json(read_text_file(in_path));
  const GraphFormat gf = format == "dot"    ? GraphFormat::kDot
                         : format == "json" ? GraphFormat::kJson
                                            : throw UsageError("unknown format: " + format);
  const std::string text = export_graph(cig, gf);
  if (out_path.empty()) {
    std::cout << text;
    // stdout has no natural manifest location; honor an explicit request
    if (!common.manifest_path.empty()) common.finish(common.manifest_path);
  } else {
    write_text_file(out_path, text);
    common.manifest.add_output(out_path);
    common.finish(out_path + ".manifest.json");
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"community pathway prediction pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted structure");
  std::string synth_config, synth_out = "corpus.jsonl", synth_truth = "truth.json";
  std::int64_t synth_seed = -1;
  synth->add_option("--config", synth_config, "key=value synth config");
  synth->add_option("--out", synth_out, "output corpus jsonl");
  synth->add_option("--truth", synth_truth, "output planted truth json");
  synth->add_option("--seed", synth_seed, "seed override");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "load, validate and canonicalize an event log");
  std::string ingest_in, ingest_format = "jsonl", ingest_out = "corpus.jsonl";
  std::size_t ingest_min_comms = 0;
  ingest->add_option("--in", ingest_in, "input event log")->required();
  ingest->add_option("--format", ingest_format, "jsonl or csv");
  ingest->add_option("--out", ingest_out, "canonical corpus output");
  ingest->add_option("--min-communities", ingest_min_comms,
                     "drop videos shared in fewer communities");

  // analyze-intervals
  auto* analyze = app.add_subcommand("analyze-intervals", "inter-share interval distributions");
  std::string an_in, an_format = "jsonl", an_out = "intervals.json", an_csv;
  double an_c = 3.0;
  bool an_train_only = false;
  SplitFlags an_ratios;
  analyze->add_option("--in", an_in, "corpus jsonl/csv")->required();
  analyze->add_option("--format", an_format, "jsonl or csv");
  analyze->add_option("--c", an_c, "confidence multiplier");
  analyze->add_flag("--train-only", an_train_only, "fit on the training slice only");
  analyze->add_option("--out", an_out, "report json");
  analyze->add_option("--csv", an_csv, "optional per-bin csv");
  an_ratios.attach(analyze);

  // build-cig
  auto* build = app.add_subcommand("build-cig", "construct community influence graphs");
  std::string bc_in, bc_format = "jsonl", bc_mode = "influence", bc_video = "all",
              bc_out_dir = "cigs";
  double bc_c = 3.0;
  std::uint64_t bc_seed = 1;
  SplitFlags bc_ratios;
  build->add_option("--in", bc_in, "corpus jsonl/csv")->required();
  build->add_option("--format", bc_format, "jsonl or csv");
  build->add_option("--mode", bc_mode, "influence|seq|fc|er");
  build->add_option("--c", bc_c, "confidence multiplier");
  build->add_option("--video", bc_video, "video id or 'all'");
  build->add_option("--out-dir", bc_out_dir, "output directory");
  build->add_option("--seed", bc_seed, "er-mode seed");
  bc_ratios.attach(build);

  // train
  auto* train_cmd = app.add_subcommand("train", "train the prediction model");
  std::string tr_in, tr_format = "jsonl", tr_config, tr_out = "ckpt", tr_log, tr_vf, tr_cf;
  bool tr_tune = false;
  SplitFlags tr_ratios;
  KvConfig tr_overrides;
  std::map<std::string, std::string> tr_flag_values;
  train_cmd->add_option("--in", tr_in, "corpus jsonl/csv")->required();
  train_cmd->add_option("--format", tr_format, "jsonl or csv");
  train_cmd->add_option("--config", tr_config, "key=value train config");
  train_cmd->add_option("--out", tr_out, "checkpoint prefix");
  train_cmd->add_option("--log", tr_log, "per-epoch csv log path");
  train_cmd->add_flag("--tune", tr_tune, "search the lr grid by validation MRR");
  train_cmd->add_option("--video-features", tr_vf, "video feature jsonl");
  train_cmd->add_option("--channel-features", tr_cf, "channel feature jsonl");
  tr_ratios.attach(train_cmd);
  for (const char* key : {"lr", "epochs", "dim", "seed", "batch_size", "lambda1", "lambda2",
                          "alpha", "c", "neighbor_budget", "max_seq", "grad_chunk",
                          "eval_negatives", "appnp_layers"}) {
    train_cmd->add_option_function<std::string>(
        "--" + std::string(key),
        [&tr_flag_values, key](const std::string& v) { tr_flag_values[key] = v; },
        "override config key " + std::string(key));
  }
  std::string tr_cig_mode, tr_agg;
  train_cmd->add_option("--cig-mode", tr_cig_mode, "influence|seq|fc|er");
  train_cmd->add_option("--agg", tr_agg, "concat|add|mul");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test slice");
  std::string ev_in, ev_format = "jsonl", ev_ckpt, ev_out = "eval.json", ev_csv, ev_ks = "5,10",
              ev_vf, ev_cf;
  std::size_t ev_seeds = 5;
  std::int64_t ev_seed = -1;
  eval_cmd->add_option("--in", ev_in, "corpus jsonl/csv")->required();
  eval_cmd->add_option("--format", ev_format, "jsonl or csv");
  eval_cmd->add_option("--checkpoint", ev_ckpt, "checkpoint prefix")->required();
  eval_cmd->add_option("--out", ev_out, "report json");
  eval_cmd->add_option("--csv", ev_csv, "flat csv report");
  eval_cmd->add_option("--seeds", ev_seeds, "number of negative-sampling seeds");
  eval_cmd->add_option("--k", ev_ks, "two cutoffs, e.g. 5,10");
  eval_cmd->add_option("--seed", ev_seed, "base seed override");
  eval_cmd->add_option("--video-features", ev_vf, "video feature jsonl");
  eval_cmd->add_option("--channel-features", ev_cf, "channel feature jsonl");

  // export-graph
  auto* export_cmd = app.add_subcommand("export-graph", "re-export a stored graph");
  std::string ex_in, ex_format = "dot", ex_out;
  export_cmd->add_option("--in", ex_in, "graph json produced by build-cig")->required();
  export_cmd->add_option("--format", ex_format, "dot or json");
  export_cmd->add_option("--out", ex_out, "output path (stdout when omitted)");

  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "manifest output path override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CommonState common;
  common.manifest_path = manifest_path;
  try {
    if (synth->parsed())
      return cmd_synth(synth_config, synth_out, synth_truth, synth_seed, common);
    if (ingest->parsed())
      return cmd_ingest(ingest_in, ingest_format, ingest_out, ingest_min_comms, common);
    if (analyze->parsed())
      return cmd_analyze(an_in, an_format, an_c, an_train_only, an_ratios, an_out, an_csv,
                         common);
    if (build->parsed())
      return cmd_build_cig(bc_in, bc_format, bc_mode, bc_c, bc_video, bc_out_dir, bc_seed,
                           bc_ratios, common);
    if (train_cmd->parsed()) {
      for (const auto& [k, v] : tr_flag_values) tr_overrides.set(k, v);
      if (!tr_cig_mode.empty()) tr_overrides.set("cig_mode", tr_cig_mode);
      if (!tr_agg.empty()) tr_overrides.set("agg", tr_agg);
      return cmd_train(tr_in, tr_format, tr_config, tr_overrides, tr_tune, tr_out, tr_log,
                       tr_vf, tr_cf, tr_ratios, common);
    }
    if (eval_cmd->parsed())
      return cmd_eval(ev_in, ev_format, ev_ckpt, ev_out, ev_csv, ev_seeds, ev_ks, ev_seed,
                      ev_vf, ev_cf, common);
    if (export_cmd->parsed()) return cmd_export(ex_in, ex_format, ex_out, common);
    std::cerr << app.help() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace pathcast::cli
