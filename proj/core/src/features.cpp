#include "pathcast/features.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pathcast/common.hpp"
#include "pathcast/rng.hpp"

namespace pathcast {

AggScheme parse_agg_scheme(const std::string& name) {
  if (name == "concat") return AggScheme::kConcat;
  if (name == "add") return AggScheme::kAdd;
  if (name == "mul") return AggScheme::kMul;
  throw UsageError("unknown aggregation scheme: " + name);
}

std::string agg_scheme_name(AggScheme scheme) {
  switch (scheme) {
    case AggScheme::kConcat: return "concat";
    case AggScheme::kAdd: return "add";
    case AggScheme::kMul: return "mul";
  }
  throw UsageError("unknown aggregation scheme");
}

Tensor aggregate_content(const Tensor& video_vec, const Tensor& channel_vec, AggScheme scheme) {
  if (video_vec.shape() != channel_vec.shape())
    throw NumericError("aggregate_content: dimension mismatch");
  switch (scheme) {
    case AggScheme::kConcat: return concat({video_vec, channel_vec});
    case AggScheme::kAdd: return add(video_vec, channel_vec);
    case AggScheme::kMul: return elementwise_mul(video_vec, channel_vec);
  }
  throw NumericError("aggregate_content: unknown scheme");
}

ContentFeatures default_content_features(const Corpus& corpus, std::size_t dim) {
  ContentFeatures f;
  f.dim = dim;
  f.channel_of = corpus.channel_of;
  f.video_vecs.reserve(corpus.videos.size());
  for (const auto& id : corpus.videos.names()) {
    Rng rng(fnv1a64(id));
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm > 0)
      for (auto& x : v) x /= norm;
    f.video_vecs.push_back(std::move(v));
  }
  return f;
}

namespace {

std::vector<std::vector<double>> load_feature_file(const IdIndex& index, std::size_t dim,
                                                   const std::string& path,
                                                   const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);
  std::vector<std::vector<double>> vecs(index.size());
  std::vector<bool> seen(index.size(), false);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    const auto id = j.at("id").get<std::string>();
    const auto vec = j.at("vector").get<std::vector<double>>();
    if (vec.size() != dim)
      throw DataError(path + " line " + std::to_string(lineno) + ": expected dimension " +
                      std::to_string(dim) + ", got " + std::to_string(vec.size()));
    const auto idx = index.find(id);
    if (!idx) continue;  // features for ids outside the corpus are ignored
    vecs[*idx] = vec;
    seen[*idx] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw DataError(std::string(what) + " '" + index.name(i) +
                                  "' has no vector in " + path);
  }
  return vecs;
}

}  // namespace

void load_video_features(ContentFeatures& features, const Corpus& corpus,
                         const std::string& path) {
  features.video_vecs = load_feature_file(corpus.videos, features.dim, path, "video");
}

void load_channel_features(ContentFeatures& features, const Corpus& corpus,
                           const std::string& path) {
  features.channel_vecs = load_feature_file(corpus.channels, features.dim, path, "channel");
}

}  // namespace pathcast
