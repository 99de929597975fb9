#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pathcast/events.hpp"
#include "pathcast/tensor.hpp"

namespace pathcast {

enum class AggScheme { kConcat, kAdd, kMul };

AggScheme parse_agg_scheme(const std::string& name);
std::string agg_scheme_name(AggScheme scheme);

// concat yields length 2D (a learned projection brings it back to D
// downstream); add and mul stay at D.
Tensor aggregate_content(const Tensor& video_vec, const Tensor& channel_vec, AggScheme scheme);

// Static per-video content vectors. Video vectors are fixed inputs; channel
// vectors are fixed only when loaded from a file, otherwise the model's
// learnable channel table is used.
struct ContentFeatures {
  std::size_t dim = 0;
  std::vector<std::vector<double>> video_vecs;                    // [V][dim]
  std::optional<std::vector<std::vector<double>>> channel_vecs;   // [C][dim]
  std::vector<std::uint32_t> channel_of;                          // video -> channel
};

// Deterministic pseudo-random unit vectors seeded by a hash of each
// video id; stands in when no precomputed features are supplied.
ContentFeatures default_content_features(const Corpus& corpus, std::size_t dim);

// JSON-lines {"id": ..., "vector": [...]} per line; validates dimension and
// requires a vector for every video (respectively channel) in the corpus.
void load_video_features(ContentFeatures& features, const Corpus& corpus,
                         const std::string& path);
void load_channel_features(ContentFeatures& features, const Corpus& corpus,
                           const std::string& path);

}  // namespace pathcast
