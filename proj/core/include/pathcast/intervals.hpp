#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathcast/events.hpp"

namespace pathcast {

enum class IntervalScale { kLinear, kLog10 };

struct IntervalSample {
  std::vector<double> values;  // seconds in linear scale
  IntervalScale scale = IntervalScale::kLinear;
};

struct GaussianFit {
  double mu = 0.0;     // mean of log10 seconds
  double sigma = 0.0;  // population standard deviation of log10 seconds
  std::size_t n = 0;
};

// Gaps between consecutive shares of the video by the same user, pooled
// over users.
IntervalSample same_user_intervals(const PostingSequence& seq);

// Gaps between consecutive first shares by distinct users.
IntervalSample diff_user_intervals(const PostingSequence& seq);

// Moments of log10(max(dt, 1)); zero gaps clamp to one second.
GaussianFit fit_log_gaussian(const IntervalSample& pooled);

// 10^(mu - c * sigma): the session cutoff in linear seconds.
double threshold_seconds(const GaussianFit& fit, double c);

struct HistogramBin {
  double lo = 0.0;  // log10 seconds
  double hi = 0.0;
  std::size_t count = 0;
};

std::vector<HistogramBin> log10_histogram(const IntervalSample& sample, double bin_width = 0.25);

struct IntervalReport {
  GaussianFit diff_fit;
  double threshold = 0.0;
  std::vector<HistogramBin> diff_histogram;
  std::vector<HistogramBin> same_histogram;
  std::size_t same_n = 0;
};

// Pools intervals over every video in the corpus range [begin, end).
IntervalReport analyze_intervals(const Corpus& corpus, std::size_t begin, std::size_t end,
                                 double c);

std::string interval_report_json(const IntervalReport& report);
std::string interval_histogram_csv(const IntervalReport& report);

}  // namespace pathcast
