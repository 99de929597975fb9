#include "pathcast/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

double clamped_log10(double dt) { return std::log10(std::max(dt, 1.0)); }

}  // namespace

IntervalSample same_user_intervals(const PostingSequence& seq) {
  std::map<std::string, std::int64_t> last_by_user;
  IntervalSample out;
  for (const auto& p : seq.postings) {
    auto it = last_by_user.find(p.user_id);
    if (it != last_by_user.end()) {
      out.values.push_back(static_cast<double>(p.timestamp - it->second));
      it->second = p.timestamp;
    } else {
      last_by_user.emplace(p.user_id, p.timestamp);
    }
  }
  return out;
}

IntervalSample diff_user_intervals(const PostingSequence& seq) {
  std::map<std::string, std::int64_t> first_by_user;
  for (const auto& p : seq.postings) {
    first_by_user.emplace(p.user_id, p.timestamp);  // emplace keeps the first share
  }
  std::vector<std::int64_t> firsts;
  firsts.reserve(first_by_user.size());
  for (const auto& [_, t] : first_by_user) firsts.push_back(t);
  std::sort(firsts.begin(), firsts.end());
  IntervalSample out;
  for (std::size_t i = 1; i < firsts.size(); ++i) {
    out.values.push_back(static_cast<double>(firsts[i] - firsts[i - 1]));
  }
  return out;
}

GaussianFit fit_log_gaussian(const IntervalSample& pooled) {
  if (pooled.values.size() < 2) throw DataError("fit_log_gaussian: need at least 2 samples");
  double sum = 0.0;
  for (const double v : pooled.values) sum += clamped_log10(v);
  const double n = static_cast<double>(pooled.values.size());
  const double mu = sum / n;
  double sq = 0.0;
  for (const double v : pooled.values) {
    const double d = clamped_log10(v) - mu;
    sq += d * d;
  }
  GaussianFit fit;
  fit.mu = mu;
  fit.sigma = std::sqrt(sq / n);
  fit.n = pooled.values.size();
  return fit;
}

double threshold_seconds(const GaussianFit& fit, double c) {
  if (c < 0) throw DataError("threshold_seconds: c must be non-negative");
  return std::pow(10.0, fit.mu - c * fit.sigma);
}

std::vector<HistogramBin> log10_histogram(const IntervalSample& sample, double bin_width) {
  std::vector<HistogramBin> bins;
  if (sample.values.empty()) return bins;
  std::map<long, std::size_t> counts;
  for (const double v : sample.values) {
    const long b = static_cast<long>(std::floor(clamped_log10(v) / bin_width));
    ++counts[b];
  }
  for (const auto& [b, count] : counts) {
    HistogramBin bin;
    bin.lo = static_cast<double>(b) * bin_width;
    bin.hi = bin.lo + bin_width;
    bin.count = count;
    bins.push_back(bin);
  }
  return bins;
}

IntervalReport analyze_intervals(const Corpus& corpus, std::size_t begin, std::size_t end,
                                 double c) {
  // Restrict each video's sequence to events inside [begin, end), then pool.
  std::vector<PostingSequence> seqs(corpus.videos.size());
  for (std::size_t i = begin; i < end && i < corpus.events.size(); ++i) {
    const auto& e = corpus.indexed[i];
    auto& seq = seqs[e.video];
    if (seq.video_id.empty()) seq.video_id = corpus.videos.name(e.video);
    seq.postings.push_back(corpus.events[i]);
  }
  IntervalSample same, diff;
  for (const auto& seq : seqs) {
    if (seq.postings.empty()) continue;
    auto s = same_user_intervals(seq);
    auto d = diff_user_intervals(seq);
    same.values.insert(same.values.end(), s.values.begin(), s.values.end());
    diff.values.insert(diff.values.end(), d.values.begin(), d.values.end());
  }
  IntervalReport report;
  report.diff_fit = fit_log_gaussian(diff);
  report.threshold = threshold_seconds(report.diff_fit, c);
  report.diff_histogram = log10_histogram(diff);
  report.same_histogram = log10_histogram(same);
  report.same_n = same.values.size();
  return report;
}

std::string interval_report_json(const IntervalReport& report) {
  nlohmann::ordered_json j;
  j["mu"] = report.diff_fit.mu;
  j["sigma"] = report.diff_fit.sigma;
  j["n"] = report.diff_fit.n;
  j["threshold_seconds"] = report.threshold;
  auto hist = [](const std::vector<HistogramBin>& bins) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& b : bins) {
      nlohmann::ordered_json jb;
      jb["lo"] = b.lo;
      jb["hi"] = b.hi;
      jb["count"] = b.count;
      arr.push_back(jb);
    }
    return arr;
  };
  j["histogram"] = hist(report.diff_histogram);
  j["same_n"] = report.same_n;
  j["same_histogram"] = hist(report.same_histogram);
  return j.dump(2) + "\n";
}

std::string interval_histogram_csv(const IntervalReport& report) {
  std::ostringstream out;
  out << "distribution,log10_lo,log10_hi,count\n";
  for (const auto& b : report.diff_histogram)
    out << "diff," << b.lo << "," << b.hi << "," << b.count << "\n";
  for (const auto& b : report.same_histogram)
    out << "same," << b.lo << "," << b.hi << "," << b.count << "\n";
  return out.str();
}

}  // namespace pathcast
