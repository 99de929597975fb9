#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pathcast/common.hpp"
#include "pathcast/intervals.hpp"
#include "pathcast/rng.hpp"

using namespace pathcast;

namespace {

PostingSequence seq_of(std::vector<std::pair<std::string, std::int64_t>> shares) {
  PostingSequence seq;
  seq.video_id = "v";
  for (auto& [user, t] : shares) {
    PostingInstance p;
    p.video_id = "v";
    p.community_id = "s" + std::to_string(t % 7);
    p.user_id = user;
    p.timestamp = t;
    seq.postings.push_back(p);
  }
  std::stable_sort(seq.postings.begin(), seq.postings.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return seq;
}

}  // namespace

TEST_CASE("same-user intervals pool per-user consecutive gaps") {
  const auto s = same_user_intervals(seq_of({{"u1", 0}, {"u2", 100}, {"u1", 150}, {"u3", 400}}));
  REQUIRE(s.values.size() == 1);
  CHECK(s.values[0] == doctest::Approx(150.0));
}

TEST_CASE("single share per user yields no same-user intervals") {
  CHECK(same_user_intervals(seq_of({{"u1", 0}, {"u2", 10}})).values.empty());
}

TEST_CASE("zero same-user gap is kept and clamps on the log transform") {
  PostingSequence seq;
  for (const char* comm : {"sA", "sB"}) {
    PostingInstance p;
    p.video_id = "v";
    p.community_id = comm;
    p.user_id = "u1";
    p.timestamp = 0;
    seq.postings.push_back(p);
  }
  const auto s = same_user_intervals(seq);
  REQUIRE(s.values.size() == 1);
  CHECK(s.values[0] == 0.0);
  IntervalSample pooled;
  pooled.values = {0.0, 0.0};
  const auto fit = fit_log_gaussian(pooled);
  CHECK(fit.mu == doctest::Approx(0.0));  // log10(max(0,1)) = 0
  CHECK(fit.sigma == doctest::Approx(0.0));
}

TEST_CASE("diff-user intervals use each user's first share") {
  const auto d = diff_user_intervals(seq_of({{"u1", 0}, {"u2", 100}, {"u1", 150}, {"u3", 400}}));
  REQUIRE(d.values.size() == 2);
  CHECK(d.values[0] == doctest::Approx(100.0));
  CHECK(d.values[1] == doctest::Approx(300.0));
}

TEST_CASE("one user yields no diff intervals; equal first shares give zero") {
  CHECK(diff_user_intervals(seq_of({{"u1", 0}, {"u1", 50}})).values.empty());
  const auto d = diff_user_intervals(seq_of({{"u1", 10}, {"u2", 10}}));
  REQUIRE(d.values.size() == 1);
  CHECK(d.values[0] == 0.0);
}

TEST_CASE("log-gaussian fit matches hand arithmetic") {
  IntervalSample s;
  s.values = {100.0, 10000.0, 1000000.0};  // log10 = 2, 4, 6
  const auto fit = fit_log_gaussian(s);
  CHECK(fit.mu == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(fit.sigma == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
  CHECK(fit.n == 3);
}

TEST_CASE("all-equal samples fit sigma zero") {
  IntervalSample s;
  s.values = {500.0, 500.0, 500.0, 500.0};
  CHECK(fit_log_gaussian(s).sigma == doctest::Approx(0.0));
}

TEST_CASE("fit requires at least two samples") {
  IntervalSample s;
  s.values = {10.0};
  CHECK_THROWS_AS(fit_log_gaussian(s), DataError);
}

TEST_CASE("threshold arithmetic") {
  GaussianFit fit;
  fit.mu = 4.0;
  fit.sigma = 1.0;
  CHECK(threshold_seconds(fit, 0.0) == doctest::Approx(10000.0));
  fit.mu = 6.844;
  fit.sigma = 0.823;
  CHECK(threshold_seconds(fit, 3.0) == doctest::Approx(23713.7).epsilon(0.01));
  fit.mu = 1.0;
  fit.sigma = 1.0;
  CHECK(threshold_seconds(fit, 3.0) == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("threshold is monotone decreasing in c") {
  GaussianFit fit;
  fit.mu = 3.0;
  fit.sigma = 0.7;
  double prev = threshold_seconds(fit, 0.0);
  for (double c = 0.5; c <= 4.0; c += 0.5) {
    const double cur = threshold_seconds(fit, c);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("fit is invariant to sample order") {
  Rng rng(17);
  IntervalSample s;
  for (int i = 0; i < 200; ++i) s.values.push_back(rng.log10_normal(3.0, 1.0));
  const auto a = fit_log_gaussian(s);
  std::reverse(s.values.begin(), s.values.end());
  std::swap(s.values[4], s.values[100]);
  const auto b = fit_log_gaussian(s);
  CHECK(a.mu == doctest::Approx(b.mu).epsilon(1e-12));
  CHECK(a.sigma == doctest::Approx(b.sigma).epsilon(1e-12));
}

TEST_CASE("interval counting identities") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::string, std::int64_t>> shares;
    const std::size_t users = 2 + rng.uniform_int(6);
    std::size_t total = 0;
    for (std::size_t u = 0; u < users; ++u) {
      const std::size_t k = 1 + rng.uniform_int(4);  // every user shares at least once
      for (std::size_t i = 0; i < k; ++i)
        shares.emplace_back("u" + std::to_string(u), rng.uniform_int(100000));
      total += k;
    }
    const auto seq = seq_of(shares);
    CHECK(same_user_intervals(seq).values.size() + users == total);
    CHECK(diff_user_intervals(seq).values.size() == users - 1);
  }
}

TEST_CASE("corpus-level report pools every video and renders json and csv") {
  std::vector<PostingInstance> raw;
  Rng rng(9);
  for (int v = 0; v < 6; ++v) {
    std::int64_t t = rng.uniform_int(1000);
    for (int i = 0; i < 5; ++i) {
      PostingInstance p;
      p.video_id = "v" + std::to_string(v);
      p.community_id = "s" + std::to_string(i);
      p.user_id = "u" + std::to_string(v * 10 + i);
      p.timestamp = t;
      t += static_cast<std::int64_t>(rng.log10_normal(3.0, 0.4));
      raw.push_back(p);
    }
  }
  const Corpus corpus = corpus_from_events(raw);
  const auto report = analyze_intervals(corpus, 0, corpus.size(), 3.0);
  CHECK(report.diff_fit.n == 6 * 4);
  CHECK(report.threshold > 0.0);
  const auto json_text = interval_report_json(report);
  CHECK(json_text.find("\"threshold_seconds\"") != std::string::npos);
  const auto csv_text = interval_histogram_csv(report);
  CHECK(csv_text.rfind("distribution,log10_lo,log10_hi,count", 0) == 0);
}
