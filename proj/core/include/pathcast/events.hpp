#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace pathcast {

// One share event: a video posted by a user in a community at a time.
struct PostingInstance {
  std::string video_id;
  std::string community_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds since epoch
  std::string title;           // optional, empty when absent
  std::string channel_id;      // optional, empty when absent
};

enum class EventFormat { kJsonl, kCsv };

// Bijection between string ids and dense 0..n-1 indices, assigned in
// first-appearance order over the chronologically sorted event stream.
class IdIndex {
 public:
  std::uint32_t intern(const std::string& id);
  std::optional<std::uint32_t> find(const std::string& id) const;
  const std::string& name(std::uint32_t idx) const { return names_.at(idx); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, std::uint32_t> lookup_;
  std::vector<std::string> names_;
};

struct IndexedEvent {
  std::uint32_t video = 0;
  std::uint32_t community = 0;
  std::uint32_t user = 0;
  std::int64_t timestamp = 0;
};

// Immutable after assembly; events are globally sorted by
// (timestamp, input order) and deduplicated on the full 4-tuple.
struct Corpus {
  std::vector<PostingInstance> events;   // sorted
  std::vector<IndexedEvent> indexed;     // parallel to events
  IdIndex videos;
  IdIndex communities;
  IdIndex users;
  IdIndex channels;                              // from optional channel_id
  std::vector<std::uint32_t> channel_of;         // per video, dense channel idx
  std::vector<std::vector<std::uint32_t>> sequences;  // per video, event indices by time

  std::size_t size() const { return events.size(); }
};

struct Split {
  // Half-open index ranges into the sorted event list.
  std::size_t train_begin = 0, train_end = 0;
  std::size_t val_begin = 0, val_end = 0;
  std::size_t test_begin = 0, test_end = 0;
  std::int64_t boundary_times[2] = {0, 0};

  std::size_t train_size() const { return train_end - train_begin; }
  std::size_t val_size() const { return val_end - val_begin; }
  std::size_t test_size() const { return test_end - test_begin; }
};

struct PostingSequence {
  std::string video_id;
  std::vector<PostingInstance> postings;  // chronologically sorted
};

Corpus ingest_events(const std::string& path, EventFormat format);
Corpus corpus_from_events(std::vector<PostingInstance> raw);

// Drops videos shared in fewer than min_communities distinct communities.
Corpus filter_min_communities(const Corpus& corpus, std::size_t min_communities);

Split chronological_split(const Corpus& corpus, double train_frac = 0.70,
                          double val_frac = 0.15, double test_frac = 0.15);

PostingSequence posting_sequence(const Corpus& corpus, const std::string& video_id,
                                 std::optional<std::int64_t> until = std::nullopt);

// Canonical JSON-lines serialization; re-ingesting reproduces the corpus
// (same order, same dense indices).
std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::string& path);

EventFormat parse_event_format(const std::string& name);

}  // namespace pathcast
