#include "pathcast/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void validate_instance(const PostingInstance& p, std::size_t lineno) {
  const std::string where = "line " + std::to_string(lineno) + ": ";
  if (p.video_id.empty()) throw DataError(where + "empty video_id");
  if (p.community_id.empty()) throw DataError(where + "empty community_id");
  if (p.user_id.empty()) throw DataError(where + "empty user_id");
  if (p.timestamp < 0) throw DataError(where + "negative timestamp");
}

PostingInstance parse_jsonl_record(const std::string& line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError("line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
  }
  PostingInstance p;
  try {
    p.video_id = j.at("video_id").get<std::string>();
    p.community_id = j.at("community_id").get<std::string>();
    p.user_id = j.at("user_id").get<std::string>();
    p.timestamp = j.at("timestamp").get<std::int64_t>();
    if (j.contains("title") && !j["title"].is_null()) p.title = j["title"].get<std::string>();
    if (j.contains("channel_id") && !j["channel_id"].is_null())
      p.channel_id = j["channel_id"].get<std::string>();
  } catch (const json::exception& e) {
    throw DataError("line " + std::to_string(lineno) + ": bad record: " + e.what());
  }
  validate_instance(p, lineno);
  return p;
}

// Minimal RFC-4180 row reader (quoted fields, doubled quotes).
std::vector<std::string> parse_csv_row(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty()) throw DataError("line " + std::to_string(lineno) + ": stray quote");
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw DataError("line " + std::to_string(lineno) + ": unterminated quote");
  fields.push_back(cur);
  return fields;
}

std::vector<PostingInstance> read_csv(std::istream& in) {
  std::vector<PostingInstance> out;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = parse_csv_row(line, lineno);
    if (header.empty()) {
      header = fields;
      continue;
    }
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    PostingInstance p;
    bool saw_ts = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& key = header[i];
      const std::string& value = fields[i];
      if (key == "video_id") {
        p.video_id = value;
      } else if (key == "community_id") {
        p.community_id = value;
      } else if (key == "user_id") {
        p.user_id = value;
      } else if (key == "timestamp") {
        try {
          std::size_t pos = 0;
          p.timestamp = std::stoll(value, &pos);
          if (pos != value.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw DataError("line " + std::to_string(lineno) + ": bad timestamp: " + value);
        }
        saw_ts = true;
      } else if (key == "title") {
        p.title = value;
      } else if (key == "channel_id") {
        p.channel_id = value;
      } else {
        throw DataError("csv header: unknown column '" + key + "'");
      }
    }
    if (!saw_ts) throw DataError("csv header: missing timestamp column");
    validate_instance(p, lineno);
    out.push_back(std::move(p));
  }
  if (header.empty() && out.empty()) {
    // Empty file is a valid empty corpus for jsonl; for csv we require a
    // header only when any data rows exist, so nothing to do here.
  }
  return out;
}

std::vector<PostingInstance> read_jsonl(std::istream& in) {
  std::vector<PostingInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    out.push_back(parse_jsonl_record(line, lineno));
  }
  return out;
}

}  // namespace

std::uint32_t IdIndex::intern(const std::string& id) {
  auto it = lookup_.find(id);
  if (it != lookup_.end()) return it->second;
  const auto idx = static_cast<std::uint32_t>(names_.size());
  lookup_.emplace(id, idx);
  names_.push_back(id);
  return idx;
}

std::optional<std::uint32_t> IdIndex::find(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Corpus corpus_from_events(std::vector<PostingInstance> raw) {
  // Stable sort on timestamp keeps input order for ties, then exact
  // duplicates (same 4-tuple) collapse to the first occurrence.
  std::stable_sort(raw.begin(), raw.end(), [](const PostingInstance& a, const PostingInstance& b) {
    return a.timestamp < b.timestamp;
  });

  Corpus corpus;
  std::set<std::tuple<std::string, std::string, std::string, std::int64_t>> seen;
  for (auto& p : raw) {
    auto key = std::make_tuple(p.video_id, p.community_id, p.user_id, p.timestamp);
    if (!seen.insert(std::move(key)).second) continue;
    corpus.events.push_back(std::move(p));
  }

  corpus.indexed.reserve(corpus.events.size());
  for (const auto& p : corpus.events) {
    IndexedEvent e;
    e.video = corpus.videos.intern(p.video_id);
    e.community = corpus.communities.intern(p.community_id);
    e.user = corpus.users.intern(p.user_id);
    e.timestamp = p.timestamp;
    corpus.indexed.push_back(e);
  }

  corpus.sequences.assign(corpus.videos.size(), {});
  for (std::size_t i = 0; i < corpus.indexed.size(); ++i) {
    corpus.sequences[corpus.indexed[i].video].push_back(static_cast<std::uint32_t>(i));
  }

  // Channel assignment: first-seen channel_id per video; videos without one
  // share the reserved "_none" channel.
  corpus.channel_of.assign(corpus.videos.size(), UINT32_MAX);
  for (const auto& p : corpus.events) {
    const auto v = *corpus.videos.find(p.video_id);
    if (corpus.channel_of[v] != UINT32_MAX) continue;
    if (!p.channel_id.empty()) corpus.channel_of[v] = corpus.channels.intern(p.channel_id);
  }
  for (std::size_t v = 0; v < corpus.channel_of.size(); ++v) {
    if (corpus.channel_of[v] == UINT32_MAX) corpus.channel_of[v] = corpus.channels.intern("_none");
  }
  return corpus;
}

Corpus ingest_events(const std::string& path, EventFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  auto raw = format == EventFormat::kJsonl ? read_jsonl(in) : read_csv(in);
  return corpus_from_events(std::move(raw));
}

Corpus filter_min_communities(const Corpus& corpus, std::size_t min_communities) {
  if (min_communities <= 1) return corpus;
  std::vector<std::set<std::uint32_t>> comms(corpus.videos.size());
  for (const auto& e : corpus.indexed) comms[e.video].insert(e.community);
  std::vector<PostingInstance> kept;
  for (std::size_t i = 0; i < corpus.events.size(); ++i) {
    if (comms[corpus.indexed[i].video].size() >= min_communities) kept.push_back(corpus.events[i]);
  }
  return corpus_from_events(std::move(kept));
}

Split chronological_split(const Corpus& corpus, double train_frac, double val_frac,
                          double test_frac) {
  if (corpus.events.empty()) throw DataError("chronological_split: empty corpus");
  if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0)
    throw DataError("chronological_split: ratios must be positive");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw DataError("chronological_split: ratios must sum to 1");

  const std::size_t n = corpus.events.size();
  const auto n1 = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  const auto n2 =
      static_cast<std::size_t>(std::floor((train_frac + val_frac) * static_cast<double>(n)));

  Split s;
  s.train_begin = 0;
  s.train_end = n1;
  s.val_begin = n1;
  s.val_end = n2;
  s.test_begin = n2;
  s.test_end = n;
  s.boundary_times[0] = corpus.events[n1 < n ? n1 : n - 1].timestamp;
  s.boundary_times[1] = corpus.events[n2 < n ? n2 : n - 1].timestamp;
  return s;
}

PostingSequence posting_sequence(const Corpus& corpus, const std::string& video_id,
                                 std::optional<std::int64_t> until) {
  const auto v = corpus.videos.find(video_id);
  if (!v) throw DataError("posting_sequence: unknown video_id: " + video_id);
  PostingSequence seq;
  seq.video_id = video_id;
  for (const auto ev : corpus.sequences[*v]) {
    const auto& p = corpus.events[ev];
    if (until && p.timestamp >= *until) continue;
    seq.postings.push_back(p);
  }
  return seq;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& p : corpus.events) {
    ordered_json j;
    j["video_id"] = p.video_id;
    j["community_id"] = p.community_id;
    j["user_id"] = p.user_id;
    j["timestamp"] = p.timestamp;
    if (!p.title.empty()) j["title"] = p.title;
    if (!p.channel_id.empty()) j["channel_id"] = p.channel_id;
    out << j.dump() << "\n";
  }
  return out.str();
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  write_text_file(path, serialize_corpus(corpus));
}

EventFormat parse_event_format(const std::string& name) {
  if (name == "jsonl") return EventFormat::kJsonl;
  if (name == "csv") return EventFormat::kCsv;
  throw UsageError("unknown event format: " + name);
}

}  // namespace pathcast
