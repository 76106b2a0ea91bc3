#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qintent/vocabulary.hpp"

namespace qintent {

/// A tokenized query: term ids into some Vocabulary plus the raw text they
/// came from.
struct Query {
  std::vector<TermId> terms;
  std::string raw;

  std::size_t size() const { return terms.size(); }
  friend bool operator==(const Query&, const Query&) = default;
};

enum class VocabMode { build, frozen };

/// Tokenizes `raw`. Build mode adds every term (and one occurrence) to
/// `vocab`; frozen mode maps unknown terms to Vocabulary::kUnk. Throws
/// EmptyQuery when nothing survives tokenization.
Query tokenize(std::string_view raw, VocabMode mode, Vocabulary& vocab);
Query tokenize_frozen(std::string_view raw, const Vocabulary& vocab);

/// Space-joined token sequence; the key used by QueryStats.
std::string normalize_query(std::string_view raw);

/// |a ∩ b| / |a ∪ b| over distinct elements. Rejects two empty inputs.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);
double jaccard(std::span<const TermId> a, std::span<const TermId> b);

enum class Engagement { none, click, atc, order };

std::string_view to_string(Engagement e);
Engagement parse_engagement(std::string_view s);

struct SessionEvent {
  std::string session;
  std::int64_t timestamp = 0;
  Query query;
  Engagement engagement = Engagement::none;
  std::optional<std::string> product;
};

struct ReformulationPair {
  Query q;
  Query rq;
  std::optional<std::string> product;
};

struct QueryStat {
  std::uint64_t count = 0;
  double ctr = 0.0;
};

/// Per normalized query: occurrences in the rarity window and click-through
/// rate.
class QueryStats {
public:
  void set(std::string key, QueryStat stat);
  std::optional<QueryStat> find(const std::string& key) const;
  const std::map<std::string, QueryStat>& entries() const { return entries_; }

  /// Counts occurrences and the fraction of engaged searches per normalized
  /// query over the whole log; used when no precomputed window is supplied.
  static QueryStats from_events(std::span<const SessionEvent> events);

private:
  std::map<std::string, QueryStat> entries_;
};

struct FilterConfig {
  std::size_t max_intermediate = 2;
  double min_jaccard = 0.2;
  std::uint64_t rare_max_count = 300;
  double rare_max_ctr = 0.05;
  std::uint64_t min_term_freq = 100;
  std::size_t min_query_len = 3;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys and
/// unparsable values throw SchemaError.
FilterConfig parse_filter_config(std::istream& in);
FilterConfig load_filter_config(const std::string& path);

struct ExtractionStats {
  std::size_t sessions = 0;
  std::size_t searches = 0;
  std::size_t candidates = 0;
  std::size_t emitted = 0;
  std::size_t malformed = 0;
};

/// Applies the six reformulation filters to every session. `vocab` supplies
/// corpus term frequencies and must be the vocabulary the events were
/// tokenized with. Output order follows ascending session id, then the order
/// of (a, b) within the session.
std::vector<ReformulationPair> extract_pairs(std::span<const SessionEvent> events, const QueryStats& stats,
                                             const FilterConfig& cfg, const Vocabulary& vocab,
                                             ExtractionStats* report = nullptr);

struct SplitFractions {
  double train = 0.8;
  double test = 0.15;
  double validation = 0.05;
};

struct DatasetSplit {
  std::vector<ReformulationPair> train;
  std::vector<ReformulationPair> test;
  std::vector<ReformulationPair> validation;
};

/// Shuffles with `seed` and slices: train = round(n·f_train),
/// test = round(n·f_test), validation gets the remainder.
DatasetSplit split_dataset(std::span<const ReformulationPair> pairs, std::uint64_t seed,
                           SplitFractions fractions);

// --- JSON-lines formats -----------------------------------------------------

struct SessionLog {
  std::vector<SessionEvent> events;
  std::size_t malformed = 0;
};

/// {"session": str, "ts": int, "query": str, "engagement": "none|click|atc|order", "product": str?}
/// Queries are tokenized in build mode into `vocab`. Malformed lines are
/// counted and skipped.
SessionLog read_session_log(std::istream& in, Vocabulary& vocab);
SessionLog read_session_log(const std::string& path, Vocabulary& vocab);
void write_session_event(std::ostream& out, const SessionEvent& event);

/// Pair file lines: {"q": str, "rq": str, "product": str?}
struct RawPair {
  std::string q;
  std::string rq;
  std::optional<std::string> product;
  friend bool operator==(const RawPair&, const RawPair&) = default;
};

std::vector<RawPair> read_pairs(const std::string& path);
std::vector<RawPair> read_pairs(std::istream& in);
void write_pairs(const std::string& path, std::span<const ReformulationPair> pairs);
void write_pairs(std::ostream& out, std::span<const ReformulationPair> pairs);

/// Tokenizes raw pairs against `vocab` in the given mode. Pairs whose q or
/// rq tokenizes to nothing are rejected with SchemaError.
std::vector<ReformulationPair> tokenize_pairs(std::span<const RawPair> raw, VocabMode mode, Vocabulary& vocab);

/// {"query": str, "count": int, "ctr": real}
QueryStats read_query_stats(const std::string& path);
void write_query_stats(std::ostream& out, const QueryStats& stats);

}  // namespace qintent
