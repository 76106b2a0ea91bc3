#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace qintent {

using TermId = std::uint32_t;

/// Function words excluded from precision metrics (and optionally from
/// displayed refinements).
class StopWords {
public:
  /// for, with, on, the, a, an, of, in, to, and
  static StopWords english_default();
  static StopWords from_file(const std::string& path);

  StopWords() = default;
  explicit StopWords(std::vector<std::string> words);

  bool contains(std::string_view term) const { return words_.contains(std::string(term)); }
  std::vector<std::string> sorted() const;

private:
  std::unordered_set<std::string> words_;
};

/// Lowercases, splits on whitespace and strips leading/trailing ASCII
/// punctuation from every token. Internal hyphens and digits survive
/// ("3-piece" stays one term). Tokens that strip to nothing are dropped.
std::vector<std::string> tokenize_text(std::string_view raw);

/// Dense bidirectional term <-> id map. Id 0 is the reserved UNK term.
class Vocabulary {
public:
  static constexpr TermId kUnk = 0;
  static constexpr std::string_view kUnkTerm = "<unk>";

  Vocabulary();

  /// Adds one occurrence of `term`, creating an id on first sight.
  TermId add(std::string_view term);
  /// Creates the term without counting an occurrence.
  TermId intern(std::string_view term);

  std::optional<TermId> find(std::string_view term) const;
  TermId lookup(std::string_view term) const { return find(term).value_or(kUnk); }

  const std::string& term(TermId id) const { return terms_.at(id); }
  std::uint64_t frequency(TermId id) const { return frequencies_.at(id); }
  bool is_stop(TermId id) const { return stop_.at(id) != 0; }
  std::size_t size() const { return terms_.size(); }

  void apply_stopwords(const StopWords& stopwords);
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::uint64_t>& frequencies() const { return frequencies_; }

  /// Rebuilds from parallel arrays; index 0 must be the UNK term.
  static Vocabulary from_parts(std::vector<std::string> terms, std::vector<std::uint64_t> frequencies,
                               const StopWords& stopwords);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.terms_ == b.terms_ && a.frequencies_ == b.frequencies_ && a.stop_ == b.stop_;
  }

private:
  std::vector<std::string> terms_;
  std::vector<std::uint64_t> frequencies_;
  std::vector<std::uint8_t> stop_;
  std::unordered_map<std::string, TermId> index_;
  StopWords stopwords_ = StopWords::english_default();
};

}  // namespace qintent
