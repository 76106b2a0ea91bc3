#include "qintent/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "qintent/errors.hpp"

namespace qintent {

StopWords StopWords::english_default() {
  return StopWords({"for", "with", "on", "the", "a", "an", "of", "in", "to", "and"});
}

StopWords StopWords::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open stop-word file " + path);
  }
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& token : tokenize_text(line)) {
      words.push_back(std::move(token));
    }
  }
  return StopWords(std::move(words));
}

StopWords::StopWords(std::vector<std::string> words) : words_(words.begin(), words.end()) {}

std::vector<std::string> StopWords::sorted() const {
  std::vector<std::string> out(words_.begin(), words_.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> tokenize_text(std::string_view raw) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) {
      ++j;
    }
    std::size_t begin = i;
    std::size_t end = j;
    while (begin < end && std::ispunct(static_cast<unsigned char>(raw[begin]))) {
      ++begin;
    }
    while (end > begin && std::ispunct(static_cast<unsigned char>(raw[end - 1]))) {
      --end;
    }
    if (begin < end) {
      std::string token(raw.substr(begin, end - begin));
      for (char& c : token) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

Vocabulary::Vocabulary() { intern(kUnkTerm); }

TermId Vocabulary::intern(std::string_view term) {
  if (auto it = index_.find(std::string(term)); it != index_.end()) {
    return it->second;
  }
  const auto id = static_cast<TermId>(terms_.size());
  terms_.emplace_back(term);
  frequencies_.push_back(0);
  stop_.push_back(stopwords_.contains(term) ? 1 : 0);
  index_.emplace(terms_.back(), id);
  return id;
}

TermId Vocabulary::add(std::string_view term) {
  const TermId id = intern(term);
  ++frequencies_[id];
  return id;
}

std::optional<TermId> Vocabulary::find(std::string_view term) const {
  if (auto it = index_.find(std::string(term)); it != index_.end()) {
    return it->second;
  }
  return std::nullopt;
}

void Vocabulary::apply_stopwords(const StopWords& stopwords) {
  stopwords_ = stopwords;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    stop_[i] = stopwords_.contains(terms_[i]) ? 1 : 0;
  }
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> terms, std::vector<std::uint64_t> frequencies,
                                  const StopWords& stopwords) {
  if (terms.empty() || terms.front() != kUnkTerm) {
    throw SchemaError("vocabulary must start with the " + std::string(kUnkTerm) + " term");
  }
  if (terms.size() != frequencies.size()) {
    throw SchemaError("vocabulary terms and frequencies differ in length");
  }
  Vocabulary vocab;
  vocab.apply_stopwords(stopwords);
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (vocab.find(terms[i])) {
      throw SchemaError("duplicate vocabulary term '" + terms[i] + "'");
    }
    vocab.intern(terms[i]);
  }
  vocab.frequencies_ = std::move(frequencies);
  return vocab;
}

}  // namespace qintent
