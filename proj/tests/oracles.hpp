#pragma once

// Reference implementations used only by the tests. They share no code
// with the library beyond its data types.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qintent/corpus.hpp"

namespace oracle {

using U128 = unsigned __int128;

inline std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) {
    out.push_back(w);
  }
  return out;
}

inline bool has(const std::vector<std::string>& v, const std::string& w) {
  return std::find(v.begin(), v.end(), w) != v.end();
}

struct Fraction {
  U128 num = 0;
  U128 den = 1;
};

inline U128 gcd(U128 a, U128 b) {
  while (b) {
    a %= b;
    std::swap(a, b);
  }
  return a;
}

inline Fraction plus(Fraction a, U128 n, U128 d) {
  Fraction out{a.num * d + n * a.den, a.den * d};
  const U128 g = gcd(out.num, out.den);
  return {out.num / g, out.den / g};
}

inline bool greater(const Fraction& a, const Fraction& b) { return a.num * b.den > b.num * a.den; }
inline bool same(const Fraction& a, const Fraction& b) { return a.num == b.num && a.den == b.den; }
inline double to_double(const Fraction& f) { return static_cast<double>(f.num) / static_cast<double>(f.den); }

struct TextPair {
  std::string q;
  std::string rq;
};

struct SplitPair {
  std::vector<std::string> q;
  std::vector<std::string> rq;
};

inline std::vector<SplitPair> split_corpus(const std::vector<TextPair>& corpus) {
  std::vector<SplitPair> out;
  for (const auto& p : corpus) {
    out.push_back({words(p.q), words(p.rq)});
  }
  return out;
}

// Number of pairs whose q contains `term`, and how many of those keep it.
inline std::pair<std::uint64_t, std::uint64_t> retention(const std::vector<SplitPair>& corpus, const std::string& term) {
  std::uint64_t occurred = 0;
  std::uint64_t retained = 0;
  for (const auto& p : corpus) {
    if (has(p.q, term)) {
      ++occurred;
      retained += has(p.rq, term) ? 1 : 0;
    }
  }
  return {retained, occurred};
}

inline std::pair<std::uint64_t, std::uint64_t> retention(const std::vector<TextPair>& corpus, const std::string& term) {
  return retention(split_corpus(corpus), term);
}

struct Scored {
  std::string term;
  Fraction score;
};

// Every v with a positive score for query terms `query`, best first, ties
// by term.
inline std::vector<Scored> refinement(const std::vector<SplitPair>& corpus, const std::vector<std::string>& query) {
  std::vector<std::string> us;
  for (const auto& u : query) {
    if (!has(us, u)) {
      us.push_back(u);
    }
  }
  std::vector<std::string> vocab;
  for (const auto& p : corpus) {
    for (const auto& w : p.rq) {
      if (!has(vocab, w)) {
        vocab.push_back(w);
      }
    }
  }
  std::vector<Scored> out;
  for (const auto& v : vocab) {
    Fraction s;
    for (const auto& u : us) {
      std::uint64_t with_u = 0;
      std::uint64_t both = 0;
      for (const auto& p : corpus) {
        if (has(p.q, u)) {
          ++with_u;
          both += has(p.rq, v) ? 1 : 0;
        }
      }
      if (with_u > 0) {
        s = plus(s, both, with_u);
      }
    }
    if (s.num > 0) {
      out.push_back({v, s});
    }
  }
  std::sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
    if (greater(a.score, b.score)) return true;
    if (greater(b.score, a.score)) return false;
    return a.term < b.term;
  });
  return out;
}

inline std::vector<Scored> refinement(const std::vector<TextPair>& corpus, const std::vector<std::string>& query) {
  return refinement(split_corpus(corpus), query);
}

// --- reformulation filters ---------------------------------------------------

struct Step {
  std::vector<std::string> terms;
  bool engaged = false;
  std::optional<std::string> atc;
};

struct Emitted {
  std::string q;
  std::string rq;
  std::optional<std::string> product;
  friend bool operator==(const Emitted&, const Emitted&) = default;
};

inline std::string join(const std::vector<std::string>& terms) {
  std::string out;
  for (const auto& t : terms) {
    out += (out.empty() ? "" : " ") + t;
  }
  return out;
}

// Events of one session ordered by time (stable), malformed ones dropped,
// runs of the same query merged into one step.
inline std::vector<Step> steps(std::vector<qintent::SessionEvent> events, const qintent::Vocabulary& vocab) {
  std::vector<qintent::SessionEvent> ok;
  for (auto& e : events) {
    const bool product_matches = (e.engagement == qintent::Engagement::none) == !e.product.has_value();
    if (product_matches && !e.query.terms.empty()) {
      ok.push_back(std::move(e));
    }
  }
  for (std::size_t i = 1; i < ok.size(); ++i) {
    for (std::size_t j = i; j > 0 && ok[j].timestamp < ok[j - 1].timestamp; --j) {
      std::swap(ok[j], ok[j - 1]);
    }
  }
  std::vector<Step> out;
  for (const auto& e : ok) {
    std::vector<std::string> terms;
    for (auto id : e.query.terms) {
      terms.push_back(vocab.term(id));
    }
    if (out.empty() || out.back().terms != terms) {
      out.push_back({terms, false, std::nullopt});
    }
    out.back().engaged = out.back().engaged || e.engagement != qintent::Engagement::none;
    if (e.engagement == qintent::Engagement::atc && !out.back().atc) {
      out.back().atc = e.product;
    }
  }
  return out;
}

inline double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (const auto& w : sa) {
    inter += sb.count(w);
  }
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

struct Verdict {
  bool adjacency = false;
  bool atc = false;
  bool rare = false;
  bool similar = false;
  bool frequent_terms = false;
  bool shape = false;
  bool all() const { return adjacency && atc && rare && similar && frequent_terms && shape; }
};

// The six predicates for steps i < j of one session.
inline Verdict check(const std::vector<Step>& s, std::size_t i, std::size_t j, const qintent::QueryStats& stats,
                     const qintent::FilterConfig& cfg, const qintent::Vocabulary& vocab) {
  Verdict v;
  const auto& a = s[i].terms;
  const auto& b = s[j].terms;
  v.adjacency = j > i && j - i - 1 <= cfg.max_intermediate && a != b;
  v.atc = s[j].atc.has_value();
  const auto st = stats.find(join(a));
  v.rare = st && st->count < cfg.rare_max_count && st->ctr < cfg.rare_max_ctr;
  v.similar = jaccard(a, b) >= cfg.min_jaccard;
  v.frequent_terms = true;
  for (const auto& t : a) {
    const auto id = vocab.find(t);
    v.frequent_terms = v.frequent_terms && id && vocab.frequency(*id) > cfg.min_term_freq;
  }
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  const bool proper = sa.size() < sb.size() && std::includes(sb.begin(), sb.end(), sa.begin(), sa.end());
  v.shape = !proper && a.size() >= cfg.min_query_len;
  return v;
}

inline std::vector<Emitted> expected_pairs(const std::vector<Step>& s, const qintent::QueryStats& stats,
                                           const qintent::FilterConfig& cfg, const qintent::Vocabulary& vocab) {
  std::vector<Emitted> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (check(s, i, j, stats, cfg, vocab).all()) {
        out.push_back({join(s[i].terms), join(s[j].terms), s[j].atc});
      }
    }
  }
  return out;
}

}  // namespace oracle
