#include "qintent/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qintent/errors.hpp"
#include "qintent/rng.hpp"

namespace qintent {

using nlohmann::json;

Query tokenize(std::string_view raw, VocabMode mode, Vocabulary& vocab) {
  if (mode == VocabMode::frozen) {
    return tokenize_frozen(raw, vocab);
  }
  auto tokens = tokenize_text(raw);
  if (tokens.empty()) {
    throw EmptyQuery("query '" + std::string(raw) + "' has no terms after tokenization");
  }
  Query q;
  q.raw = std::string(raw);
  q.terms.reserve(tokens.size());
  for (const auto& t : tokens) {
    q.terms.push_back(vocab.add(t));
  }
  return q;
}

Query tokenize_frozen(std::string_view raw, const Vocabulary& vocab) {
  auto tokens = tokenize_text(raw);
  if (tokens.empty()) {
    throw EmptyQuery("query '" + std::string(raw) + "' has no terms after tokenization");
  }
  Query q;
  q.raw = std::string(raw);
  q.terms.reserve(tokens.size());
  for (const auto& t : tokens) {
    q.terms.push_back(vocab.lookup(t));
  }
  return q;
}

std::string normalize_query(std::string_view raw) {
  std::string key;
  for (const auto& t : tokenize_text(raw)) {
    if (!key.empty()) {
      key.push_back(' ');
    }
    key += t;
  }
  return key;
}

namespace {

template <typename T>
double jaccard_impl(std::span<const T> a, std::span<const T> b) {
  std::set<T> sa(a.begin(), a.end());
  std::set<T> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) {
    throw std::invalid_argument("jaccard: both term sets are empty");
  }
  std::size_t common = 0;
  for (const auto& x : sa) {
    common += sb.count(x);
  }
  const std::size_t united = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(united);
}

}  // namespace

double jaccard(std::span<const std::string> a, std::span<const std::string> b) { return jaccard_impl(a, b); }

double jaccard(std::span<const TermId> a, std::span<const TermId> b) { return jaccard_impl(a, b); }

std::string_view to_string(Engagement e) {
  switch (e) {
    case Engagement::none: return "none";
    case Engagement::click: return "click";
    case Engagement::atc: return "atc";
    case Engagement::order: return "order";
  }
  return "none";
}

Engagement parse_engagement(std::string_view s) {
  if (s == "none") return Engagement::none;
  if (s == "click") return Engagement::click;
  if (s == "atc") return Engagement::atc;
  if (s == "order") return Engagement::order;
  throw SchemaError("unknown engagement '" + std::string(s) + "'");
}

void QueryStats::set(std::string key, QueryStat stat) {
  if (!(stat.ctr >= 0.0 && stat.ctr <= 1.0)) {
    throw SchemaError("click-through rate for '" + key + "' outside [0, 1]");
  }
  entries_[std::move(key)] = stat;
}

std::optional<QueryStat> QueryStats::find(const std::string& key) const {
  if (auto it = entries_.find(key); it != entries_.end()) {
    return it->second;
  }
  return std::nullopt;
}

namespace {

/// One displayed result page: consecutive events of a session that repeat
/// the same query collapse into a single search.
struct Search {
  const Query* query = nullptr;
  std::string key;
  bool engaged = false;
  std::optional<std::string> atc_product;
};

bool well_formed(const SessionEvent& e) {
  return (e.engagement == Engagement::none) != e.product.has_value() && !e.query.terms.empty();
}

std::map<std::string, std::vector<const SessionEvent*>> group_sessions(std::span<const SessionEvent> events,
                                                                       std::size_t& malformed) {
  std::map<std::string, std::vector<const SessionEvent*>> sessions;
  for (const auto& e : events) {
    if (!well_formed(e)) {
      ++malformed;
      continue;
    }
    sessions[e.session].push_back(&e);
  }
  for (auto& [id, list] : sessions) {
    std::stable_sort(list.begin(), list.end(),
                     [](const SessionEvent* a, const SessionEvent* b) { return a->timestamp < b->timestamp; });
  }
  return sessions;
}

std::vector<Search> collapse(const std::vector<const SessionEvent*>& list) {
  std::vector<Search> searches;
  for (const SessionEvent* e : list) {
    if (searches.empty() || searches.back().query->terms != e->query.terms) {
      Search s;
      s.query = &e->query;
      s.key = normalize_query(e->query.raw);
      searches.push_back(std::move(s));
    }
    Search& s = searches.back();
    s.engaged = s.engaged || e->engagement != Engagement::none;
    if (e->engagement == Engagement::atc && !s.atc_product) {
      s.atc_product = e->product;
    }
  }
  return searches;
}

bool proper_subset(const std::set<TermId>& a, const std::set<TermId>& b) {
  return a.size() < b.size() && std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

QueryStats QueryStats::from_events(std::span<const SessionEvent> events) {
  std::size_t malformed = 0;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
  for (const auto& [id, list] : group_sessions(events, malformed)) {
    for (const auto& s : collapse(list)) {
      auto& [n, engaged] = counts[s.key];
      ++n;
      engaged += s.engaged ? 1 : 0;
    }
  }
  QueryStats stats;
  for (auto& [key, c] : counts) {
    stats.set(key, {c.first, static_cast<double>(c.second) / static_cast<double>(c.first)});
  }
  return stats;
}

namespace {

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw SchemaError("filter config: '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  if (used != value.size() || value.front() == '-') {
    throw SchemaError("filter config: '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw SchemaError("filter config: '" + key + "' expects a number, got '" + value + "'");
  }
  if (used != value.size()) {
    throw SchemaError("filter config: '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

FilterConfig parse_filter_config(std::istream& in) {
  FilterConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    const std::string body = trim(line);
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("filter config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "max_intermediate") {
      cfg.max_intermediate = parse_uint(key, value);
    } else if (key == "min_jaccard") {
      cfg.min_jaccard = parse_real(key, value);
    } else if (key == "rare_max_count") {
      cfg.rare_max_count = parse_uint(key, value);
    } else if (key == "rare_max_ctr") {
      cfg.rare_max_ctr = parse_real(key, value);
    } else if (key == "min_term_freq") {
      cfg.min_term_freq = parse_uint(key, value);
    } else if (key == "min_query_len") {
      cfg.min_query_len = parse_uint(key, value);
    } else {
      throw SchemaError("filter config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

FilterConfig load_filter_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open filter config " + path);
  }
  return parse_filter_config(in);
}

std::vector<ReformulationPair> extract_pairs(std::span<const SessionEvent> events, const QueryStats& stats,
                                             const FilterConfig& cfg, const Vocabulary& vocab,
                                             ExtractionStats* report) {
  ExtractionStats local;
  std::vector<ReformulationPair> pairs;
  const auto sessions = group_sessions(events, local.malformed);
  local.sessions = sessions.size();

  for (const auto& [id, list] : sessions) {
    const auto searches = collapse(list);
    local.searches += searches.size();
    for (std::size_t i = 0; i < searches.size(); ++i) {
      const Search& a = searches[i];
      const Query& qa = *a.query;
      if (qa.size() < cfg.min_query_len) {
        continue;
      }
      const auto stat = stats.find(a.key);
      if (!stat || stat->count >= cfg.rare_max_count || stat->ctr >= cfg.rare_max_ctr) {
        continue;
      }
      const bool frequent_terms = std::all_of(qa.terms.begin(), qa.terms.end(), [&](TermId t) {
        return t < vocab.size() && vocab.frequency(t) > cfg.min_term_freq;
      });
      if (!frequent_terms) {
        continue;
      }
      const std::set<TermId> set_a(qa.terms.begin(), qa.terms.end());

      const std::size_t last = std::min(searches.size() - 1, i + 1 + cfg.max_intermediate);
      for (std::size_t j = i + 1; j <= last; ++j) {
        const Search& b = searches[j];
        ++local.candidates;
        if (!b.atc_product || b.key == a.key) {
          continue;
        }
        const Query& qb = *b.query;
        if (jaccard(std::span<const TermId>(qa.terms), std::span<const TermId>(qb.terms)) < cfg.min_jaccard) {
          continue;
        }
        const std::set<TermId> set_b(qb.terms.begin(), qb.terms.end());
        if (proper_subset(set_a, set_b)) {
          continue;
        }
        pairs.push_back({qa, qb, b.atc_product});
      }
    }
  }
  local.emitted = pairs.size();
  if (report) {
    *report = local;
  }
  return pairs;
}

DatasetSplit split_dataset(std::span<const ReformulationPair> pairs, std::uint64_t seed, SplitFractions f) {
  if (pairs.size() < 3) {
    throw std::invalid_argument("split_dataset: need at least 3 pairs, got " + std::to_string(pairs.size()));
  }
  if (f.train < 0 || f.test < 0 || f.validation < 0 || std::abs(f.train + f.test + f.validation - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  Rng rng(seed);
  rng.shuffle(order);

  const auto n = static_cast<double>(pairs.size());
  const std::size_t n_train = std::min<std::size_t>(pairs.size(), std::llround(n * f.train));
  const std::size_t n_test = std::min<std::size_t>(pairs.size() - n_train, std::llround(n * f.test));

  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& target = i < n_train ? split.train : (i < n_train + n_test ? split.test : split.validation);
    target.push_back(pairs[order[i]]);
  }
  return split;
}

// --- JSON-lines ---------------------------------------------------------------

namespace {

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  if (!it->is_string()) {
    throw SchemaError(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw SchemaError(std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

SessionLog read_session_log(std::istream& in, Vocabulary& vocab) {
  SessionLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) {
      continue;
    }
    try {
      const json j = json::parse(line);
      SessionEvent e;
      e.session = required_string(j, "session");
      const auto ts = j.find("ts");
      if (ts == j.end() || !ts->is_number_integer()) {
        throw SchemaError("missing integer field 'ts'");
      }
      e.timestamp = ts->get<std::int64_t>();
      e.engagement = parse_engagement(required_string(j, "engagement"));
      e.product = optional_string(j, "product");
      if ((e.engagement == Engagement::none) == e.product.has_value()) {
        throw SchemaError("product must be present exactly when engagement is not none");
      }
      const std::string raw = required_string(j, "query");
      if (tokenize_text(raw).empty()) {
        throw EmptyQuery("empty query");
      }
      e.query = tokenize(raw, VocabMode::build, vocab);
      log.events.push_back(std::move(e));
    } catch (const json::exception&) {
      ++log.malformed;
    } catch (const SchemaError&) {
      ++log.malformed;
    } catch (const EmptyQuery&) {
      ++log.malformed;
    }
  }
  return log;
}

SessionLog read_session_log(const std::string& path, Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open session log " + path);
  }
  return read_session_log(in, vocab);
}

void write_session_event(std::ostream& out, const SessionEvent& event) {
  json j;
  j["session"] = event.session;
  j["ts"] = event.timestamp;
  j["query"] = event.query.raw;
  j["engagement"] = std::string(to_string(event.engagement));
  if (event.product) {
    j["product"] = *event.product;
  }
  out << j.dump() << '\n';
}

std::vector<RawPair> read_pairs(std::istream& in) {
  std::vector<RawPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) {
      continue;
    }
    try {
      const json j = json::parse(line);
      pairs.push_back({required_string(j, "q"), required_string(j, "rq"), optional_string(j, "product")});
    } catch (const json::exception& e) {
      throw SchemaError("pair file line " + std::to_string(lineno) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("pair file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

std::vector<RawPair> read_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open pair file " + path);
  }
  return read_pairs(in);
}

void write_pairs(std::ostream& out, std::span<const ReformulationPair> pairs) {
  for (const auto& p : pairs) {
    json j;
    j["q"] = p.q.raw;
    j["rq"] = p.rq.raw;
    if (p.product) {
      j["product"] = *p.product;
    }
    out << j.dump() << '\n';
  }
}

void write_pairs(const std::string& path, std::span<const ReformulationPair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write pair file " + path);
  }
  write_pairs(out, pairs);
}

std::vector<ReformulationPair> tokenize_pairs(std::span<const RawPair> raw, VocabMode mode, Vocabulary& vocab) {
  std::vector<ReformulationPair> out;
  out.reserve(raw.size());
  for (const auto& r : raw) {
    try {
      out.push_back({tokenize(r.q, mode, vocab), tokenize(r.rq, mode, vocab), r.product});
    } catch (const EmptyQuery& e) {
      throw SchemaError(std::string("pair with empty query: ") + e.what());
    }
  }
  return out;
}

QueryStats read_query_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open query stats " + path);
  }
  QueryStats stats;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) {
      continue;
    }
    try {
      const json j = json::parse(line);
      const auto count = j.at("count");
      const auto ctr = j.at("ctr");
      if (!count.is_number_integer() || count.get<std::int64_t>() < 0 || !ctr.is_number()) {
        throw SchemaError("count must be a non-negative integer and ctr a number");
      }
      stats.set(normalize_query(required_string(j, "query")), {count.get<std::uint64_t>(), ctr.get<double>()});
    } catch (const json::exception& e) {
      throw SchemaError("stats line " + std::to_string(lineno) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("stats line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return stats;
}

void write_query_stats(std::ostream& out, const QueryStats& stats) {
  for (const auto& [key, stat] : stats.entries()) {
    json j;
    j["query"] = key;
    j["count"] = stat.count;
    j["ctr"] = stat.ctr;
    out << j.dump() << '\n';
  }
}

}  // namespace qintent
