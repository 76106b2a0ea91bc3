#include "qintent/synth.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qintent/errors.hpp"
#include "qintent/rng.hpp"

namespace qintent {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ProductTypeSpec, name, brands, attributes, description_terms,
                                                type_retention, brand_retention, attribute_retention)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ContextRule, term, retention)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynonymRule, type, from, to, probability)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NoisePhrase, terms, prefix)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CatalogDecoy, title, description)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SynthSpec, types, modifiers, noise_retention, noise_phrases,
                                                synonyms, decoys, stopword_retention, sessions, transition_weights,
                                                p_brand, p_attribute, modifier_count_weights, p_noise, p_add_sale,
                                                p_add_attribute, p_add_brand, p_rare, intermediate_weights, p_atc,
                                                variants)

std::string_view to_string(Transition t) {
  switch (t) {
    case Transition::general_to_specific: return "general_to_specific";
    case Transition::incomplete_to_complete: return "incomplete_to_complete";
    case Transition::change_of_intent: return "change_of_intent";
    case Transition::specific_to_general: return "specific_to_general";
    case Transition::same_intent: return "same_intent";
  }
  return "same_intent";
}

namespace {

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("synth spec: " + what + " must lie in [0, 1]");
  }
}

template <std::size_t N>
void check_weights(const std::array<double, N>& w, const std::string& what) {
  double total = 0.0;
  for (double x : w) {
    if (x < 0.0) {
      throw std::invalid_argument("synth spec: negative weight in " + what);
    }
    total += x;
  }
  if (total <= 0.0) {
    throw std::invalid_argument("synth spec: " + what + " weights sum to zero");
  }
}

}  // namespace

void SynthSpec::validate() const {
  if (types.empty()) {
    throw std::invalid_argument("synth spec: no product types");
  }
  for (const auto& t : types) {
    if (t.name.empty() || t.brands.empty() || t.attributes.empty()) {
      throw std::invalid_argument("synth spec: product type '" + t.name + "' has an empty brand or attribute pool");
    }
    check_probability(t.type_retention, t.name + ".type_retention");
    check_probability(t.brand_retention, t.name + ".brand_retention");
    check_probability(t.attribute_retention, t.name + ".attribute_retention");
  }
  if (noise_phrases.empty() || noise_retention.empty()) {
    throw std::invalid_argument("synth spec: empty noise pool");
  }
  for (const auto& phrase : noise_phrases) {
    if (phrase.terms.empty()) {
      throw std::invalid_argument("synth spec: empty noise phrase");
    }
  }
  for (const auto& [term, p] : noise_retention) {
    check_probability(p, "noise retention of " + term);
  }
  for (const auto& m : modifiers) {
    if (m.retention.empty()) {
      throw std::invalid_argument("synth spec: modifier '" + m.term + "' lists no product types");
    }
    for (const auto& [type, p] : m.retention) {
      check_probability(p, "retention of " + m.term + " with " + type);
    }
  }
  for (const auto& s : synonyms) {
    check_probability(s.probability, "synonym " + s.from + "->" + s.to);
  }
  for (double p : {stopword_retention, p_brand, p_attribute, p_noise, p_add_sale, p_add_attribute, p_add_brand,
                   p_rare, p_atc}) {
    check_probability(p, "probability");
  }
  check_weights(transition_weights, "transition");
  check_weights(modifier_count_weights, "modifier count");
  check_weights(intermediate_weights, "intermediate count");
  if (sessions == 0 || variants == 0) {
    throw std::invalid_argument("synth spec: sessions and variants must be positive");
  }
}

SynthSpec default_synth_spec() {
  SynthSpec s;
  auto type = [&s](std::string name, std::vector<std::string> brands, std::vector<std::string> attrs,
                   std::vector<std::string> desc, double brand_ret = 0.55, double attr_ret = 0.5) {
    s.types.push_back({std::move(name), std::move(brands), std::move(attrs), std::move(desc), 0.95, brand_ret,
                       attr_ret});
  };
  type("phone", {"motorola", "samsung", "nokia", "alcatel"}, {"unlocked", "prepaid", "5g", "refurbished", "dual-sim"},
       {"smartphone", "mobile"}, 0.9);
  type("suit", {"haggar", "kenneth", "nautica", "perry"}, {"slim", "navy", "wool", "tuxedo", "pinstripe"},
       {"jacket", "pants"});
  type("dinnerware", {"corelle", "gibson", "pfaltzgraff", "mainstays"},
       {"stoneware", "porcelain", "melamine", "square", "round"}, {"plates", "bowls"});
  type("light", {"munchkin", "ge", "philips", "feit"}, {"led", "plug-in", "motion", "dimmable", "solar"},
       {"bulb", "lighting"});
  type("paint", {"behr", "glidden", "valspar", "rustoleum"}, {"semi-gloss", "satin", "primer", "white", "gallon"},
       {"coating", "finish"});
  type("boots", {"caterpillar", "timberland", "survivor", "brahma"},
       {"waterproof", "leather", "insulated", "composite", "lace-up"}, {"footwear", "safety"});
  type("helmets", {"razor", "bell", "schwinn", "huffy"}, {"bike", "skate", "adjustable", "pink", "multisport"},
       {"protective", "youth"});
  type("hose", {"orbit", "flexzilla", "gilmour", "melnor"}, {"50ft", "100ft", "expandable", "heavy-duty", "nozzle"},
       {"watering", "hoses"}, 0.2);
  type("flatware", {"oneida", "lenox", "cuisinart", "towle"}, {"stainless", "20-piece", "silverware", "forged", "service"},
       {"cutlery", "spoons"});
  type("cover", {"fh", "oxgord", "bdk", "pilot"}, {"universal", "bench", "bucket", "neoprene", "camo"},
       {"protector", "interior"});
  type("kit", {"gillette", "schick", "remington", "braun"}, {"travel", "beard", "starter", "deluxe", "grooming"},
       {"razor", "trimmer"});
  type("charger", {"anker", "belkin", "aukey", "mophie"}, {"usb-c", "fast", "magnetic", "dock", "lightning"},
       {"adapter", "cable"});
  type("lamp", {"catalina", "tensor", "lightaccents", "hampton"}, {"desk", "floor", "table", "arc", "swing-arm"},
       {"shade", "bulb"});
  type("shirt", {"hanes", "gildan", "champion", "wrangler"}, {"polo", "flannel", "henley", "v-neck", "pocket"},
       {"cotton", "tee"});
  type("gum", {"orbit", "extra", "trident", "wrigleys"}, {"spearmint", "peppermint", "sugarfree", "bubblemint",
       "wintergreen"}, {"chewing", "pack"}, 0.9);

  s.modifiers = {
      {"3-piece", {{"suit", 0.95}, {"flatware", 0.9}, {"dinnerware", 0.05}, {"kit", 0.1}}},
      {"kids", {{"helmets", 0.95}, {"shirt", 0.9}, {"kit", 0.05}, {"lamp", 0.1}}},
      {"mens", {{"shirt", 0.95}, {"boots", 0.9}, {"kit", 0.05}, {"cover", 0.1}}},
      {"outdoor", {{"light", 0.95}, {"paint", 0.9}, {"lamp", 0.1}, {"hose", 0.05}}},
      {"battery", {{"charger", 0.95}, {"phone", 0.9}, {"light", 0.05}, {"lamp", 0.1}}},
      {"steel", {{"flatware", 0.95}, {"boots", 0.9}, {"hose", 0.05}, {"dinnerware", 0.1}}},
      {"gold", {{"phone", 0.9}, {"flatware", 0.9}, {"lamp", 0.05}, {"shirt", 0.1}}},
      {"red", {{"shirt", 0.95}, {"paint", 0.9}, {"hose", 0.05}, {"helmets", 0.1}}},
      {"wireless", {{"charger", 0.95}, {"lamp", 0.9}, {"phone", 0.05}, {"light", 0.1}}},
      {"12", {{"dinnerware", 0.95}, {"flatware", 0.9}, {"hose", 0.05}, {"gum", 0.1}}},
      {"electric", {{"lamp", 0.9}, {"kit", 0.95}, {"helmets", 0.05}, {"light", 0.1}}},
      {"garden", {{"hose", 0.95}, {"light", 0.9}, {"kit", 0.05}, {"boots", 0.1}}},
      {"night", {{"light", 0.95}, {"helmets", 0.9}, {"lamp", 0.05}, {"shirt", 0.1}}},
      {"water", {{"hose", 0.95}, {"boots", 0.9}, {"paint", 0.05}, {"gum", 0.1}}},
      {"auto", {{"cover", 0.95}, {"charger", 0.9}, {"light", 0.05}, {"phone", 0.1}}},
      {"travel", {{"kit", 0.95}, {"charger", 0.9}, {"suit", 0.05}, {"dinnerware", 0.1}}},
      {"seat", {{"cover", 0.95}, {"helmets", 0.05}}},
      {"work", {{"boots", 0.95}, {"suit", 0.9}, {"light", 0.05}, {"lamp", 0.1}}},
      {"portable", {{"charger", 0.95}, {"lamp", 0.9}, {"light", 0.05}, {"phone", 0.1}}},
      {"mint", {{"gum", 0.95}, {"paint", 0.05}, {"cover", 0.1}}},
  };

  s.noise_retention = {{"promo", 0.05}, {"code", 0.05},    {"cheap", 0.15},  {"best", 0.1},
                       {"deals", 0.1},  {"discount", 0.1}, {"new", 0.2},     {"online", 0.1},
                       {"timer", 0.1},  {"free", 0.05},    {"shipping", 0.05}, {"cars", 0.1},
                       {"wonder", 0.05}, {"woman", 0.1},   {"breakers", 0.1}};
  s.noise_phrases = {
      {{"promo", "code", "for"}, true}, {{"cheap"}, true},          {{"best"}, true},
      {{"deals", "on"}, true},          {{"discount"}, true},       {{"new"}, true},
      {{"cars"}, true},                 {{"with", "timer"}, false}, {{"online"}, false},
      {{"free", "shipping"}, false},    {{"wonder", "woman"}, false}, {{"breakers"}, false},
  };

  s.synonyms = {
      {"paint", "outdoor", "exterior", 0.85},
      {"cover", "auto", "car", 0.6},
      {"hose", "nozzle", "sprayer", 0.5},
      {"charger", "wireless", "qi", 0.5},
      {"shirt", "mens", "men", 0.5},
  };

  s.decoys = {
      {"promo code gift card", "gift card with promo code"},
      {"digital kitchen timer", "countdown timer"},
      {"outlet timer switch", "timer for outlets"},
      {"wonder woman action figure", "wonder woman collectible"},
      {"cars toy race track", "cars movie toy"},
      {"circuit breakers panel", "breakers for electrical panel"},
      {"best seller novel", "best book"},
      {"cheap sunglasses", "cheap shades"},
      {"deals coupon book", "deals and coupons"},
      {"free shipping label printer", "shipping labels"},
      {"online course voucher", "online learning"},
      {"discount card holder", "discount wallet"},
      {"new year banner", "new party decor"},
      {"battery pack aa", "battery 24 count"},
      {"3-piece luggage set", "3-piece travel luggage"},
      {"steel water bottle", "steel bottle"},
      {"red wagon", "red pull wagon"},
      {"night vision goggles", "night optics"},
      {"gold necklace", "gold chain jewelry"},
      {"12 pack soda", "12 cans"},
      {"electric scooter", "electric ride-on"},
      {"garden gnome", "garden decor"},
      {"water pump", "water transfer pump"},
      {"kids toy blocks", "kids building toy"},
      {"work gloves", "work safety gloves"},
      {"auto air freshener", "auto scent"},
  };
  return s;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open synth spec " + path);
  }
  try {
    SynthSpec spec = json::parse(in).get<SynthSpec>();
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed synth spec: ") + e.what());
  }
}

std::string synth_spec_json(const SynthSpec& spec) { return json(spec).dump(2); }

namespace {

enum class Role { noise, stop, modifier, brand, attribute, type };

struct Token {
  std::string term;
  Role role;
};

struct Intent {
  const ProductTypeSpec* type = nullptr;
  std::string brand;
  std::string attribute;
  std::size_t variant = 0;
};

std::string join(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) {
      out.push_back(' ');
    }
    out += t.term;
  }
  return out;
}

std::string product_id(const Intent& intent) {
  return intent.type->name + "-" + intent.brand + "-" + intent.attribute + "-v" + std::to_string(intent.variant + 1);
}

template <std::size_t N>
std::size_t pick_weighted(Rng& rng, const std::array<double, N>& weights) {
  double total = 0.0;
  for (double w : weights) {
    total += w;
  }
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < N; ++i) {
    if (u < weights[i]) {
      return i;
    }
    u -= weights[i];
  }
  return N - 1;
}

class Generator {
public:
  Generator(const SynthSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
    for (const auto& m : spec_.modifiers) {
      for (const auto& [type, p] : m.retention) {
        modifiers_by_type_[type].push_back(&m);
      }
    }
    const auto stop = StopWords::english_default();
    for (const auto& phrase : spec_.noise_phrases) {
      for (const auto& t : phrase.terms) {
        if (!stop.contains(t) && !spec_.noise_retention.contains(t)) {
          throw std::invalid_argument("synth spec: noise term '" + t + "' has no retention probability");
        }
      }
    }
  }

  SynthOutput run() {
    SynthOutput out;
    for (std::size_t s = 0; s < spec_.sessions; ++s) {
      session(s, out);
    }
    out.stats = std::move(stats_);
    out.catalog = catalog();
    return out;
  }

private:
  Intent sample_intent(const ProductTypeSpec* forced = nullptr) {
    Intent intent;
    intent.type = forced ? forced : &spec_.types[rng_.below(spec_.types.size())];
    intent.brand = rng_.pick(intent.type->brands);
    intent.attribute = rng_.pick(intent.type->attributes);
    intent.variant = rng_.below(spec_.variants);
    return intent;
  }

  std::vector<Token> compose(const Intent& intent, bool with_noise, bool allow_modifiers = true) {
    std::vector<Token> prefix;
    std::vector<Token> suffix;
    if (with_noise && rng_.bernoulli(spec_.p_noise)) {
      const auto& phrase = rng_.pick(spec_.noise_phrases);
      auto& target = phrase.prefix ? prefix : suffix;
      for (const auto& t : phrase.terms) {
        target.push_back({t, spec_.noise_retention.contains(t) ? Role::noise : Role::stop});
      }
    }
    std::vector<Token> body;
    if (allow_modifiers) {
      auto it = modifiers_by_type_.find(intent.type->name);
      if (it != modifiers_by_type_.end()) {
        auto pool = it->second;
        rng_.shuffle(pool);
        const std::size_t count = std::min(pool.size(), pick_weighted(rng_, spec_.modifier_count_weights));
        for (std::size_t i = 0; i < count; ++i) {
          body.push_back({pool[i]->term, Role::modifier});
        }
      }
    }
    std::vector<Token> descriptors;
    if (rng_.bernoulli(spec_.p_brand)) {
      descriptors.push_back({intent.brand, Role::brand});
    }
    if (rng_.bernoulli(spec_.p_attribute)) {
      descriptors.push_back({intent.attribute, Role::attribute});
    }
    if (descriptors.size() == 2 && rng_.bernoulli(0.3)) {
      std::swap(descriptors[0], descriptors[1]);
    }
    std::vector<Token> tokens = std::move(prefix);
    tokens.insert(tokens.end(), body.begin(), body.end());
    tokens.insert(tokens.end(), descriptors.begin(), descriptors.end());
    tokens.push_back({intent.type->name, Role::type});
    tokens.insert(tokens.end(), suffix.begin(), suffix.end());
    return tokens;
  }

  double retention(const Token& t, const Intent& intent) const {
    switch (t.role) {
      case Role::noise: return spec_.noise_retention.at(t.term);
      case Role::stop: return spec_.stopword_retention;
      case Role::type: return intent.type->type_retention;
      case Role::brand: return intent.type->brand_retention;
      case Role::attribute: return intent.type->attribute_retention;
      case Role::modifier:
        for (const auto* m : modifiers_by_type_.at(intent.type->name)) {
          if (m->term == t.term) {
            return m->retention.at(intent.type->name);
          }
        }
        return 0.0;
    }
    return 0.0;
  }

  const SynonymRule* synonym(const std::string& term, const Intent& intent) const {
    for (const auto& s : spec_.synonyms) {
      if (s.type == intent.type->name && s.from == term) {
        return &s;
      }
    }
    return nullptr;
  }

  /// Drops and substitutes terms of `a`; same-intent reformulations may add
  /// intent descriptors and "on sale".
  std::vector<Token> reformulate(const std::vector<Token>& a, const Intent& intent, bool additions,
                                 SynthTruth& truth) {
    std::vector<Token> b;
    std::set<std::string> retained;
    for (const auto& t : a) {
      if (additions) {
        if (const auto* syn = synonym(t.term, intent); syn && rng_.bernoulli(syn->probability)) {
          b.push_back({syn->to, t.role});
          truth.substitutions.emplace_back(t.term, syn->to);
          continue;
        }
      }
      if (rng_.bernoulli(retention(t, intent))) {
        b.push_back(t);
        retained.insert(t.term);
      }
    }
    const bool has_content = std::any_of(b.begin(), b.end(), [](const Token& t) { return t.role != Role::stop; });
    if (!has_content) {
      b.push_back({intent.type->name, Role::type});
      retained.insert(intent.type->name);
    }
    if (additions) {
      auto contains = [&b](const std::string& term) {
        return std::any_of(b.begin(), b.end(), [&](const Token& t) { return t.term == term; });
      };
      auto type_pos = [&b, &intent]() {
        auto it = std::find_if(b.begin(), b.end(), [&](const Token& t) { return t.term == intent.type->name; });
        return it;
      };
      if (!contains(intent.attribute) && rng_.bernoulli(spec_.p_add_attribute)) {
        b.insert(type_pos(), {intent.attribute, Role::attribute});
      }
      if (!contains(intent.brand) && rng_.bernoulli(spec_.p_add_brand)) {
        b.insert(b.begin(), {intent.brand, Role::brand});
      }
      if (rng_.bernoulli(spec_.p_add_sale)) {
        b.push_back({"on", Role::stop});
        b.push_back({"sale", Role::noise});
      }
    }
    for (const auto& t : a) {
      if (retained.contains(t.term)) {
        truth.retained.push_back(t.term);
        retained.erase(t.term);
      }
    }
    return b;
  }

  void record_stats(const std::string& query, bool as_initial) {
    const std::string key = normalize_query(query);
    if (stats_.find(key)) {
      return;
    }
    QueryStat stat;
    if (as_initial && rng_.bernoulli(spec_.p_rare)) {
      stat.count = 1 + rng_.below(299);
      stat.ctr = rng_.uniform(0.0, 0.049);
    } else if (as_initial) {
      // Frequent or well-clicked queries that the rarity rule must reject.
      if (rng_.bernoulli(0.5)) {
        stat.count = 300 + rng_.below(4700);
        stat.ctr = rng_.uniform(0.0, 0.3);
      } else {
        stat.count = 1 + rng_.below(299);
        stat.ctr = rng_.uniform(0.05, 0.4);
      }
    } else {
      stat.count = 10 + rng_.below(5000);
      stat.ctr = rng_.uniform(0.0, 0.6);
    }
    stats_.set(key, stat);
  }

  void emit(SynthOutput& out, const std::string& session, std::int64_t& ts, const std::string& query,
            Engagement engagement, std::optional<std::string> product) {
    SessionEvent e;
    e.session = session;
    e.timestamp = ts;
    e.query.raw = query;
    e.engagement = engagement;
    e.product = std::move(product);
    out.events.push_back(std::move(e));
    ts += 5000 + static_cast<std::int64_t>(rng_.below(55000));
  }

  std::string pick_other(const std::vector<std::string>& pool, const std::string& avoid) {
    if (pool.size() < 2) {
      return pool.front();
    }
    std::string out = avoid;
    while (out == avoid) {
      out = rng_.pick(pool);
    }
    return out;
  }

  std::string filler_query() {
    const Intent other = sample_intent();
    const std::string q = join(compose(other, false));
    record_stats(q, false);
    return q;
  }

  void session(std::size_t index, SynthOutput& out) {
    std::ostringstream id;
    id << 's';
    id.width(7);
    id.fill('0');
    id << index;
    const std::string session_id = id.str();
    std::int64_t ts = 1'500'000'000'000LL + static_cast<std::int64_t>(index) * 3'600'000LL +
                      static_cast<std::int64_t>(rng_.below(600'000));

    const auto transition = static_cast<Transition>(1 + pick_weighted(rng_, spec_.transition_weights));
    Intent intent = sample_intent();
    SynthTruth truth;
    truth.session = session_id;
    truth.transition = transition;
    truth.type = intent.type->name;

    std::vector<Token> a;
    std::vector<Token> b;
    switch (transition) {
      case Transition::general_to_specific: {
        a.push_back({intent.type->name, Role::type});
        if (rng_.bernoulli(0.5)) {
          a.insert(a.begin(), {intent.brand, Role::brand});
        }
        b = a;
        b.insert(b.end() - 1, {intent.attribute, Role::attribute});
        truth.retained.push_back(intent.type->name);
        if (a.size() == 2) {
          truth.retained.insert(truth.retained.begin(), intent.brand);
        }
        break;
      }
      case Transition::incomplete_to_complete: {
        b = compose(intent, false);
        a = b;
        auto& last = a.back().term;
        const std::size_t keep = std::max<std::size_t>(2, last.size() / 2);
        last = last.substr(0, std::min(keep, last.size() - 1 > 0 ? last.size() - 1 : last.size()));
        for (std::size_t i = 0; i + 1 < a.size(); ++i) {
          truth.retained.push_back(a[i].term);
        }
        break;
      }
      case Transition::change_of_intent: {
        a = compose(intent, rng_.bernoulli(0.5));
        Intent other = sample_intent();
        while (other.type == intent.type && spec_.types.size() > 1) {
          other = sample_intent();
        }
        b = compose(other, false);
        intent = other;
        break;
      }
      case Transition::specific_to_general:
        a = compose(intent, true);
        b = reformulate(a, intent, false, truth);
        break;
      case Transition::same_intent:
        a = compose(intent, true);
        b = reformulate(a, intent, true, truth);
        break;
    }
    truth.a = join(a);
    truth.b = join(b);

    if (rng_.bernoulli(0.3)) {
      emit(out, session_id, ts, filler_query(), Engagement::none, std::nullopt);
    }
    record_stats(truth.a, true);
    if (rng_.bernoulli(0.9)) {
      emit(out, session_id, ts, truth.a, Engagement::none, std::nullopt);
    } else {
      emit(out, session_id, ts, truth.a, Engagement::click, product_id(sample_intent(intent.type)));
    }
    const std::size_t gap = pick_weighted(rng_, spec_.intermediate_weights);
    for (std::size_t i = 0; i < gap; ++i) {
      emit(out, session_id, ts, filler_query(), Engagement::none, std::nullopt);
    }
    record_stats(truth.b, false);
    // A descriptor missing from b was abandoned: the purchase has another.
    Intent bought = intent;
    auto in_b = [&b](const std::string& term) {
      return std::any_of(b.begin(), b.end(), [&](const Token& t) { return t.term == term; });
    };
    if (!in_b(intent.brand)) {
      bought.brand = pick_other(intent.type->brands, intent.brand);
    }
    if (!in_b(intent.attribute)) {
      bought.attribute = pick_other(intent.type->attributes, intent.attribute);
    }
    const std::string product = product_id(bought);
    if (rng_.bernoulli(spec_.p_atc)) {
      if (rng_.bernoulli(0.3)) {
        emit(out, session_id, ts, truth.b, Engagement::click, product);
      }
      emit(out, session_id, ts, truth.b, Engagement::atc, product);
      truth.product = product;
    } else if (rng_.bernoulli(0.5)) {
      emit(out, session_id, ts, truth.b, Engagement::click, product);
    } else {
      emit(out, session_id, ts, truth.b, Engagement::none, std::nullopt);
    }
    if (rng_.bernoulli(0.2)) {
      emit(out, session_id, ts, filler_query(), Engagement::none, std::nullopt);
    }
    out.truth.push_back(std::move(truth));
  }

  std::vector<CatalogDocument> catalog() const {
    std::vector<CatalogDocument> docs;
    for (const auto& type : spec_.types) {
      std::vector<std::string> extras = type.description_terms;
      if (auto it = modifiers_by_type_.find(type.name); it != modifiers_by_type_.end()) {
        for (const auto* m : it->second) {
          if (m->retention.at(type.name) >= 0.5) {
            extras.push_back(m->term);
          }
        }
      }
      std::string synonym_terms;
      for (const auto& s : spec_.synonyms) {
        if (s.type == type.name) {
          synonym_terms += " " + s.to;
        }
      }
      for (const auto& brand : type.brands) {
        for (const auto& attr : type.attributes) {
          for (std::size_t v = 0; v < spec_.variants; ++v) {
            Intent intent{&type, brand, attr, v};
            CatalogDocument d;
            d.product = product_id(intent);
            d.title = brand + synonym_terms + " " + attr + " " + type.name;
            std::string desc = type.name + " by " + brand + " " + attr;
            for (const auto& e : extras) {
              desc += " " + e;
            }
            desc += " model v" + std::to_string(v + 1);
            d.description = std::move(desc);
            docs.push_back(std::move(d));
          }
        }
      }
    }
    for (std::size_t i = 0; i < spec_.decoys.size(); ++i) {
      docs.push_back({"decoy-" + std::to_string(i + 1), spec_.decoys[i].title, spec_.decoys[i].description});
    }
    return docs;
  }

  const SynthSpec& spec_;
  Rng rng_;
  QueryStats stats_;
  std::map<std::string, std::vector<const ContextRule*>> modifiers_by_type_;
};

}  // namespace

SynthOutput synthesize_sessions(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Generator gen(spec, seed);
  SynthOutput out = gen.run();
  for (auto& e : out.events) {
    e.query = tokenize(e.query.raw, VocabMode::build, out.vocab);
  }
  return out;
}

void write_truth(std::ostream& out, const std::vector<SynthTruth>& truth) {
  for (const auto& t : truth) {
    json j;
    j["session"] = t.session;
    j["transition"] = std::string(to_string(t.transition));
    j["type"] = t.type;
    j["a"] = t.a;
    j["b"] = t.b;
    j["retained"] = t.retained;
    json subs = json::array();
    for (const auto& [from, to] : t.substitutions) {
      subs.push_back({{"from", from}, {"to", to}});
    }
    j["substitutions"] = std::move(subs);
    if (t.product) {
      j["product"] = *t.product;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace qintent
