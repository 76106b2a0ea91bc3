#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qintent/bm25f.hpp"
#include "qintent/corpus.hpp"

namespace qintent {

/// One product type: the head noun of a query plus the brand and attribute
/// pools a searcher draws from when expressing an intent for it.
struct ProductTypeSpec {
  std::string name;
  std::vector<std::string> brands;
  std::vector<std::string> attributes;
  std::vector<std::string> description_terms;
  double type_retention = 0.95;
  double brand_retention = 0.55;
  double attribute_retention = 0.5;
};

/// A modifier whose retention probability depends on the product type it
/// appears with. The modifier is only generated alongside listed types.
struct ContextRule {
  std::string term;
  std::map<std::string, double> retention;
};

/// In reformulations of queries for `type`, `from` is replaced by `to` with
/// `probability`.
struct SynonymRule {
  std::string type;
  std::string from;
  std::string to;
  double probability = 0.85;
};

struct NoisePhrase {
  std::vector<std::string> terms;
  bool prefix = true;
};

struct CatalogDecoy {
  std::string title;
  std::string description;
};

/// The five observed transition kinds between consecutive searches.
enum class Transition {
  general_to_specific = 1,
  incomplete_to_complete = 2,
  change_of_intent = 3,
  specific_to_general = 4,
  same_intent = 5,
};

std::string_view to_string(Transition t);

struct SynthSpec {
  std::vector<ProductTypeSpec> types;
  std::vector<ContextRule> modifiers;
  std::map<std::string, double> noise_retention;
  std::vector<NoisePhrase> noise_phrases;
  std::vector<SynonymRule> synonyms;
  std::vector<CatalogDecoy> decoys;
  double stopword_retention = 0.3;

  std::size_t sessions = 21000;
  /// Weights of transitions 1..5, in enum order.
  std::array<double, 5> transition_weights{0.08, 0.07, 0.08, 0.17, 0.60};
  double p_brand = 0.65;
  double p_attribute = 0.5;
  std::array<double, 3> modifier_count_weights{0.1, 0.5, 0.4};
  double p_noise = 0.6;
  double p_add_sale = 0.2;
  double p_add_attribute = 0.35;
  double p_add_brand = 0.2;
  double p_rare = 0.92;
  /// Probability of 0, 1, 2 and 3 unrelated searches between a and b.
  std::array<double, 4> intermediate_weights{0.55, 0.25, 0.12, 0.08};
  double p_atc = 0.88;
  std::size_t variants = 2;

  /// Rejects specs with empty pools or probabilities outside [0, 1].
  void validate() const;
};

/// The default planted-structure spec: fifteen product types, context
/// dependent modifiers, noise phrases with low retention, type specific
/// synonyms and catalog decoys carrying the noise vocabulary.
SynthSpec default_synth_spec();

SynthSpec load_synth_spec(const std::string& path);
std::string synth_spec_json(const SynthSpec& spec);

/// Ground truth for one generated (a, b) transition.
struct SynthTruth {
  std::string session;
  Transition transition = Transition::same_intent;
  std::string type;
  std::string a;
  std::string b;
  std::vector<std::string> retained;
  std::vector<std::pair<std::string, std::string>> substitutions;
  std::optional<std::string> product;
};

struct SynthOutput {
  std::vector<SessionEvent> events;
  /// Vocabulary the events were tokenized with, counting every occurrence.
  Vocabulary vocab;
  QueryStats stats;
  std::vector<SynthTruth> truth;
  std::vector<CatalogDocument> catalog;
};

/// Generates `spec.sessions` sessions. Identical (spec, seed) yield
/// identical output.
SynthOutput synthesize_sessions(const SynthSpec& spec, std::uint64_t seed);

void write_truth(std::ostream& out, const std::vector<SynthTruth>& truth);

}  // namespace qintent
