#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "qintent/baselines.hpp"
#include "qintent/bm25f.hpp"
#include "qintent/config.hpp"
#include "qintent/cqr.hpp"
#include "qintent/ctw.hpp"
#include "qintent/errors.hpp"
#include "qintent/eval.hpp"
#include "qintent/gradcheck_suite.hpp"
#include "qintent/metrics.hpp"
#include "qintent/model_io.hpp"
#include "qintent/pipeline.hpp"
#include "qintent/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qintent;

namespace {

enum ExitCode : int {
  kOk = 0,
  kRuntime = 1,
  kUsage = 2,
  kSchema = 3,
  kVersion = 4,
  kNotSignificant = 5,
  kGradcheckFailed = 6,
};

struct SignificanceFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GradcheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Files touched by the running command, for the manifest.
struct Audit {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
};

Audit audit;

const std::string& input(const std::string& path) {
  audit.inputs.push_back(path);
  return path;
}

const std::string& output(const std::string& path) {
  audit.outputs.push_back(path);
  return path;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return "";
  }
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

void append_manifest(const std::string& path, const std::vector<std::string>& argv, int code) {
  auto files = [](const std::vector<std::string>& paths) {
    json out = json::array();
    for (const auto& p : paths) {
      out.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    }
    return out;
  };
  json record = {{"argv", argv},
                 {"seed", audit.seed ? json(*audit.seed) : json(nullptr)},
                 {"inputs", files(audit.inputs)},
                 {"outputs", files(audit.outputs)},
                 {"exit_code", code}};
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw IoError("cannot append to manifest " + path);
  }
  out << record.dump() << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(output(path), std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  out << text;
}

template <typename Fn>
void write_stream(const std::string& path, Fn&& fn) {
  std::ofstream out(output(path), std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  fn(out);
}

// --- models -----------------------------------------------------------------

using AnyModel = std::variant<CtwModel, CqrModel, FtwModel, FqrModel, TfidfModel, VpcgModel>;

struct LoadedModel {
  std::string type;
  AnyModel model;
};

LoadedModel load_model(const std::string& path) {
  const json j = read_json_file(input(path));
  if (!j.is_object() || !j.contains("model_type") || !j.at("model_type").is_string()) {
    throw SchemaError(path + ": missing model_type");
  }
  const auto type = j.at("model_type").get<std::string>();
  if (type == "ctw") return {type, ctw_from_json(j)};
  if (type == "cqr") return {type, cqr_from_json(j)};
  if (type == "ftw") return {type, ftw_from_json(j)};
  if (type == "fqr") return {type, fqr_from_json(j)};
  if (type == "tfidf") return {type, tfidf_from_json(j)};
  if (type == "vpcg") return {type, vpcg_from_json(j)};
  throw SchemaError(path + ": unknown model_type '" + type + "'");
}

WeightFn weights_of(const LoadedModel& m) {
  return std::visit(
      [&m](const auto& model) -> WeightFn {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, CqrModel> || std::is_same_v<T, FqrModel>) {
          throw SchemaError("a " + m.type + " model does not produce term weights");
        } else {
          return weight_fn(model);
        }
      },
      m.model);
}

RefineFn refinements_of(const LoadedModel& m) {
  return std::visit(
      [&m](const auto& model) -> RefineFn {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, CqrModel> || std::is_same_v<T, FqrModel>) {
          return refine_fn(model);
        } else {
          throw SchemaError("a " + m.type + " model does not produce refinement terms");
        }
      },
      m.model);
}

std::vector<ReformulationPair> load_raw_pairs(const std::string& path) {
  Vocabulary scratch;
  return load_pairs(input(path), VocabMode::build, scratch);
}

std::string unique_name(const std::string& base, const EvalReport& report) {
  std::size_t n = 1;
  for (const auto& m : report.models) {
    if (m.model == base || m.model.starts_with(base + "#")) {
      ++n;
    }
  }
  return n == 1 ? base : base + "#" + std::to_string(n);
}

void emit_report(EvalReport& report, const std::string& json_path, std::optional<double> alpha) {
  if (alpha) {
    add_significance_tests(report, *alpha);
  }
  std::cout << report.table();
  if (!json_path.empty()) {
    write_text(json_path, report.to_json().dump(2) + "\n");
  }
  if (alpha) {
    for (const auto& t : report.tests) {
      if (!t.passed()) {
        throw SignificanceFailure("not significant at " + std::to_string(*alpha) + ": " + t.name);
      }
    }
  }
}

void print_weights(const std::vector<std::string>& terms, std::vector<double> weights, bool normalize) {
  if (normalize) {
    weights = normalize_for_display(weights);
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    std::printf("%s\t%.6f\n", terms[i].c_str(), weights[i]);
  }
}

// --- commands ---------------------------------------------------------------

struct Options {
  std::string out_dir, out, spec, sessions, stats, filters, pairs, train, validation, config, preset = "full";
  std::string embeddings, model, query, catalog, index, json_out;
  std::vector<std::string> models;
  std::uint64_t seed = 1;
  std::size_t session_count = 0;
  std::size_t epochs = 0, batch_size = 0, k = 10, depth = 100, seeds = 5, samples = 200;
  double learning_rate = 0.0, alpha = 0.05;
  double train_fraction = 0.8, test_fraction = 0.15, validation_fraction = 0.05;
  bool normalize = false, skip_stopwords = false, oracle = false, quiet = false;
  std::size_t vpcg_dim = 50, vpcg_iterations = 50, vpcg_sgd_epochs = 200;
  double epsilon = 1e-5, tolerance = 1e-4;
  Bm25fParams bm25f;
};

void run_synth(Options& o, CLI::App& cmd) {
  SynthSpec spec = o.spec.empty() ? default_synth_spec() : load_synth_spec(input(o.spec));
  if (cmd.count("--sessions") > 0) {
    spec.sessions = o.session_count;
    spec.validate();
  }
  audit.seed = o.seed;
  const auto out = synthesize_sessions(spec, o.seed);
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_stream((dir / "sessions.jsonl").string(), [&](std::ostream& s) {
    for (const auto& e : out.events) {
      write_session_event(s, e);
    }
  });
  write_stream((dir / "query_stats.jsonl").string(), [&](std::ostream& s) { write_query_stats(s, out.stats); });
  write_stream((dir / "catalog.jsonl").string(), [&](std::ostream& s) { write_catalog(s, out.catalog); });
  write_stream((dir / "truth.jsonl").string(), [&](std::ostream& s) { write_truth(s, out.truth); });
  std::cerr << "sessions " << spec.sessions << ", events " << out.events.size() << ", products "
            << out.catalog.size() << '\n';
}

void run_extract(Options& o) {
  Vocabulary vocab;
  const auto log = read_session_log(input(o.sessions), vocab);
  const QueryStats stats = o.stats.empty() ? QueryStats::from_events(log.events) : read_query_stats(input(o.stats));
  const FilterConfig filters = o.filters.empty() ? FilterConfig{} : load_filter_config(input(o.filters));
  ExtractionStats report;
  const auto pairs = extract_pairs(log.events, stats, filters, vocab, &report);
  write_stream(o.out, [&](std::ostream& s) { write_pairs(s, pairs); });
  std::cerr << "sessions " << report.sessions << ", searches " << report.searches << ", candidates "
            << report.candidates << ", pairs " << report.emitted << ", malformed lines " << log.malformed << '\n';
}

void run_split(Options& o) {
  audit.seed = o.seed;
  const auto pairs = load_raw_pairs(o.pairs);
  const auto split = split_dataset(pairs, o.seed, {o.train_fraction, o.test_fraction, o.validation_fraction});
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_stream((dir / "train.jsonl").string(), [&](std::ostream& s) { write_pairs(s, split.train); });
  write_stream((dir / "test.jsonl").string(), [&](std::ostream& s) { write_pairs(s, split.test); });
  write_stream((dir / "validation.jsonl").string(), [&](std::ostream& s) { write_pairs(s, split.validation); });
  std::cerr << "train " << split.train.size() << ", test " << split.test.size() << ", validation "
            << split.validation.size() << '\n';
}

RunConfig resolve_config(const Options& o, CLI::App& cmd) {
  RunConfig cfg = preset_config(o.preset);
  if (!o.config.empty()) {
    json j = read_json_file(input(o.config));
    if (!j.contains("preset")) {
      j["preset"] = o.preset;
    }
    cfg = run_config_from_json(j);
  }
  if (cmd.count("--seed") > 0 || std::getenv("QINTENT_SEED")) {
    cfg.seed = o.seed;
  }
  if (o.epochs > 0) cfg.epochs = o.epochs;
  if (o.batch_size > 0) cfg.batch_size = o.batch_size;
  if (o.learning_rate > 0.0) cfg.learning_rate = o.learning_rate;
  if (!o.embeddings.empty()) cfg.embeddings = input(o.embeddings);
  cfg.validate();
  return cfg;
}

void run_train(const std::string& kind, Options& o, CLI::App& cmd) {
  const RunConfig cfg = resolve_config(o, cmd);
  audit.seed = cfg.seed;
  std::vector<ReformulationPair> train;
  Vocabulary vocab = training_vocabulary(load_raw_pairs(o.train), &train);
  std::vector<ReformulationPair> validation;
  if (!o.validation.empty()) {
    validation = load_pairs(input(o.validation), VocabMode::frozen, vocab);
  }
  ProgressFn progress;
  if (!o.quiet) {
    progress = [](std::size_t epoch, double loss, double val) {
      std::cerr << "epoch " << epoch << "  loss " << loss << "  validation AP@nnz " << val << '\n';
    };
  }
  const auto stop = StopWords::english_default();
  json j;
  if (kind == "ctw") {
    j = ctw_to_json(train_ctw(train, validation, vocab, stop, cfg, progress));
  } else {
    j = cqr_to_json(train_cqr(train, validation, vocab, stop, cfg, progress));
  }
  write_json_file(output(o.out), j);
}

void run_fit(const std::string& kind, Options& o) {
  const auto train = load_raw_pairs(o.train);
  json j;
  if (kind == "ftw") {
    j = ftw_to_json(ftw_fit(train));
  } else if (kind == "fqr") {
    j = fqr_to_json(fqr_fit(train));
  } else if (kind == "tfidf") {
    j = tfidf_to_json(tfidf_fit(train));
  } else {
    audit.seed = o.seed;
    VpcgConfig cfg;
    cfg.dim = o.vpcg_dim;
    cfg.iterations = o.vpcg_iterations;
    cfg.sgd_epochs = o.vpcg_sgd_epochs;
    cfg.seed = o.seed;
    if (o.learning_rate > 0.0) {
      cfg.learning_rate = o.learning_rate;
    }
    std::size_t dropped = 0;
    const auto model = vpcg_fit(click_graph(train), cfg, &dropped);
    if (dropped > 0) {
      std::cerr << "warning: dropped " << dropped << " unusable click-graph edges\n";
    }
    j = vpcg_to_json(model);
  }
  write_json_file(output(o.out), j);
}

void run_weigh(Options& o) {
  const auto m = load_model(o.model);
  const auto terms = tokenize_text(o.query);
  if (terms.empty()) {
    throw EmptyQuery("query has no terms");
  }
  ReformulationPair pair;
  pair.q.raw = o.query;
  print_weights(terms, weights_of(m)(pair), o.normalize);
}

void run_refine(Options& o) {
  const auto m = load_model(o.model);
  if (const auto* cqr = std::get_if<CqrModel>(&m.model)) {
    for (const auto& s : cqr->refine(o.query, o.k, o.skip_stopwords)) {
      std::printf("%s\t%.6f\n", s.term.c_str(), s.score);
    }
    return;
  }
  if (const auto* fqr = std::get_if<FqrModel>(&m.model)) {
    const auto terms = tokenize_text(o.query);
    if (terms.empty()) {
      throw EmptyQuery("query has no terms");
    }
    const auto stop = StopWords::english_default();
    std::size_t shown = 0;
    for (const auto& s : fqr->scores(terms)) {
      if (shown == o.k) {
        break;
      }
      if (o.skip_stopwords && stop.contains(s.term)) {
        continue;
      }
      std::printf("%s\t%.6f\n", s.term.c_str(), s.score);
      ++shown;
    }
    return;
  }
  throw SchemaError("refine needs a cqr or fqr model, got " + m.type);
}

void run_index(Options& o) {
  const auto docs = read_catalog(input(o.catalog));
  const auto index = Bm25fIndex::build(docs, o.bm25f);
  write_json_file(output(o.out), index.to_json());
  std::cerr << "indexed " << index.document_count() << " products\n";
}

void run_rank(Options& o) {
  const auto index = Bm25fIndex::from_json(read_json_file(input(o.index)));
  const auto terms = tokenize_text(o.query);
  if (terms.empty()) {
    throw EmptyQuery("query has no terms");
  }
  std::optional<std::vector<double>> weights;
  if (!o.model.empty()) {
    ReformulationPair pair;
    pair.q.raw = o.query;
    weights = weights_of(load_model(o.model))(pair);
  }
  const auto ranked = weights ? rank(terms, index, std::span<const double>(*weights), o.k)
                              : rank(terms, index, std::nullopt, o.k);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    std::printf("%zu\t%s\t%.6f\n", i + 1, ranked[i].product.c_str(), ranked[i].score);
  }
}

void run_eval(const std::string& task, Options& o, CLI::App& cmd) {
  const auto pairs = load_raw_pairs(o.pairs);
  const auto stop = StopWords::english_default();
  std::optional<double> alpha;
  if (cmd.count("--significance") > 0) {
    alpha = o.alpha;
  }
  EvalReport report;
  report.task = task;
  if (o.models.empty() && !o.oracle) {
    throw CLI::ValidationError("eval", "at least one --model (or --oracle) is required");
  }
  std::vector<LoadedModel> models;
  for (const auto& path : o.models) {
    models.push_back(load_model(path));
  }
  if (task == "weighting") {
    for (const auto& m : models) {
      report.models.push_back(evaluate_weighting(pairs, weights_of(m), stop, unique_name(m.type, report)));
    }
    if (o.oracle) {
      report.models.push_back(evaluate_weighting(pairs, oracle_weights, stop, "oracle"));
    }
  } else if (task == "refinement") {
    if (o.oracle) {
      throw CLI::ValidationError("--oracle", "only weighting and ranking have an oracle");
    }
    for (const auto& m : models) {
      report.models.push_back(evaluate_refinement(pairs, refinements_of(m), stop, unique_name(m.type, report)));
    }
  } else {
    const auto index = Bm25fIndex::from_json(read_json_file(input(o.index)));
    for (const auto& m : models) {
      report.models.push_back(evaluate_ranking(pairs, index, weights_of(m), unique_name(m.type, report), o.depth));
    }
    if (o.oracle) {
      report.models.push_back(evaluate_ranking(pairs, index, oracle_weights, "oracle", o.depth));
    }
  }
  emit_report(report, o.json_out, alpha);
}

void run_gradcheck(Options& o) {
  audit.seed = o.seed;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < o.seeds; ++i) {
    seeds.push_back(o.seed + i);
  }
  GradCheckOptions opts;
  opts.epsilon = o.epsilon;
  opts.tolerance = o.tolerance;
  opts.samples_per_class = o.samples;
  const auto cases = run_gradcheck_suite(seeds, opts);
  json out = json::array();
  bool ok = true;
  std::printf("%-6s %-5s %-6s %-9s %-12s %s\n", "seed", "|V|", "layers", "group", "coordinates", "max_rel_error");
  for (const auto& c : cases) {
    json groups = json::array();
    for (const auto& g : c.groups) {
      std::printf("%-6llu %-5zu %-6zu %-9s %-12zu %.3e\n", static_cast<unsigned long long>(c.seed), c.vocab_size,
                  c.layers, g.name.c_str(), g.coordinates, g.max_relative_error);
      groups.push_back({{"group", g.name}, {"coordinates", g.coordinates}, {"max_relative_error", g.max_relative_error}});
    }
    ok = ok && c.passed();
    out.push_back({{"seed", c.seed}, {"vocab_size", c.vocab_size}, {"layers", c.layers}, {"groups", groups},
                   {"passed", c.passed()}});
  }
  std::printf("%s (tolerance %.1e, epsilon %.1e)\n", ok ? "PASS" : "FAIL", o.tolerance, o.epsilon);
  if (!o.json_out.empty()) {
    write_text(o.json_out, json{{"cases", out}, {"passed", ok}}.dump(2) + "\n");
  }
  if (!ok) {
    throw GradcheckFailure("gradient check exceeded tolerance");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual query term weighting and refinement"};
  app.require_subcommand(1);
  std::string manifest;
  app.add_option("--manifest", manifest, "Append a JSON line with argv, seed and file digests to this file");
  Options o;

  auto seed_option = [&o](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "Random seed")->envname("QINTENT_SEED")->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic session log, query stats, catalog and truth");
  synth->add_option("--out-dir", o.out_dir, "Output directory")->required();
  synth->add_option("--spec", o.spec, "Synthesis spec JSON (default: built-in)");
  synth->add_option("--sessions", o.session_count, "Override the number of sessions");
  seed_option(synth);

  auto* extract = app.add_subcommand("extract", "Mine reformulation pairs from a session log");
  extract->add_option("--sessions", o.sessions, "Session log JSONL")->required();
  extract->add_option("--stats", o.stats, "Query stats JSONL (default: computed from the log)");
  extract->add_option("--filters", o.filters, "Filter config (key = value lines)");
  extract->add_option("--out", o.out, "Output pairs JSONL")->required();

  auto* split = app.add_subcommand("split", "Shuffle and split pairs into train, test and validation");
  split->add_option("--pairs", o.pairs, "Pairs JSONL")->required();
  split->add_option("--out-dir", o.out_dir, "Output directory")->required();
  split->add_option("--train-fraction", o.train_fraction)->capture_default_str();
  split->add_option("--test-fraction", o.test_fraction)->capture_default_str();
  split->add_option("--validation-fraction", o.validation_fraction)->capture_default_str();
  seed_option(split);

  auto* train = app.add_subcommand("train", "Train a neural model");
  train->require_subcommand(1);
  for (const char* kind : {"ctw", "cqr"}) {
    auto* t = train->add_subcommand(kind, std::string("Train ") + kind);
    t->add_option("--train", o.train, "Training pairs JSONL")->required();
    t->add_option("--validation", o.validation, "Validation pairs JSONL (best epoch selection)");
    t->add_option("--preset", o.preset, "full or desk")->capture_default_str();
    t->add_option("--config", o.config, "RunConfig JSON; missing keys come from the preset");
    t->add_option("--epochs", o.epochs, "Override epochs");
    t->add_option("--batch-size", o.batch_size, "Override batch size");
    t->add_option("--learning-rate", o.learning_rate, "Override learning rate");
    t->add_option("--embeddings", o.embeddings, "Pre-trained embeddings text file");
    t->add_option("--out", o.out, "Model JSON")->required();
    t->add_flag("--quiet", o.quiet, "No per-epoch progress");
    seed_option(t);
  }

  auto* fit = app.add_subcommand("fit", "Fit a baseline model");
  fit->require_subcommand(1);
  for (const char* kind : {"ftw", "fqr", "tfidf", "vpcg"}) {
    auto* f = fit->add_subcommand(kind, std::string("Fit ") + kind);
    f->add_option("--train", o.train, "Training pairs JSONL")->required();
    f->add_option("--out", o.out, "Model JSON")->required();
    if (std::string(kind) == "vpcg") {
      f->add_option("--dim", o.vpcg_dim, "Vector dimension")->capture_default_str();
      f->add_option("--iterations", o.vpcg_iterations, "Maximum propagation sweeps")->capture_default_str();
      f->add_option("--sgd-epochs", o.vpcg_sgd_epochs, "Epochs of n-gram weight regression")->capture_default_str();
      f->add_option("--learning-rate", o.learning_rate, "SGD learning rate (default 0.001)");
      seed_option(f);
    }
  }

  auto* weigh = app.add_subcommand("weigh", "Print one weight per query term");
  weigh->add_option("--model", o.model, "ctw, ftw, tfidf or vpcg model JSON")->required();
  weigh->add_option("--query", o.query, "Query text")->required();
  weigh->add_flag("--normalize", o.normalize, "Scale so the largest weight is 1");

  auto* refine = app.add_subcommand("refine", "Print the top refinement terms");
  refine->add_option("--model", o.model, "cqr or fqr model JSON")->required();
  refine->add_option("--query", o.query, "Query text")->required();
  refine->add_option("--k", o.k, "Number of terms")->capture_default_str();
  refine->add_flag("--skip-stopwords", o.skip_stopwords, "Hide stop words");

  auto* index = app.add_subcommand("index", "Build a BM25F index from a catalog");
  index->add_option("--catalog", o.catalog, "Catalog JSONL")->required();
  index->add_option("--out", o.out, "Index JSON")->required();
  index->add_option("--k1", o.bm25f.k1)->capture_default_str();
  index->add_option("--title-weight", o.bm25f.fields[0].weight)->capture_default_str();
  index->add_option("--description-weight", o.bm25f.fields[1].weight)->capture_default_str();
  index->add_option("--title-b", o.bm25f.fields[0].b)->capture_default_str();
  index->add_option("--description-b", o.bm25f.fields[1].b)->capture_default_str();

  auto* rank_cmd = app.add_subcommand("rank", "Rank products for a query");
  rank_cmd->add_option("--index", o.index, "Index JSON")->required();
  rank_cmd->add_option("--query", o.query, "Query text")->required();
  rank_cmd->add_option("--model", o.model, "Boost with this model's term weights");
  rank_cmd->add_option("--k", o.k, "Number of products")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Evaluate models and print an EvalReport");
  eval->require_subcommand(1);
  for (const char* task : {"weighting", "refinement", "ranking"}) {
    auto* e = eval->add_subcommand(task, std::string("Evaluate ") + task);
    e->add_option("--model", o.models, "Model JSON (repeatable; t-tests compare against the first)");
    e->add_option("--pairs", o.pairs, "Evaluation pairs JSONL")->required();
    e->add_option("--json", o.json_out, "Also write the report as JSON");
    e->add_option("--significance", o.alpha, "Run paired t-tests; exit 5 unless every p < ALPHA");
    if (std::string(task) != "refinement") {
      e->add_flag("--oracle", o.oracle, "Add ground-truth retention labels as a model");
    }
    if (std::string(task) == "ranking") {
      e->add_option("--index", o.index, "Index JSON")->required();
      e->add_option("--depth", o.depth, "Ranking depth")->capture_default_str();
    }
  }

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of CTW and CQR gradients");
  grad->add_option("--seeds", o.seeds, "Number of random configurations")->capture_default_str();
  grad->add_option("--samples", o.samples, "Coordinates per tensor class")->capture_default_str();
  grad->add_option("--epsilon", o.epsilon)->capture_default_str();
  grad->add_option("--tolerance", o.tolerance)->capture_default_str();
  grad->add_option("--json", o.json_out, "Also write the results as JSON");
  seed_option(grad);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  int code = kOk;
  try {
    if (synth->parsed()) {
      run_synth(o, *synth);
    } else if (extract->parsed()) {
      run_extract(o);
    } else if (split->parsed()) {
      run_split(o);
    } else if (train->parsed()) {
      auto* sub = train->get_subcommands().front();
      run_train(sub->get_name(), o, *sub);
    } else if (fit->parsed()) {
      run_fit(fit->get_subcommands().front()->get_name(), o);
    } else if (weigh->parsed()) {
      run_weigh(o);
    } else if (refine->parsed()) {
      run_refine(o);
    } else if (index->parsed()) {
      run_index(o);
    } else if (rank_cmd->parsed()) {
      run_rank(o);
    } else if (eval->parsed()) {
      auto* sub = eval->get_subcommands().front();
      run_eval(sub->get_name(), o, *sub);
    } else if (grad->parsed()) {
      run_gradcheck(o);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kUsage;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    code = kSchema;
  } catch (const VersionMismatch& e) {
    std::cerr << "version mismatch: " << e.what() << '\n';
    code = kVersion;
  } catch (const SignificanceFailure& e) {
    std::cerr << e.what() << '\n';
    code = kNotSignificant;
  } catch (const GradcheckFailure& e) {
    std::cerr << e.what() << '\n';
    code = kGradcheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kRuntime;
  }

  if (!manifest.empty()) {
    try {
      append_manifest(manifest, std::vector<std::string>(argv, argv + argc), code);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return code == kOk ? kRuntime : code;
    }
  }
  return code;
}
