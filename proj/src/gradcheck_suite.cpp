#include "qintent/gradcheck_suite.hpp"

#include <algorithm>
#include <set>

#include "qintent/config.hpp"
#include "qintent/cqr.hpp"
#include "qintent/ctw.hpp"
#include "qintent/extended_loss.hpp"
#include "qintent/params.hpp"

namespace qintent {

namespace {

constexpr std::uint64_t kMaskSeed = 0x6d61736bULL;

Query random_query(std::size_t vocab_size, Rng& rng) {
  Query q;
  const std::size_t n = 1 + rng.below(6);
  for (std::size_t i = 0; i < n; ++i) {
    // Id 0 (UNK) is a legal input term.
    q.terms.push_back(static_cast<TermId>(rng.below(vocab_size)));
  }
  return q;
}

// embedding, GRU input / recurrent / bias matrices, and each head tensor.
std::string tensor_class(const std::string& name) {
  const auto leaf = name.substr(name.rfind('.') + 1);
  if (name.starts_with("encoder.") && leaf != "embedding") {
    return "encoder.gru." + leaf.substr(0, 1);
  }
  return name;
}

void fold_groups(const GradCheckReport& report, const std::string& head_name, std::vector<GradCheckGroup>& groups) {
  for (const auto& t : report.tensors) {
    const std::string name = t.name.starts_with("encoder.") ? "encoder" : head_name;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const GradCheckGroup& g) { return g.name == name; });
    if (it == groups.end()) {
      groups.push_back({name});
      it = std::prev(groups.end());
    }
    it->coordinates += t.coordinates;
    it->max_relative_error = std::max(it->max_relative_error, t.max_relative_error);
  }
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(const std::vector<std::uint64_t>& seeds,
                                               const GradCheckOptions& options) {
  std::vector<GradCheckCase> out;
  for (auto seed : seeds) {
    Rng rng(seed);
    GradCheckOptions opts = options;
    if (!opts.tensor_class) {
      opts.tensor_class = tensor_class;
    }
    GradCheckCase c;
    c.seed = seed;
    c.vocab_size = 20 + rng.below(41);
    c.layers = 1 + rng.below(2);
    RunConfig cfg = preset_config("desk");
    cfg.layers = c.layers;
    cfg.seed = seed;

    std::vector<TermWeightExample> ctw_batch;
    std::vector<RefinementExample> cqr_batch;
    for (int i = 0; i < 3; ++i) {
      TermWeightExample w;
      w.q = random_query(c.vocab_size, rng);
      for (std::size_t t = 0; t < w.q.size(); ++t) {
        w.labels.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
      }
      ctw_batch.push_back(std::move(w));
      RefinementExample r;
      r.q = random_query(c.vocab_size, rng);
      std::set<TermId> positives;
      const std::size_t k = 1 + rng.below(3);
      while (positives.size() < k) {
        positives.insert(static_cast<TermId>(1 + rng.below(c.vocab_size - 1)));
      }
      r.positives.assign(positives.begin(), positives.end());
      cqr_batch.push_back(std::move(r));
    }

    {
      CtwParams params = init_ctw_params(c.vocab_size, cfg, rng);
      CtwParams grads = zeros_like(params);
      Rng masks(kMaskSeed);
      ctw_loss(ctw_batch, params, Mode::train, masks, &grads);
      auto loss = [&] {
        Rng m(kMaskSeed);
        std::vector<long double> terms;
        ctw_loss_extended(ctw_batch, params, Mode::train, m, &terms);
        return terms;
      };
      c.ctw = finite_diff_check(std::function<std::vector<long double>()>(loss), collect_params(params),
                                collect_params(grads), rng, opts);
      fold_groups(c.ctw, "ctw_head", c.groups);
    }
    {
      CqrParams params = init_cqr_params(c.vocab_size, cfg, rng);
      CqrParams grads = zeros_like(params);
      Rng masks(kMaskSeed);
      cqr_loss(cqr_batch, params, Mode::train, masks, &grads);
      auto loss = [&] {
        Rng m(kMaskSeed);
        std::vector<long double> terms;
        cqr_loss_extended(cqr_batch, params, Mode::train, m, &terms);
        return terms;
      };
      c.cqr = finite_diff_check(std::function<std::vector<long double>()>(loss), collect_params(params),
                                collect_params(grads), rng, opts);
      fold_groups(c.cqr, "cqr_head", c.groups);
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace qintent
