#include "qintent/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace qintent {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

namespace {

std::vector<std::size_t> sample_coordinates(std::size_t size, std::size_t budget, Rng& rng) {
  std::vector<std::size_t> coords(size);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (coords.size() > budget) {
    // Partial Fisher-Yates: the first `budget` entries are a uniform sample
    // without replacement.
    for (std::size_t i = 0; i < budget; ++i) {
      std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
    }
    coords.resize(budget);
  }
  return coords;
}

}  // namespace

GradCheckReport finite_diff_check(const std::function<std::vector<long double>()>& loss_terms,
                                  const ParamList& params, const ParamList& grads, Rng& rng,
                                  GradCheckOptions options) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("finite_diff_check: parameter and gradient lists differ in length");
  }
  std::vector<std::string> classes;
  std::map<std::string, std::size_t> class_sizes;
  for (const auto& p : params) {
    classes.push_back(options.tensor_class ? options.tensor_class(p.name) : p.name);
    ++class_sizes[classes.back()];
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p].tensor;
    const Tensor& grad = *grads[p].tensor;
    if (theta.shape() != grad.shape()) {
      throw std::invalid_argument("finite_diff_check: shape mismatch for " + params[p].name);
    }
    const std::size_t members = class_sizes[classes[p]];
    const std::size_t budget = (options.samples_per_class + members - 1) / members;

    TensorGradCheck entry{params[p].name};
    for (std::size_t c : sample_coordinates(theta.size(), budget, rng)) {
      const double saved = theta[c];
      const double up = saved + options.epsilon;
      const double down = saved - options.epsilon;
      theta[c] = up;
      const auto plus = loss_terms();
      theta[c] = down;
      const auto minus = loss_terms();
      theta[c] = saved;
      if (plus.size() != minus.size()) {
        throw std::logic_error("finite_diff_check: loss changed its number of terms");
      }
      long double diff = 0.0L;
      for (std::size_t i = 0; i < plus.size(); ++i) {
        diff += plus[i] - minus[i];
      }

      const auto numeric = static_cast<double>(diff / static_cast<long double>(up - down));
      const double err = relative_error(grad[c], numeric);
      if (entry.coordinates++ == 0 || err > entry.max_relative_error) {
        entry.max_relative_error = err;
        entry.analytic_at_max = grad[c];
        entry.numeric_at_max = numeric;
      }
    }
    report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
    report.coordinates += entry.coordinates;
    report.tensors.push_back(std::move(entry));
  }
  return report;
}

GradCheckReport finite_diff_check(const std::function<long double()>& loss, const ParamList& params,
                                  const ParamList& grads, Rng& rng, GradCheckOptions options) {
  auto terms = [&loss] { return std::vector<long double>{loss()}; };
  return finite_diff_check(std::function<std::vector<long double>()>(terms), params, grads, rng, std::move(options));
}

}  // namespace qintent
