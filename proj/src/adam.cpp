#include "qintent/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace qintent {

AdamState::AdamState(const ParamList& params, AdamConfig config) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamRef& p : params) {
    m_.push_back(Tensor::zeros_like(*p.tensor));
    v_.push_back(Tensor::zeros_like(*p.tensor));
  }
}

void AdamState::apply(const ParamList& params, const ParamList& grads) {
  if (params.size() != m_.size() || grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state counts differ (" +
                                std::to_string(params.size()) + ", " + std::to_string(grads.size()) +
                                ", " + std::to_string(m_.size()) + ")");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& g = *grads[i].tensor;
    if (g.shape() != params[i].tensor->shape() || g.shape() != m_[i].shape()) {
      throw std::invalid_argument("adam_step: shape mismatch for " + params[i].name + ": " +
                                  params[i].tensor->shape_string() + " vs " + g.shape_string());
    }
    if (!g.all_finite()) {
      throw std::domain_error("adam_step: non-finite gradient for parameter " + params[i].name);
    }
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].tensor->values();
    auto g = grads[i].tensor->values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    if (!params[i].tensor->all_finite()) {
      throw std::domain_error("adam_step: parameter " + params[i].name + " became non-finite");
    }
  }
}

}  // namespace qintent
