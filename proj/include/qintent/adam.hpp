#pragma once

#include <cstdint>
#include <vector>

#include "qintent/params.hpp"

namespace qintent {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for one parameter list. Moments are kept
/// in the same order as the ParamList they were created for.
class AdamState {
public:
  AdamState() = default;
  AdamState(const ParamList& params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  /// Bias-corrected Adam update of `params` using `grads` (aligned by
  /// index). Rejects non-finite gradients, naming the offending parameter,
  /// and verifies that every updated parameter is finite.
  void apply(const ParamList& params, const ParamList& grads);

private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

inline void adam_step(const ParamList& params, const ParamList& grads, AdamState& state) {
  state.apply(params, grads);
}

}  // namespace qintent
