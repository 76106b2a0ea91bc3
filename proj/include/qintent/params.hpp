#pragma once

#include <string>
#include <vector>

#include "qintent/tensor.hpp"

namespace qintent {

/// A named, non-owning handle on one learnable tensor of a model.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

using ParamList = std::vector<ParamRef>;

/// Collects every tensor a visitable parameter struct exposes through
/// `visit_tensors(params, prefix, fn)`.
template <typename Params>
ParamList collect_params(Params& params) {
  ParamList out;
  visit_tensors(params, std::string{}, [&out](const std::string& name, Tensor& t) {
    out.push_back({name, &t});
  });
  return out;
}

template <typename Params>
Params zeros_like(const Params& params) {
  Params out = params;
  visit_tensors(out, std::string{}, [](const std::string&, Tensor& t) { t.fill(0.0); });
  return out;
}

}  // namespace qintent
