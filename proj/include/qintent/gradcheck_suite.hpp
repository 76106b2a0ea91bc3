#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qintent/gradcheck.hpp"

namespace qintent {

/// Largest relative error over the tensors of one part of a model.
struct GradCheckGroup {
  std::string name;  // "encoder", "ctw_head" or "cqr_head"
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
};

struct GradCheckCase {
  std::uint64_t seed = 0;
  std::size_t vocab_size = 0;
  std::size_t layers = 0;
  GradCheckReport ctw;
  GradCheckReport cqr;
  std::vector<GradCheckGroup> groups;

  bool passed() const { return ctw.passed() && cqr.passed(); }
};

/// Builds a random desk-scale CTW and CQR model for each seed (freshly
/// initialized, random vocabulary size, 1 or 2 layers, dropout active with a
/// fixed mask seed) and compares backpropagated gradients with central
/// differences of the extended-precision loss.
std::vector<GradCheckCase> run_gradcheck_suite(const std::vector<std::uint64_t>& seeds,
                                               const GradCheckOptions& options = {});

}  // namespace qintent
