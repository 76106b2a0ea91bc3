#pragma once

#include <span>
#include <vector>

#include "qintent/cqr.hpp"
#include "qintent/ctw.hpp"

namespace qintent {

/// Independent forward passes that evaluate the same losses as ctw_loss and
/// cqr_loss with every intermediate in long double. Dropout masks are drawn
/// from `rng` in the same order, so equal seeds give equal masks. These are
/// the finite-difference targets for gradient checking. When `terms` is
/// non-null every per-label cross-entropy term is appended to it.
long double ctw_loss_extended(std::span<const TermWeightExample> batch, const CtwParams& params, Mode mode, Rng& rng,
                              std::vector<long double>* terms = nullptr);
long double cqr_loss_extended(std::span<const RefinementExample> batch, const CqrParams& params, Mode mode, Rng& rng,
                              std::vector<long double>* terms = nullptr);

}  // namespace qintent
