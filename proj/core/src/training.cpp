// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#include "inrc/training.hpp"

#include <cmath>

#include "inrc/errors.hpp"

namespace inrc {

void OverfitConfig::validate() const {
  if (epochs < 1) throw ContractError("OverfitConfig: epochs >= 1");
  if (!(lr0 > 0.0)) throw ContractError("OverfitConfig: lr0 > 0");
  if (l1_lambda < 0.0) throw ContractError("OverfitConfig: l1_lambda >= 0");
  if (plateau_patience < 1)
    throw ContractError("OverfitConfig: plateau_patience >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
    throw ContractError("OverfitConfig: plateau_factor in (0,1)");
  if (early_stop < 1) throw ContractError("OverfitConfig: early_stop >= 1");
  if (warmup_epochs < 0 || warmup_epochs > epochs)
    throw ContractError("OverfitConfig: 0 <= warmup_epochs <= epochs");
}

double psnr_db(double mse) {
  if (mse < 0.0) throw ContractError("psnr_db: mse must be >= 0");
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double bitrate_bpp(std::uint64_t total_bits, int width, int height) {
  if (width <= 0 || height <= 0)
    throw ContractError("bitrate_bpp: W*H must be positive");
  return static_cast<double>(total_bits) /
         (static_cast<double>(width) * static_cast<double>(height));
}

}  // namespace inrc
