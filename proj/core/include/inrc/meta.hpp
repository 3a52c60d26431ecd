// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inrc/hash.hpp"
#include "inrc/image.hpp"
#include "inrc/nn.hpp"
#include "inrc/training.hpp"

namespace inrc {

/// Meta-learned initialization: theta0 plus per-parameter-per-step inner
/// learning rates (k entries, each shape-matched to theta0). Referenced from
/// delta-mode bitstreams by content hash; the weights themselves live in the
/// decoder-side registry, never in the per-image stream.
struct MetaInit {
  ParamSet theta0;
  std::vector<ParamSet> alpha;
  ModelConfig config;
  std::string provenance_dataset;
  std::uint64_t provenance_steps = 0;

  int inner_steps() const { return static_cast<int>(alpha.size()); }

  /// Hash over config, k and the raw tensor bytes (not provenance), so
  /// retrained-but-identical inits collide on purpose.
  Digest128 content_hash() const;

  void validate() const;
};

struct MetaTrainConfig {
  double outer_lr = 5e-5;   // beta
  double alpha_init = 1e-5;
  int inner_steps = 3;      // k
  long steps_per_val = 500;
  int val_size = 100;
  int lr_patience = 10;     // validations without improvement before halving
  double lr_factor = 0.5;
  int epochs = 30;          // dataset passes
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainInitResult {
  MetaInit init;
  std::vector<double> val_losses;  // every logged validation loss
  double best_val_loss = 0.0;
  std::uint64_t steps_run = 0;
};

/// Meta-training outer loop: batch-size-1 episodes, k exact second-order inner
/// steps per episode (nn meta_grad), Adam on (theta0, alpha). Every
/// steps_per_val steps the post-inner-loop MSE over a fixed validation
/// subset is logged; the outer rate halves after lr_patience validations
/// without improvement and the best-validation snapshot is returned. All
/// images must share one resolution.
TrainInitResult train_init(const std::vector<ImageF>& dataset,
                           const std::vector<ImageF>& validation,
                           const MetaTrainConfig& mcfg,
                           const ModelConfig& config,
                           const std::string& dataset_id = "");

struct OverfitMetaResult {
  ParamSet theta_star;
  ParamSet delta;  // theta_star - theta0, stored exactly as the subtraction
  OverfitResult fit;
};

/// Decoder-compatible warm start: k inner steps with the stored alpha, then
/// the standard overfit loop regularized toward theta0 (delta L1). Pass the
/// meta schedule (warmup_epochs = 100 by default upstream) in ocfg.
OverfitMetaResult overfit_meta(const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets,
                               const MetaInit& minit,
                               const OverfitConfig& ocfg);

// ---------------------------------------------------------------------------
// Init file format (.inri), little-endian:
//   "INRI" | version u8 | config | k u32 | dataset id (u16 len + bytes) |
//   step count u64 | content hash (16B) | raw float64 tensors in layer order
//   (theta0 first, then alpha step-major).
// Round-trips bit-exactly; load recomputes and checks the hash.
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> serialize_init(const MetaInit& init);
MetaInit parse_init(std::span<const std::uint8_t> bytes);
void save_init(const MetaInit& init, const std::string& path);
MetaInit load_init(const std::string& path);

/// Directory of .inri files, resolved by content hash at decode time.
class InitRegistry {
 public:
  explicit InitRegistry(std::string directory) : dir_(std::move(directory)) {}

  /// Throws MissingInitError when no file in the directory matches.
  MetaInit find(const Digest128& hash) const;

  const std::string& directory() const { return dir_; }

 private:
  std::string dir_;
};

}  // namespace inrc
