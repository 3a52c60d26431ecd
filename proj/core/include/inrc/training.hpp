// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "inrc/nn.hpp"

namespace inrc {

/// Single-instance overfitting schedule. One epoch is one full-batch
/// optimizer step.
struct OverfitConfig {
  long epochs = 25000;
  double lr0 = 5e-4;
  double l1_lambda = 1e-5;
  long plateau_patience = 500;
  double plateau_factor = 0.5;
  long early_stop = 5000;
  long warmup_epochs = 0;  // 0 for the basic approach, 100 after a meta init
  double lr_floor = 1e-8;  // halving stops at this floor

  void validate() const;
};

/// Reduce-on-plateau learning rate: after `patience` observations without a
/// strictly lower loss, multiply the rate by `factor` (never below `floor`)
/// and restart the count. Split out of the training loop so the schedule is
/// testable on synthetic traces.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr0, long patience, double factor, double floor)
      : lr_(lr0), patience_(patience), factor_(factor), floor_(floor) {}

  /// Feed one loss observation; returns true if it improved on the best.
  bool observe(double loss) {
    if (loss < best_) {
      best_ = loss;
      stale_ = 0;
      return true;
    }
    if (++stale_ >= patience_) {
      const double next = std::max(lr_ * factor_, floor_);
      if (next < lr_) ++drops_;
      lr_ = next;
      stale_ = 0;
    }
    return false;
  }

  double lr() const { return lr_; }
  int drops() const { return drops_; }

 private:
  double lr_;
  long patience_;
  double factor_;
  double floor_;
  double best_ = std::numeric_limits<double>::infinity();
  long stale_ = 0;
  int drops_ = 0;
};

template <typename S>
struct OverfitResultT {
  ParamSetT<S> params;        // checkpoint with the lowest observed loss
  std::vector<double> trace;  // loss per epoch, one entry per evaluated epoch
  double best_loss = std::numeric_limits<double>::infinity();
  long best_epoch = -1;       // ties keep the earliest epoch
  long epochs_run = 0;
};
using OverfitResult = OverfitResultT<double>;

/// Full-batch Adam fit of one instance. The loss observed at an epoch is the
/// loss of the current parameters before that epoch's step; the schedule
/// consumes it before the step is taken. With warmup_epochs > 0 the
/// effective rate ramps linearly from 0 to the scheduled rate over the first
/// warmup_epochs epochs. Throws DivergedError (with the epoch) on a
/// non-finite loss.
template <typename S>
OverfitResultT<S> overfit(const MatX<S>& inputs, const MatX<S>& targets,
                          const ModelConfig& cfg, ParamSetT<S> params,
                          const OverfitConfig& ocfg,
                          const ParamSetT<S>* ref = nullptr) {
  ocfg.validate();
  OverfitResultT<S> res;
  res.trace.reserve(static_cast<std::size_t>(ocfg.epochs));
  AdamStateT<S> adam = AdamStateT<S>::like(params);
  PlateauSchedule sched(ocfg.lr0, ocfg.plateau_patience, ocfg.plateau_factor,
                        ocfg.lr_floor);
  long since_improve = 0;
  for (long e = 0; e < ocfg.epochs; ++e) {
    LossGradT<S> lg;
    try {
      lg = loss_and_grad(params, cfg, inputs, targets, ocfg.l1_lambda, ref);
    } catch (const DivergedError&) {
      throw DivergedError("overfit: training diverged", e);
    }
    const double loss = static_cast<double>(lg.loss);
    res.trace.push_back(loss);
    res.epochs_run = e + 1;
    if (loss < res.best_loss) {
      res.best_loss = loss;
      res.best_epoch = e;
      res.params = params;
      since_improve = 0;
    } else {
      ++since_improve;
    }
    if (since_improve >= ocfg.early_stop) break;
    sched.observe(loss);
    double lr = sched.lr();
    if (ocfg.warmup_epochs > 0 && e < ocfg.warmup_epochs)
      lr *= static_cast<double>(e + 1) / static_cast<double>(ocfg.warmup_epochs);
    adam_step(adam, params, lg.grads, lr);
  }
  return res;
}

/// PSNR in dB for signals in [0,1]: 10*log10(1/mse). mse = 0 returns the
/// +infinity sentinel; negative mse is a contract violation.
double psnr_db(double mse);

/// Bits per pixel: total_bits / (W*H).
double bitrate_bpp(std::uint64_t total_bits, int width, int height);

}  // namespace inrc
