#pragma once

#include <cstddef>

namespace locjepa::train {

/// Linear warmup from 0 to base_lr, then half-cosine decay to final_lr.
struct Schedule {
  double base_lr = 2e-4;
  double final_lr = 1e-6;
  double warmup_epochs = 20;
  double total_epochs = 300;
  std::size_t steps_per_epoch = 1;

  std::size_t warmup_steps() const;
  std::size_t total_steps() const;
  /// Throws UsageError on negative rates, warmup > total or zero steps.
  void validate() const;
};

/// Learning rate at a 0-based optimizer step; clamps to final_lr past the end.
double lr_at(std::size_t step, const Schedule& schedule);

/// EMA momentum rising linearly from `start` to `end` over `total_steps`.
struct MomentumSchedule {
  double start = 0.996;
  double end = 1.0;
  std::size_t total_steps = 1;

  double at(std::size_t step) const;
  void validate() const;
};

}  // namespace locjepa::train
