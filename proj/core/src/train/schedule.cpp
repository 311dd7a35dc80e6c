#include "locjepa/train/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "locjepa/common/error.hpp"

namespace locjepa::train {

std::size_t Schedule::warmup_steps() const {
  return static_cast<std::size_t>(std::llround(warmup_epochs * double(steps_per_epoch)));
}

std::size_t Schedule::total_steps() const {
  return static_cast<std::size_t>(std::llround(total_epochs * double(steps_per_epoch)));
}

void Schedule::validate() const {
  if (!(base_lr >= 0.0) || !(final_lr >= 0.0)) throw UsageError("schedule: learning rates must be >= 0");
  if (final_lr > base_lr) throw UsageError("schedule: final_lr exceeds base_lr");
  if (steps_per_epoch == 0 || !(total_epochs > 0.0)) {
    throw UsageError("schedule: total steps must be positive");
  }
  if (!(warmup_epochs >= 0.0) || warmup_epochs > total_epochs) {
    throw UsageError("schedule: warmup_epochs must lie in [0, total_epochs]");
  }
}

double lr_at(std::size_t step, const Schedule& s) {
  const auto warmup = s.warmup_steps();
  const auto total = s.total_steps();
  if (step >= total) return s.final_lr;
  if (step < warmup) return s.base_lr * double(step) / double(warmup);
  const double span = double(total - warmup);
  const double progress = span > 0 ? double(step - warmup) / span : 1.0;
  // written from the base side so the warmup boundary is exactly base_lr
  return s.base_lr -
         (s.base_lr - s.final_lr) * 0.5 * (1.0 - std::cos(std::numbers::pi * progress));
}

double MomentumSchedule::at(std::size_t step) const {
  const double p = std::min(1.0, double(step) / double(std::max<std::size_t>(total_steps, 1)));
  return start + (end - start) * p;
}

void MomentumSchedule::validate() const {
  if (!(start >= 0.0 && start <= end && end <= 1.0)) {
    throw UsageError("ema momentum: need 0 <= start <= end <= 1, got " + std::to_string(start) +
                     " -> " + std::to_string(end));
  }
}

}  // namespace locjepa::train
