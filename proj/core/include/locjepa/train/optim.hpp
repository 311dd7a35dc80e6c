#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "locjepa/nets/checkpoint.hpp"
#include "locjepa/nets/params.hpp"

namespace locjepa::train {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.04;

  void validate() const;
};

/// Decoupled-weight-decay Adam over a parameter store. Entries with
/// requires_grad off, or that backward never reached, are left untouched.
/// Decay applies only to entries flagged `decay` (matrices).
template <class Real>
class AdamW {
 public:
  AdamW(nets::ParamStore<Real>& store, AdamWConfig config);

  /// Throws NumericError naming the first parameter with a non-finite gradient.
  void step(double lr);

  std::size_t steps() const { return steps_; }
  const AdamWConfig& config() const { return config_; }

  /// Moments as `<prefix>m.<name>` / `<prefix>v.<name>`.
  void export_state(nets::CheckpointFile& ckpt, const std::string& prefix) const;
  void import_state(const nets::CheckpointFile& ckpt, const std::string& prefix,
                    std::size_t steps);

 private:
  nets::ParamStore<Real>* store_;
  AdamWConfig config_;
  std::size_t steps_ = 0;
  std::vector<Tensor<Real>> m_, v_;
};

/// Scales every trainable gradient so the global L2 norm is at most
/// `max_norm`. Returns the norm before clipping. max_norm <= 0 disables.
template <class Real>
double clip_grad_norm(nets::ParamStore<Real>& store, double max_norm);

}  // namespace locjepa::train
