#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "locjepa/diff/autograd.hpp"

namespace locjepa::diff {

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = true;
  std::size_t worst_index = 0;   // flat coordinate across all checked inputs
  std::string worst_name;        // parameter label for multi-input checks
  std::size_t coordinates = 0;
};

/// Relative error with an absolute floor on the denominator.
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Compares the reverse-mode gradient of `f` at `x` against central finite
/// differences (f(x + eps e_k) - f(x - eps e_k)) / (2 eps).
GradCheckReport grad_check(const std::function<Var<double>(const Var<double>&)>& f,
                           const Tensor<double>& x, double eps = 1e-5,
                           double tol = 1e-4);

struct NamedParam {
  std::string name;
  Var<double> var;
};

/// Same comparison over every coordinate of several parameter leaves, which
/// `loss` closes over. Leaf values are restored afterwards.
GradCheckReport grad_check_params(const std::function<Var<double>()>& loss,
                                  std::span<NamedParam> params, double eps = 1e-5,
                                  double tol = 1e-4);

}  // namespace locjepa::diff
