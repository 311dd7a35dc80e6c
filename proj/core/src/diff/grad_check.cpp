#include "locjepa/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "locjepa/common/error.hpp"

namespace locjepa::diff {
namespace {

double evaluate(const std::function<Var<double>()>& loss, const std::string& where) {
  NoGradGuard guard;
  const double v = loss().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss at " + where);
  return v;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check_params(const std::function<Var<double>()>& loss,
                                  std::span<NamedParam> params, double eps, double tol) {
  for (auto& p : params) {
    p.var.set_requires_grad(true);
    p.var.zero_grad();
  }
  const Var<double> root = loss();
  if (!std::isfinite(root.item())) throw NumericError("grad_check: non-finite loss at x");
  backward(root);

  GradCheckReport report;
  std::size_t flat = 0;
  for (auto& p : params) {
    auto values = p.var.mutable_value();
    const std::vector<double> analytic =
        p.var.has_grad() ? std::vector<double>(p.var.grad().begin(), p.var.grad().end())
                         : std::vector<double>(values.size(), 0.0);
    for (std::size_t k = 0; k < values.size(); ++k, ++flat) {
      const double orig = values[k];
      const std::string where = p.name + "[" + std::to_string(k) + "]";
      values[k] = orig + eps;
      const double up = evaluate(loss, where + " + eps");
      values[k] = orig - eps;
      const double down = evaluate(loss, where + " - eps");
      values[k] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[k], numeric);
      if (err > report.max_rel_err || report.coordinates == 0) {
        report.max_rel_err = err;
        report.worst_index = flat;
        report.worst_name = where;
      }
      ++report.coordinates;
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

GradCheckReport grad_check(const std::function<Var<double>(const Var<double>&)>& f,
                           const Tensor<double>& x, double eps, double tol) {
  std::vector<NamedParam> params{{"x", Var<double>::leaf(x, true)}};
  const Var<double> input = params[0].var;
  return grad_check_params([&] { return f(input); }, params, eps, tol);
}

}  // namespace locjepa::diff
