// SPDX-License-Identifier: Apache-2.0
#include "treenlg/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace treenlg {

bool GradCheckReport::passed() const {
  return std::all_of(params.begin(), params.end(), [](const ParamCheck& p) { return p.passed; });
}

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& p : params) worst = std::max(worst, p.rel_error);
  return worst;
}

double GradCheckReport::max_entry_rel_error() const {
  double worst = 0.0;
  for (const auto& p : params) worst = std::max(worst, p.max_rel_error);
  return worst;
}

std::vector<std::string> GradCheckReport::failures() const {
  std::vector<std::string> out;
  for (const auto& p : params) {
    if (!p.passed) out.push_back(p.name);
  }
  return out;
}

namespace {

double evaluate(const LossClosure& loss, const ParamSet& params) {
  Tape tape;
  return loss(tape, params).value()[0];
}

}  // namespace

GradCheckReport grad_check(const LossClosure& loss, ParamSet& params, const GradCheckOptions& options) {
  std::vector<Tensor> analytic = params.zeros_like();
  {
    Tape tape;
    Var l = loss(tape, params);
    tape.backward(l);
    accumulate_param_grads(tape, analytic);
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  const double h = options.step;
  for (std::size_t p = 0; p < params.size(); ++p) {
    ParamCheck check;
    check.name = params.name(p);
    Tensor& theta = params[p];
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double up = evaluate(loss, params);
      theta[i] = saved - h;
      const double down = evaluate(loss, params);
      theta[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), options.floor});
      check.max_abs_error = std::max(check.max_abs_error, abs_err);
      diff_sq += abs_err * abs_err;
      a_sq += a * a;
      n_sq += numeric * numeric;
      if (i == 0 || rel > check.max_rel_error) {
        check.max_rel_error = rel;
        check.worst_index = i;
        check.analytic_at_worst = a;
        check.numeric_at_worst = numeric;
      }
    }
    check.rel_error = std::sqrt(diff_sq) / std::max({std::sqrt(a_sq), std::sqrt(n_sq), options.floor});
    check.passed = check.rel_error <= options.tolerance;
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace treenlg
