// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "treenlg/autodiff.hpp"
#include "treenlg/optim.hpp"

namespace treenlg {

/// Builds a scalar loss on `tape` from `params`. Must be deterministic.
using LossClosure = std::function<Var(Tape& tape, const ParamSet& params)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor of both relative errors; keeps tensors or entries
  /// whose true gradient is ~0 from dividing by roundoff.
  double floor = 1e-6;
};

/// Per tensor: rel_error = |a - n| / max(|a|, |n|, floor) over the whole
/// gradient (L2 norms), which decides `passed`. The entrywise worst case is
/// kept for diagnosis; on entries of size ~1e-6 it is dominated by the
/// finite-difference roundoff of the loss.
struct ParamCheck {
  std::string name;
  double rel_error = 0.0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double tolerance = 0.0;

  bool passed() const;
  /// Largest per-tensor relative error.
  double max_rel_error() const;
  /// Largest entrywise relative error (diagnostic).
  double max_entry_rel_error() const;
  std::vector<std::string> failures() const;
};

/// Compares reverse-mode gradients with central finite differences entry by
/// entry for every tensor in `params`. Parameters are perturbed in place and
/// restored before returning.
GradCheckReport grad_check(const LossClosure& loss, ParamSet& params, const GradCheckOptions& options = {});

}  // namespace treenlg
