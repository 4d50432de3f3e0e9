#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gatedgan/autodiff.hpp"

namespace gatedgan {

struct GradCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t elements_checked = 0;
  bool passed = false;
};

/// Scalar-valued function of tape variables, evaluated in 64-bit.
using ScalarFunction =
    std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>;

/// Compares tape gradients of `f` against central differences for every
/// element of every input. The relative error of one element is
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckReport grad_check(const ScalarFunction& f, const std::vector<TensorD>& inputs,
                           double tol, double step = 1e-3, double floor = 1e-2);

}  // namespace gatedgan
