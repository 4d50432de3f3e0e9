#include "gatedgan/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace gatedgan {
namespace {

double evaluate(const ScalarFunction& f, const std::vector<TensorD>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  vars.reserve(inputs.size());
  for (const TensorD& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).value().item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, const std::vector<TensorD>& inputs,
                           double tol, double step, double floor) {
  std::vector<TensorD> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const TensorD& t : inputs) vars.push_back(tape.variable(t));
    Var<double> loss = f(tape, vars);
    tape.backward(loss);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const TensorD* g = tape.grad(vars[i]);
      analytic.push_back(g ? *g : TensorD(inputs[i].shape(), 0.0));
    }
  }

  GradCheckReport report;
  std::vector<TensorD> probe = inputs;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    for (std::size_t j = 0; j < probe[i].numel(); ++j) {
      const double original = probe[i][j];
      probe[i][j] = original + step;
      const double up = evaluate(f, probe);
      probe[i][j] = original - step;
      const double down = evaluate(f, probe);
      probe[i][j] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i][j];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
      report.max_relative_error = std::max(report.max_relative_error, abs_err / denom);
      ++report.elements_checked;
    }
  }
  report.passed = report.max_relative_error < tol;
  return report;
}

}  // namespace gatedgan
