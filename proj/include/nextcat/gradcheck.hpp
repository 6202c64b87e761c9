#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nextcat/autodiff.hpp"

namespace nextcat::ad {

struct GradCheckResult {
  bool passed = true;
  double worst_rel_err = 0.0;
  std::string worst_location;
};

// Central finite-difference verification of d(loss)/d(inputs). `loss_fn`
// must rebuild the graph from the current input values on every call.
// Relative error uses |a - n| / max(1, |a|, |n|) so tiny gradients are
// compared absolutely.
inline GradCheckResult grad_check(
    const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& inputs,
    double h = 1e-5, double tolerance = 1e-4,
    // Test hook: added to the first analytic gradient entry to prove the
    // checker notices corrupted gradients.
    double fault = 0.0) {
  for (const auto& t : inputs) {
    const_cast<Tensor&>(t).zero_grad();
  }
  Tensor loss = loss_fn();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs)
    analytic.push_back(const_cast<Tensor&>(t).grad());
  if (fault != 0.0 && !analytic.empty() && !analytic[0].empty())
    analytic[0][0] += fault;

  GradCheckResult result;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor t = inputs[ti];
    for (std::size_t i = 0; i < t.size(); ++i) {
      double saved = t.value()[i];
      t.value()[i] = saved + h;
      double up = loss_fn().scalar();
      t.value()[i] = saved - h;
      double down = loss_fn().scalar();
      t.value()[i] = saved;
      double numeric = (up - down) / (2.0 * h);
      double a = analytic[ti][i];
      double rel = std::abs(a - numeric) /
                   std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > result.worst_rel_err) {
        result.worst_rel_err = rel;
        result.worst_location = "input " + std::to_string(ti) + " element " +
                                std::to_string(i);
      }
    }
  }
  result.passed = result.worst_rel_err < tolerance;
  return result;
}

}  // namespace nextcat::ad
