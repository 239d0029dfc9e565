// Copyright 2026 The morphinf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "morphinf/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace morphinf {

namespace {

double checked_scalar(const NumArray<double>& value) {
  if (value.size() != 1) throw ShapeError("grad_check: loss must be scalar, got " + shape_string(value.shape()));
  if (!std::isfinite(value[0])) throw NumericError("grad_check: non-finite loss");
  return value[0];
}

// Five-point central difference of `evaluate` with respect to `slot`,
// restoring it.
template <typename Eval>
double central_difference(double& slot, double eps, const Eval& evaluate) {
  const double saved = slot;
  auto at = [&](double offset) {
    slot = saved + offset;
    return evaluate();
  };
  const double d = 8 * (at(eps) - at(-eps)) - (at(2 * eps) - at(-2 * eps));
  slot = saved;
  return d / (12 * eps);
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
}

double grad_check(const LossBuilder& f, const std::vector<NumArray<double>>& inputs, double eps) {
  std::vector<NumArray<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& in : inputs) vars.push_back(tape.variable(in));
    Var<double> loss = f(tape, vars);
    checked_scalar(loss.value());
    tape.backward(loss);
    for (const auto& v : vars) {
      NumArray<double> g = tape.gradient(v);
      if (!g.all_finite()) throw NumericError("grad_check: non-finite gradient");
      analytic.push_back(std::move(g));
    }
  }

  std::vector<NumArray<double>> probe = inputs;
  auto evaluate = [&]() {
    Tape<double> tape(false);
    std::vector<Var<double>> vars;
    for (const auto& in : probe) vars.push_back(tape.constant(in));
    return checked_scalar(f(tape, vars).value());
  };

  double worst = 0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    for (std::size_t j = 0; j < probe[i].size(); ++j) {
      const double numeric = central_difference(probe[i][j], eps, evaluate);
      worst = std::max(worst, relative_error(analytic[i][j], numeric));
    }
  }
  return worst;
}

double grad_check(const std::vector<Parameter<double>*>& params, const ParameterLossBuilder& f,
                  double eps) {
  std::vector<NumArray<double>> analytic;
  {
    Tape<double> tape;
    Var<double> loss = f(tape);
    checked_scalar(loss.value());
    tape.backward(loss);
    for (Parameter<double>* p : params) {
      const NumArray<double>* g = tape.gradient_of(*p);
      NumArray<double> grad = g ? *g : NumArray<double>(p->value.shape(), 0.0);
      if (!grad.all_finite()) throw NumericError("grad_check: non-finite gradient for " + p->name);
      analytic.push_back(std::move(grad));
    }
  }

  auto evaluate = [&]() {
    Tape<double> tape(false);
    return checked_scalar(f(tape).value());
  };

  double worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    NumArray<double>& value = params[i]->value;
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double numeric = central_difference(value[j], eps, evaluate);
      worst = std::max(worst, relative_error(analytic[i][j], numeric));
    }
  }
  return worst;
}

}  // namespace morphinf
