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

#pragma once

#include <functional>
#include <vector>

#include "morphinf/tape.hpp"

namespace morphinf {

using LossBuilder =
    std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;
using ParameterLossBuilder = std::function<Var<double>(Tape<double>&)>;

/// |analytic - numeric| / max(1e-6, |analytic| + |numeric|).
double relative_error(double analytic, double numeric);

/// Compares tape gradients of the scalar built by `f` against five-point
/// central differences with step `eps`, over every entry of every input. Returns the
/// maximum relative error. Throws NumericError on non-finite values.
double grad_check(const LossBuilder& f, const std::vector<NumArray<double>>& inputs,
                  double eps = 1e-3);

/// Same check with respect to parameters that `f` binds through Tape::param.
/// Parameters are perturbed in place and restored afterwards.
double grad_check(const std::vector<Parameter<double>*>& params, const ParameterLossBuilder& f,
                  double eps = 1e-3);

}  // namespace morphinf
