// Copyright 2026 The poscl Authors.
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

#include <algorithm>
#include <cmath>

#include "poscl/autodiff.hpp"
#include "poscl/errors.hpp"

namespace poscl::ad {

double evaluate(const ScalarProgram& f, const Tensor& x) {
  Graph g;
  const Var out = f(g, g.leaf(x));
  if (out.value().size() != 1) throw ContractError("grad_check: program is not scalar-valued");
  return out.value()[0];
}

double grad_check(const ScalarProgram& f, const Tensor& x, double eps) {
  Tensor analytic;
  {
    Graph g;
    const Var input = g.leaf(x);
    const Var out = f(g, input);
    analytic = g.backward(out)[input];
  }
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = evaluate(f, probe);
    probe[i] = x[i] - eps;
    const double down = evaluate(f, probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric)));
  }
  return worst;
}

}  // namespace poscl::ad
