// Copyright 2026 svslab authors
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

#include "svs/nn/adam.hpp"

#include <cmath>

namespace svs::nn {

void Adam::step(const std::vector<Param*>& group, const Tape& tape, double lr) {
  ++t;
  const float b1 = static_cast<float>(beta1);
  const float b2 = static_cast<float>(beta2);
  const float bc1 = static_cast<float>(1.0 - std::pow(beta1, static_cast<double>(t)));
  const float bc2 = static_cast<float>(1.0 - std::pow(beta2, static_cast<double>(t)));
  const float lrf = static_cast<float>(lr);
  const float epsf = static_cast<float>(eps);

  for (Param* p : group) {
    if (!p->trainable) continue;
    const Mat* g = tape.grad(p);
    if (g == nullptr && p->m.size() == 0) continue;
    if (p->m.size() == 0) {
      p->m = Mat::Zero(p->value.rows(), p->value.cols());
      p->v = Mat::Zero(p->value.rows(), p->value.cols());
    }
    if (g != nullptr) {
      p->m = b1 * p->m + (1.0f - b1) * *g;
      p->v = b2 * p->v + (1.0f - b2) * Mat(g->cwiseProduct(*g));
    } else {
      p->m *= b1;
      p->v *= b2;
    }
    p->value.array() -= lrf * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + epsf);
  }
}

}  // namespace svs::nn
