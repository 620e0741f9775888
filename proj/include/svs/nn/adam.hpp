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

#ifndef SVS_NN_ADAM_HPP
#define SVS_NN_ADAM_HPP

#include <cstdint>
#include <vector>

#include "svs/nn/tape.hpp"

namespace svs::nn {

// Adaptive-moment optimizer over one parameter group. Moments live on the
// Params (float32, checkpointable); the iteration counter lives here.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;

  // Applies one update using the gradients the tape accumulated. Parameters
  // with no gradient and no moment history are left untouched; ones with
  // history decay their moments as if the gradient were zero.
  void step(const std::vector<Param*>& group, const Tape& tape, double lr);
};

}  // namespace svs::nn

#endif  // SVS_NN_ADAM_HPP
