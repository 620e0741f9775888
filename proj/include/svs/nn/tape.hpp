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

#ifndef SVS_NN_TAPE_HPP
#define SVS_NN_TAPE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace svs::nn {

using Mat = Eigen::MatrixXf;

// Learnable tensor plus its optimizer state. All state is float32 so a
// float32 file round trip is lossless and training resumes bit-identically.
struct Param {
  std::string name;
  Mat value;
  bool trainable = true;  // false: persistent buffer (no grads, no moments)
  Mat m, v;               // first/second moments, empty until first update
};

// Name-keyed parameter registry. Iteration is always in name order, so
// optimizer groups and checkpoints do not depend on construction order.
// Initializers below derive their randomness from (seed, name), which makes
// initialization independent of creation order too.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : seed_(seed) {}
  uint64_t seed() const { return seed_; }

  Param* create(const std::string& name, Mat value, bool trainable = true);
  Param* find(const std::string& name) const;  // nullptr when absent

  std::vector<Param*> all() const;
  std::vector<Param*> group(std::span<const std::string> prefixes) const;
  int64_t count_trainable(const std::string& prefix) const;

 private:
  uint64_t seed_;
  std::map<std::string, std::unique_ptr<Param>> params_;
};

Mat zeros_init(int rows, int cols);
Mat constant_init(int rows, int cols, float value);
Mat uniform_init(int rows, int cols, float lo, float hi, uint64_t seed, const std::string& name);
Mat normal_init(int rows, int cols, float sd, uint64_t seed, const std::string& name);
// Bounds +-sqrt(6 / (fan_in + fan_out)); fan_in defaults to rows, fan_out to cols.
Mat xavier_init(int rows, int cols, uint64_t seed, const std::string& name);
// Random matrix with orthonormal columns (rows >= cols) or rows (rows < cols),
// so every singular value is exactly 1.
Mat semi_orthogonal_init(int rows, int cols, uint64_t seed, const std::string& name);

// One reverse-mode graph node. `back` reads this node's grad and accumulates
// into its parents' grads; it is empty for leaves and for nodes with no
// differentiable ancestry.
struct Node {
  Mat value;
  Mat grad;  // stays empty until some child accumulates into it
  bool needs_grad = false;
  std::function<void()> back;
};

// Accumulate a gradient contribution, allocating on first touch.
inline void accum(Node* n, const Mat& g) {
  if (!n->needs_grad) return;
  if (n->grad.size() == 0)
    n->grad = g;
  else
    n->grad += g;
}

// Records the forward pass; replaying it in reverse creation order is a
// valid topological order for backprop, so no graph traversal is needed.
class Tape {
 public:
  // Constant leaf: carries a value, never receives gradients.
  Node* leaf(Mat value);
  // Parameter leaf, memoized so repeated uses share one gradient slot.
  Node* param(Param* p);
  // Interior node. needs_grad is inherited from parents; `back` is dropped
  // when nothing upstream is differentiable.
  Node* make(Mat value, std::span<Node* const> parents, std::function<void()> back);
  Node* make(Mat value, std::initializer_list<Node*> parents, std::function<void()> back);

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and runs the tape backward.
  void backward(Node* root);

  // Gradient accumulated for p during backward(); nullptr when p was unused
  // or untouched.
  const Mat* grad(const Param* p) const;

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
  std::map<const Param*, Node*> param_nodes_;
};

}  // namespace svs::nn

#endif  // SVS_NN_TAPE_HPP
