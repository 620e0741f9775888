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

#include "svs/nn/tape.hpp"

#include <Eigen/QR>
#include <cmath>

#include "svs/error.hpp"
#include "svs/rng.hpp"

namespace svs::nn {

Param* ParamStore::create(const std::string& name, Mat value, bool trainable) {
  auto [it, inserted] = params_.try_emplace(name, std::make_unique<Param>());
  if (!inserted) fail(Err::ShapeError, "duplicate parameter name " + name);
  Param* p = it->second.get();
  p->name = name;
  p->value = std::move(value);
  p->trainable = trainable;
  return p;
}

Param* ParamStore::find(const std::string& name) const {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : it->second.get();
}

std::vector<Param*> ParamStore::all() const {
  std::vector<Param*> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<Param*> ParamStore::group(std::span<const std::string> prefixes) const {
  std::vector<Param*> out;
  for (const auto& [name, p] : params_)
    for (const auto& prefix : prefixes)
      if (name.rfind(prefix, 0) == 0) {
        out.push_back(p.get());
        break;
      }
  return out;
}

int64_t ParamStore::count_trainable(const std::string& prefix) const {
  int64_t n = 0;
  for (const auto& [name, p] : params_)
    if (p->trainable && name.rfind(prefix, 0) == 0) n += p->value.size();
  return n;
}

Mat zeros_init(int rows, int cols) { return Mat::Zero(rows, cols); }

Mat constant_init(int rows, int cols, float value) { return Mat::Constant(rows, cols, value); }

Mat uniform_init(int rows, int cols, float lo, float hi, uint64_t seed, const std::string& name) {
  auto rng = stream(seed, "init", hash_tag(name));
  std::uniform_real_distribution<float> d(lo, hi);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = d(rng);
  return m;
}

Mat normal_init(int rows, int cols, float sd, uint64_t seed, const std::string& name) {
  auto rng = stream(seed, "init", hash_tag(name));
  std::normal_distribution<float> d(0.0f, sd);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = d(rng);
  return m;
}

Mat xavier_init(int rows, int cols, uint64_t seed, const std::string& name) {
  const float a = std::sqrt(6.0f / static_cast<float>(rows + cols));
  return uniform_init(rows, cols, -a, a, seed, name);
}

Mat semi_orthogonal_init(int rows, int cols, uint64_t seed, const std::string& name) {
  const bool tall = rows >= cols;
  const int r = tall ? rows : cols, c = tall ? cols : rows;
  Mat g = normal_init(r, c, 1.0f, seed, name);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = Mat(qr.householderQ()) .leftCols(c);
  // Fix the sign convention so the result is deterministic across backends.
  for (int j = 0; j < c; ++j)
    if (q(0, j) < 0.0f) q.col(j) = -q.col(j);
  return tall ? q : Mat(q.transpose());
}

Node* Tape::leaf(Mat value) {
  nodes_.push_back(std::make_unique<Node>());
  Node* n = nodes_.back().get();
  n->value = std::move(value);
  return n;
}

Node* Tape::param(Param* p) {
  auto it = param_nodes_.find(p);
  if (it != param_nodes_.end()) return it->second;
  nodes_.push_back(std::make_unique<Node>());
  Node* n = nodes_.back().get();
  n->value = p->value;
  n->needs_grad = p->trainable;
  param_nodes_.emplace(p, n);
  return n;
}

Node* Tape::make(Mat value, std::span<Node* const> parents, std::function<void()> back) {
  nodes_.push_back(std::make_unique<Node>());
  Node* n = nodes_.back().get();
  n->value = std::move(value);
  for (Node* p : parents)
    if (p->needs_grad) {
      n->needs_grad = true;
      break;
    }
  if (n->needs_grad) n->back = std::move(back);
  return n;
}

Node* Tape::make(Mat value, std::initializer_list<Node*> parents, std::function<void()> back) {
  return make(std::move(value), std::span<Node* const>(parents.begin(), parents.size()),
              std::move(back));
}

void Tape::backward(Node* root) {
  if (root->value.rows() != 1 || root->value.cols() != 1)
    fail(Err::ShapeError, "backward root must be a 1x1 scalar node");
  root->grad = Mat::Ones(1, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (n->back && n->grad.size() != 0) n->back();
  }
}

const Mat* Tape::grad(const Param* p) const {
  auto it = param_nodes_.find(p);
  if (it == param_nodes_.end() || it->second->grad.size() == 0) return nullptr;
  return &it->second->grad;
}

}  // namespace svs::nn
