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

#ifndef SVS_TENSOR_FILE_HPP
#define SVS_TENSOR_FILE_HPP

#include <Eigen/Core>
#include <filesystem>
#include <string>

namespace svs {

using Mat = Eigen::MatrixXf;
using Vec = Eigen::VectorXf;

// KSE tensor container, the one on-disk array format used everywhere:
//
//   magic   4 bytes "KSE1"
//   rank    uint8, 1 or 2
//   shape   rank x uint32 little-endian
//   payload row-major float32 little-endian, product(shape) values
//
// Values are written verbatim (NaN/Inf included). Matrices are time-major:
// rows are frames, columns are channels.
struct Tensor {
  int rank = 0;
  Vec vec;  // rank 1
  Mat mat;  // rank 2
};

Tensor read_tensor(const std::filesystem::path& path);
Mat read_matrix(const std::filesystem::path& path);
Vec read_vector(const std::filesystem::path& path);

void write_tensor(const std::filesystem::path& path, const Mat& m);
void write_tensor(const std::filesystem::path& path, const Vec& v);

}  // namespace svs

#endif  // SVS_TENSOR_FILE_HPP
