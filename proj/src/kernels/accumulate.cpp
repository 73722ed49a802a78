// Copyright 2026 The Authors.
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

#include "sfsvd/errors.hpp"
#include "sfsvd/kernels.hpp"

#include <algorithm>
#include <vector>

namespace sfsvd::kernels {
namespace {

void check_shapes(const Matrix& a, const Matrix& b, std::size_t chunk) {
  if (a.cols() != b.cols()) {
    throw ContractViolation("mean_outer: sample counts differ between operands");
  }
  if (a.cols() == 0) throw ContractViolation("mean_outer: no samples");
  if (chunk == 0) throw ContractViolation("mean_outer: chunk size must be positive");
}

Matrix chunk_product(const Matrix& a, const Matrix& b, Eigen::Index begin, Eigen::Index len) {
  Matrix part = a.middleCols(begin, len) * b.middleCols(begin, len).transpose();
  return part;
}

}  // namespace

Matrix mean_outer_serial(const Matrix& a, const Matrix& b, std::size_t chunk) {
  check_shapes(a, b, chunk);
  const Eigen::Index n = a.cols();
  const auto step = static_cast<Eigen::Index>(chunk);
  Matrix total = Matrix::Zero(a.rows(), b.rows());
  for (Eigen::Index begin = 0; begin < n; begin += step) {
    total += chunk_product(a, b, begin, std::min(step, n - begin));
  }
  total /= static_cast<double>(n);
  return total;
}

Matrix mean_outer_omp(const Matrix& a, const Matrix& b, std::size_t chunk) {
  check_shapes(a, b, chunk);
  const Eigen::Index n = a.cols();
  const auto step = static_cast<Eigen::Index>(chunk);
  const Eigen::Index chunks = (n + step - 1) / step;
  // Partials are merged in chunk order, so the result matches the serial
  // path bit for bit regardless of thread count.
  std::vector<Matrix> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * step;
    parts[static_cast<std::size_t>(c)] = chunk_product(a, b, begin, std::min(step, n - begin));
  }
  Matrix total = Matrix::Zero(a.rows(), b.rows());
  for (const Matrix& p : parts) total += p;
  total /= static_cast<double>(n);
  return total;
}

}  // namespace sfsvd::kernels
