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

#include "sfsvd/kernels.hpp"

namespace sfsvd::kernels {
namespace {

// One output row. Kept separate so both drivers run the identical arithmetic.
inline void central_row(const double* in, double* out, std::size_t i, std::size_t height,
                        std::size_t width, bool along_x, double scale) {
  if (along_x) {
    const double* row = in + i * width;
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t jp = j + 1 == width ? 0 : j + 1;
      const std::size_t jm = j == 0 ? width - 1 : j - 1;
      out[i * width + j] = scale * (row[jp] - row[jm]);
    }
  } else {
    const std::size_t ip = i + 1 == height ? 0 : i + 1;
    const std::size_t im = i == 0 ? height - 1 : i - 1;
    const double* up = in + ip * width;
    const double* down = in + im * width;
    for (std::size_t j = 0; j < width; ++j) out[i * width + j] = scale * (up[j] - down[j]);
  }
}

inline void second_row(const double* in, double* out, std::size_t i, std::size_t height,
                       std::size_t width, bool along_x, double scale) {
  const double* row = in + i * width;
  if (along_x) {
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t jp = j + 1 == width ? 0 : j + 1;
      const std::size_t jm = j == 0 ? width - 1 : j - 1;
      out[i * width + j] = scale * (row[jp] - 2.0 * row[j] + row[jm]);
    }
  } else {
    const std::size_t ip = i + 1 == height ? 0 : i + 1;
    const std::size_t im = i == 0 ? height - 1 : i - 1;
    const double* up = in + ip * width;
    const double* down = in + im * width;
    for (std::size_t j = 0; j < width; ++j) {
      out[i * width + j] = scale * (up[j] - 2.0 * row[j] + down[j]);
    }
  }
}

}  // namespace

void central_difference_serial(std::span<const double> in, std::span<double> out,
                               std::size_t height, std::size_t width, bool along_x,
                               double scale) {
  for (std::size_t i = 0; i < height; ++i) {
    central_row(in.data(), out.data(), i, height, width, along_x, scale);
  }
}

void central_difference_omp(std::span<const double> in, std::span<double> out,
                            std::size_t height, std::size_t width, bool along_x, double scale) {
  const auto rows = static_cast<std::ptrdiff_t>(height);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    central_row(in.data(), out.data(), static_cast<std::size_t>(i), height, width, along_x,
                scale);
  }
}

void second_difference_serial(std::span<const double> in, std::span<double> out,
                              std::size_t height, std::size_t width, bool along_x,
                              double scale) {
  for (std::size_t i = 0; i < height; ++i) {
    second_row(in.data(), out.data(), i, height, width, along_x, scale);
  }
}

void second_difference_omp(std::span<const double> in, std::span<double> out,
                           std::size_t height, std::size_t width, bool along_x, double scale) {
  const auto rows = static_cast<std::ptrdiff_t>(height);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    second_row(in.data(), out.data(), static_cast<std::size_t>(i), height, width, along_x,
               scale);
  }
}

}  // namespace sfsvd::kernels
