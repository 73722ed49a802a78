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

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; the module code dispatches on Exec.

#pragma once

#include "sfsvd/exec.hpp"
#include "sfsvd/linalg.hpp"

#include <cstddef>
#include <exception>
#include <span>

namespace sfsvd::kernels {

// --- periodic stencils on one H x W channel ---------------------------------

/// out(i,j) = scale * (in(i,j+1) - in(i,j-1)) along x, or rows along y.
void central_difference_serial(std::span<const double> in, std::span<double> out,
                               std::size_t height, std::size_t width, bool along_x,
                               double scale);
void central_difference_omp(std::span<const double> in, std::span<double> out,
                            std::size_t height, std::size_t width, bool along_x, double scale);

/// out(i,j) = scale * (in(next) - 2 in(i,j) + in(prev)).
void second_difference_serial(std::span<const double> in, std::span<double> out,
                              std::size_t height, std::size_t width, bool along_x,
                              double scale);
void second_difference_omp(std::span<const double> in, std::span<double> out,
                           std::size_t height, std::size_t width, bool along_x, double scale);

// --- covariance accumulation -------------------------------------------------

/// Samples are columns. Returns (1/N) sum_n a_n b_n^T, reduced in fixed
/// chunks of `chunk` samples merged in chunk order.
Matrix mean_outer_serial(const Matrix& a, const Matrix& b, std::size_t chunk = 32);
/// Same reduction with chunks processed by OpenMP threads. Partials are
/// merged in chunk order, so the result is bitwise equal to the serial one.
Matrix mean_outer_omp(const Matrix& a, const Matrix& b, std::size_t chunk = 32);

inline Matrix mean_outer(const Matrix& a, const Matrix& b, Exec exec, std::size_t chunk = 32) {
  return exec == Exec::parallel ? mean_outer_omp(a, b, chunk) : mean_outer_serial(a, b, chunk);
}

// --- per-sample loops --------------------------------------------------------

/// Runs fn(i) for i in [0, n). The parallel form rethrows the first exception
/// raised by any iteration after the loop completes.
template <typename Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(sfsvd_for_each_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sfsvd::kernels
