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

// Dense kernels used by the compressor: SVD, truncated SVD, SPD factoring
// with jitter escalation and an eigendecomposition fallback, and
// application of factor inverses without forming them.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>

namespace sfsvd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct SvdResult {
  Matrix u;                ///< m x r, orthonormal columns
  Vector singular_values;  ///< length r = min(m, n), nonincreasing
  Matrix vt;               ///< r x n, orthonormal rows
};

enum class FactorMode { cholesky, evd_fallback };

/// factor * factor^T reproduces the (jittered) input.
///
/// In Cholesky mode `factor` is lower triangular. In EVD mode it is
/// U * diag(sqrt(lambda)) with eigenvalues sorted descending; eigenvalues
/// below kEvdFloor times the largest are raised to that floor, so the factor
/// stays invertible and directions the data never excites keep a tiny weight
/// instead of being projected out.
struct FactorResult {
  Matrix factor;
  FactorMode mode = FactorMode::cholesky;
  double jitter_used = 0.0;
  Matrix eigenvectors;  ///< EVD mode only
  Vector sqrt_eigenvalues;  ///< EVD mode only, floored
  std::size_t retained = 0;  ///< EVD mode only: eigenvalues above the floor

  std::size_t order() const { return static_cast<std::size_t>(factor.rows()); }
  /// Numerical rank of the factor (order() for Cholesky).
  std::size_t rank() const;
};

/// Which inverse to apply in solve_factor.
enum class Side {
  left_inverse,             ///< F^-1 * b
  left_inverse_transpose,   ///< F^-T * b
  right_inverse,            ///< b * F^-1
  right_inverse_transpose,  ///< b * F^-T
};

/// Jitter multipliers, relative to the mean diagonal of the input.
inline constexpr std::array<double, 5> kDefaultJitterSchedule = {0.0, 1e-12, 1e-10, 1e-8, 1e-6};

/// EVD eigenvalue floor, relative to the largest eigenvalue.
inline constexpr double kEvdFloor = 1e-10;

/// Thin SVD; singular values descending, sign of each left singular vector
/// fixed so its largest-magnitude entry is nonnegative.
SvdResult svd(const Matrix& a, std::string_view role = "matrix");

/// Rank-k Eckart-Young factors (U_k S_k^{1/2}, S_k^{1/2} V_k^T).
std::pair<Matrix, Matrix> truncated_svd(const Matrix& a, std::size_t k,
                                        std::string_view role = "matrix");

/// Cholesky with escalating jitter, falling back to a clamped
/// eigendecomposition when every attempt leaves a pivot at or below the
/// largest jitter in the schedule (ten times it, relative to the mean diagonal).
FactorResult factor_spd(const Matrix& s,
                        std::span<const double> jitter_schedule = kDefaultJitterSchedule,
                        std::string_view role = "matrix");

/// Identity factor of the given order (Cholesky mode, no jitter).
FactorResult identity_factor(std::size_t order);

Matrix solve_factor(const FactorResult& f, const Matrix& b, Side side,
                    std::string_view role = "factor");

/// The whitening matrix L with L^T L = S for S = factor * factor^T, i.e. factor^T.
inline Matrix loss_whitener(const FactorResult& f) { return f.factor.transpose(); }

/// max |a - a^T| / max(max |a|, tiny).
double relative_asymmetry(const Matrix& a);

bool all_finite(const Matrix& a);

}  // namespace sfsvd
