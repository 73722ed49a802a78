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

#include "sfsvd/linalg.hpp"

#include "sfsvd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace sfsvd {
namespace {

std::string describe(std::string_view role, const Matrix& a) {
  std::ostringstream os;
  os << role << " (" << a.rows() << "x" << a.cols() << ")";
  return os.str();
}

// Flip column j of u (and row j of vt) so the largest-magnitude entry of the
// column is nonnegative.
template <typename Left, typename Right>
void fix_signs(Left& u, Right* vt) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0.0) {
      u.col(j) *= -1.0;
      if (vt != nullptr) vt->row(j) *= -1.0;
    }
  }
}

// Plain right-looking Cholesky. Returns false as soon as a pivot drops to
// `pivot_floor` or below.
bool try_cholesky(const Matrix& s, double pivot_floor, Matrix& out) {
  const Eigen::Index n = s.rows();
  out = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = s(j, j);
    for (Eigen::Index p = 0; p < j; ++p) pivot -= out(j, p) * out(j, p);
    if (!(pivot > pivot_floor)) return false;
    const double d = std::sqrt(pivot);
    out(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double acc = s(i, j);
      for (Eigen::Index p = 0; p < j; ++p) acc -= out(i, p) * out(j, p);
      out(i, j) = acc / d;
    }
  }
  return true;
}

void check_invertible_triangular(const FactorResult& f, std::string_view role) {
  const Vector diag = f.factor.diagonal().cwiseAbs();
  const double hi = diag.size() ? diag.maxCoeff() : 0.0;
  const double lo = diag.size() ? diag.minCoeff() : 0.0;
  if (!(lo > 1e-12 * hi) || hi == 0.0) {
    std::ostringstream os;
    os << "factor for " << role << " is numerically singular (min |diag| = " << lo
       << ", max |diag| = " << hi << "); retry with a larger jitter schedule";
    throw NumericalError(os.str());
  }
}

}  // namespace

std::size_t FactorResult::rank() const {
  if (mode == FactorMode::cholesky) return order();
  return retained;
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

double relative_asymmetry(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (scale == 0.0) return asym;
  return asym / scale;
}

SvdResult svd(const Matrix& a, std::string_view role) {
  if (a.size() == 0) throw ContractViolation("svd: empty " + describe(role, a));
  if (!a.allFinite()) throw ContractViolation("svd: non-finite entries in " + describe(role, a));

  Eigen::BDCSVD<Eigen::MatrixXd> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success || !dec.singularValues().allFinite()) {
    throw NumericalError("svd did not converge for " + describe(role, a));
  }
  SvdResult out;
  out.u = dec.matrixU();
  out.singular_values = dec.singularValues();
  out.vt = dec.matrixV().transpose();
  fix_signs(out.u, &out.vt);
  return out;
}

std::pair<Matrix, Matrix> truncated_svd(const Matrix& a, std::size_t k, std::string_view role) {
  const auto r = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (k < 1 || k > r) {
    std::ostringstream os;
    os << "truncated_svd: k = " << k << " outside [1, " << r << "] for " << describe(role, a);
    throw ContractViolation(os.str());
  }
  const SvdResult d = svd(a, role);
  const auto kk = static_cast<Eigen::Index>(k);
  const Vector root = d.singular_values.head(kk).cwiseSqrt();
  Matrix left = d.u.leftCols(kk) * root.asDiagonal();
  Matrix right = root.asDiagonal() * d.vt.topRows(kk);
  return {std::move(left), std::move(right)};
}

FactorResult identity_factor(std::size_t order) {
  FactorResult f;
  const auto n = static_cast<Eigen::Index>(order);
  f.factor = Matrix::Identity(n, n);
  return f;
}

FactorResult factor_spd(const Matrix& s, std::span<const double> jitter_schedule,
                        std::string_view role) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw ContractViolation("factor_spd: expected a nonempty square matrix, got " + describe(role, s));
  }
  if (!s.allFinite()) throw ContractViolation("factor_spd: non-finite entries in " + describe(role, s));
  if (relative_asymmetry(s) > 1e-9) {
    std::ostringstream os;
    os << "factor_spd: " << describe(role, s) << " is not symmetric (relative asymmetry "
       << relative_asymmetry(s) << ")";
    throw ContractViolation(os.str());
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  const Eigen::Index n = sym.rows();
  const double mean_diag = sym.diagonal().mean();
  const double max_diag = sym.diagonal().cwiseAbs().maxCoeff();
  double largest_jitter = 0.0;
  for (double j : jitter_schedule) largest_jitter = std::max(largest_jitter, j);
  const double pivot_floor =
      std::max(10.0 * largest_jitter * std::abs(mean_diag),
               static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag);

  FactorResult out;
  if (mean_diag > 0.0) {
    Matrix chol;
    for (double rel : jitter_schedule) {
      const double eps = rel * mean_diag;
      Matrix shifted = sym;
      shifted.diagonal().array() += eps;
      if (try_cholesky(shifted, pivot_floor, chol)) {
        out.factor = std::move(chol);
        out.mode = FactorMode::cholesky;
        out.jitter_used = eps;
        return out;
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) {
    throw NumericalError("factor_spd: eigendecomposition failed for " + describe(role, s));
  }
  // Eigen returns ascending order; store descending.
  Matrix vecs = eig.eigenvectors().rowwise().reverse();
  Vector vals = eig.eigenvalues().reverse();
  fix_signs(vecs, static_cast<Matrix*>(nullptr));
  const double top = std::max(vals(0), 0.0);
  const double floor = kEvdFloor * top;
  Vector roots(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vals(i) > floor) ++out.retained;
    roots(i) = std::sqrt(std::max(vals(i), floor));
  }
  out.mode = FactorMode::evd_fallback;
  out.jitter_used = 0.0;
  out.factor = vecs * roots.asDiagonal();
  out.eigenvectors = std::move(vecs);
  out.sqrt_eigenvalues = std::move(roots);
  return out;
}

Matrix solve_factor(const FactorResult& f, const Matrix& b, Side side, std::string_view role) {
  const Eigen::Index n = f.factor.rows();
  const bool left = side == Side::left_inverse || side == Side::left_inverse_transpose;
  const Eigen::Index contracted = left ? b.rows() : b.cols();
  if (f.factor.cols() != n || contracted != n) {
    std::ostringstream os;
    os << "solve_factor: factor of order " << n << " cannot act on " << describe(role, b);
    throw ContractViolation(os.str());
  }

  if (f.mode == FactorMode::cholesky) {
    check_invertible_triangular(f, role);
    const auto lower = f.factor.triangularView<Eigen::Lower>();
    switch (side) {
      case Side::left_inverse:
        return lower.solve(b);
      case Side::left_inverse_transpose:
        return lower.transpose().solve(b);
      case Side::right_inverse:
        // b F^-1 = (F^-T b^T)^T
        return lower.transpose().solve(b.transpose()).transpose();
      case Side::right_inverse_transpose:
        return lower.solve(b.transpose()).transpose();
    }
  }

  // EVD factor F = U S with U orthogonal and S floored, so F^-1 = S^-1 U^T.
  if (f.rank() == 0) {
    throw NumericalError("solve_factor: factor for " + std::string(role) +
                         " has no retained eigenvalues; the statistics are identically zero");
  }
  const Vector inv = f.sqrt_eigenvalues.cwiseInverse();
  const Matrix& u = f.eigenvectors;
  switch (side) {
    case Side::left_inverse:
      return inv.asDiagonal() * (u.transpose() * b);
    case Side::left_inverse_transpose:
      return u * (inv.asDiagonal() * b);
    case Side::right_inverse:
      return (b * inv.asDiagonal()) * u.transpose();
    case Side::right_inverse_transpose:
      return (b * u) * inv.asDiagonal();
  }
  return {};
}

}  // namespace sfsvd
