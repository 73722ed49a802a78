#include "support.hpp"

#include "sfsvd/errors.hpp"
#include "sfsvd/linalg.hpp"

#include <doctest.h>

#include <cmath>

using namespace sfsvd;
using namespace sfsvd::testing;

namespace {

Matrix reconstruct(const SvdResult& d) { return d.u * d.singular_values.asDiagonal() * d.vt; }

Matrix diag3(double a, double b, double c) {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return m;
}

}  // namespace

TEST_CASE("svd of identity and diagonal matrices") {
  const SvdResult id = svd(Matrix::Identity(3, 3));
  CHECK(max_abs(id.singular_values - Vector::Ones(3)) == 0.0);

  const SvdResult d = svd(diag3(3, 2, 1));
  CHECK(d.singular_values(0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(d.singular_values(1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(d.singular_values(2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(max_abs(d.u.cwiseAbs() - Matrix::Identity(3, 3)) < 1e-14);
  CHECK(max_abs(d.vt.cwiseAbs() - Matrix::Identity(3, 3)) < 1e-14);
}

TEST_CASE("svd reconstructs and is orthonormal on seeded matrices") {
  const Matrix a = gaussian(5, 3, 11);
  CHECK(max_abs(reconstruct(svd(a)) - a) < 1e-10);

  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(seed * 5 % 64);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(seed * 11 % 64);
    const Matrix b = gaussian(m, n, 100 + seed);
    const SvdResult d = svd(b);
    const Eigen::Index r = std::min(m, n);
    CHECK(max_abs(d.u.transpose() * d.u - Matrix::Identity(r, r)) < 1e-12);
    CHECK(max_abs(d.vt * d.vt.transpose() - Matrix::Identity(r, r)) < 1e-12);
    CHECK(max_abs(reconstruct(d) - b) < 1e-10 * std::max(1.0, max_abs(b)));
    for (Eigen::Index i = 1; i < r; ++i) CHECK(d.singular_values(i) <= d.singular_values(i - 1));
  }
}

TEST_CASE("svd rejects empty and non-finite input") {
  CHECK_THROWS_AS(svd(Matrix(0, 3)), ContractViolation);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(svd(bad), ContractViolation);
}

TEST_CASE("truncated_svd tail error") {
  const Matrix d = diag3(3, 2, 1);
  auto [a3, b3] = truncated_svd(d, 3);
  CHECK(max_abs(a3 * b3 - d) < 1e-14);
  auto [a2, b2] = truncated_svd(d, 2);
  CHECK((a2 * b2 - d).norm() == doctest::Approx(1.0).epsilon(1e-14));

  const Matrix r = gaussian(7, 5, 3);
  const Vector s = svd(r).singular_values;
  for (std::size_t k = 1; k <= 5; ++k) {
    auto [a, b] = truncated_svd(r, k);
    const double tail = s.tail(5 - static_cast<Eigen::Index>(k)).squaredNorm();
    if (k < 5) CHECK(rel_diff((a * b - r).squaredNorm(), tail) < 1e-10);
    // Singular values split evenly: both factors have the same column / row norms.
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(k); ++i) {
      CHECK(a.col(i).norm() == doctest::Approx(b.row(i).norm()).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(truncated_svd(d, 0), ContractViolation);
  CHECK_THROWS_AS(truncated_svd(d, 4), ContractViolation);
}

TEST_CASE("truncated_svd beats random rank-2 candidates") {
  const Matrix a = gaussian(4, 4, 21);
  auto [l, r] = truncated_svd(a, 2);
  const double best = (a - l * r).norm();
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const Matrix cand = gaussian(4, 2, 1000 + t) * gaussian(2, 4, 5000 + t);
    // Also try candidates scaled towards a's magnitude so they are not trivially bad.
    const double scale = (cand.array() * a.array()).sum() / std::max(cand.squaredNorm(), 1e-300);
    CHECK(best <= (a - scale * cand).norm() + 1e-12);
  }
}

TEST_CASE("factor_spd examples") {
  const FactorResult id = factor_spd(Matrix::Identity(2, 2));
  CHECK(id.mode == FactorMode::cholesky);
  CHECK(id.jitter_used == 0.0);
  CHECK(max_abs(id.factor - Matrix::Identity(2, 2)) == 0.0);

  Matrix s(2, 2);
  s << 4, 2, 2, 3;
  const FactorResult f = factor_spd(s);
  Matrix expect(2, 2);
  expect << 2, 0, 1, std::sqrt(2.0);
  CHECK(max_abs(f.factor - expect) < 1e-15);
  CHECK(max_abs(f.factor * f.factor.transpose() - s) < 1e-14);

  Matrix vvt = Matrix::Ones(2, 2);
  const FactorResult ev = factor_spd(vvt);
  CHECK(ev.mode == FactorMode::evd_fallback);
  CHECK((ev.factor * ev.factor.transpose() - vvt).norm() <= 1e-6 * vvt.norm());
  CHECK(ev.rank() == 1);
}

TEST_CASE("factor_spd rejects asymmetric input") {
  Matrix s = Matrix::Identity(3, 3);
  s(0, 2) = 0.5;
  CHECK_THROWS_AS(factor_spd(s), ContractViolation);
}

TEST_CASE("factor_spd reconstructs rank-deficient PSD matrices") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::Index n = 12;
    const Matrix a = gaussian(n, 1 + static_cast<Eigen::Index>(seed), 40 + seed);
    const Matrix s = a * a.transpose();
    const FactorResult f = factor_spd(s);
    CHECK((f.factor * f.factor.transpose() - s).norm() <= 1e-6 * s.norm());
  }
}

TEST_CASE("Cholesky and EVD paths agree on positive definite input") {
  const Matrix s = random_spd(9, 8);
  const FactorResult chol = factor_spd(s);
  REQUIRE(chol.mode == FactorMode::cholesky);
  // A schedule whose floor can never be met forces the EVD path.
  const std::array<double, 1> huge{1e6};
  const FactorResult evd = factor_spd(s, huge);
  REQUIRE(evd.mode == FactorMode::evd_fallback);
  CHECK((chol.factor * chol.factor.transpose() - evd.factor * evd.factor.transpose()).norm() <=
        1e-8 * s.norm());
}

TEST_CASE("solve_factor examples") {
  const Matrix b = gaussian(3, 4, 2);
  CHECK(max_abs(solve_factor(identity_factor(3), b, Side::left_inverse) - b) == 0.0);

  FactorResult d;
  d.factor = Matrix::Zero(2, 2);
  d.factor(0, 0) = 2;
  d.factor(1, 1) = 4;
  const Matrix inv = solve_factor(d, Matrix::Identity(2, 2), Side::left_inverse);
  CHECK(inv(0, 0) == 0.5);
  CHECK(inv(1, 1) == 0.25);
  CHECK(inv(0, 1) == 0.0);
}

TEST_CASE("solve_factor residuals on every side") {
  FactorResult f;
  f.factor = gaussian(5, 5, 9).triangularView<Eigen::Lower>();
  f.factor.diagonal() = f.factor.diagonal().cwiseAbs().array() + 1.0;
  const Matrix b = gaussian(5, 3, 10);
  const Matrix bt = b.transpose();
  CHECK(max_abs(f.factor * solve_factor(f, b, Side::left_inverse) - b) < 1e-10);
  CHECK(max_abs(f.factor.transpose() * solve_factor(f, b, Side::left_inverse_transpose) - b) < 1e-10);
  CHECK(max_abs(solve_factor(f, bt, Side::right_inverse) * f.factor - bt) < 1e-10);
  CHECK(max_abs(solve_factor(f, bt, Side::right_inverse_transpose) * f.factor.transpose() - bt) <
        1e-10);
}

TEST_CASE("EVD factors of singular matrices are floored and invertible") {
  const Matrix a = gaussian(6, 2, 77);
  const Matrix s = a * a.transpose();
  const FactorResult f = factor_spd(s);
  REQUIRE(f.mode == FactorMode::evd_fallback);
  CHECK(f.rank() == 2);
  CHECK((f.factor * f.factor.transpose() - s).norm() <= 1e-6 * s.norm());
  const Matrix b = gaussian(6, 3, 78);
  CHECK(max_abs(f.factor * solve_factor(f, b, Side::left_inverse) - b) < 1e-9 * max_abs(b) / kEvdFloor);
  CHECK(max_abs(solve_factor(f, f.factor, Side::left_inverse) - Matrix::Identity(6, 6)) < 1e-6);
}

TEST_CASE("solve_factor reports singular triangular factors") {
  FactorResult f;
  f.factor = Matrix::Identity(3, 3);
  f.factor(2, 2) = 0.0;
  CHECK_THROWS_AS(solve_factor(f, Matrix::Identity(3, 3), Side::left_inverse, "layer 4"),
                  NumericalError);
  try {
    solve_factor(f, Matrix::Identity(3, 3), Side::left_inverse, "layer 4");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("layer 4") != std::string::npos);
  }
}
