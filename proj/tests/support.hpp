// Shared helpers for the test binaries: seeded matrices and tiny models.

#pragma once

#include "sfsvd/dataset.hpp"
#include "sfsvd/linalg.hpp"
#include "sfsvd/losses.hpp"
#include "sfsvd/netcore.hpp"

#include <cstdint>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sfsvd::testing {

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline Vector gaussian_vector(Eigen::Index n, std::uint64_t seed) {
  return gaussian(n, 1, seed).col(0);
}

/// A A^T / n + shift I; positive definite for shift > 0.
inline Matrix random_spd(Eigen::Index n, std::uint64_t seed, double shift = 0.1) {
  const Matrix a = gaussian(n, n + 3, seed);
  return a * a.transpose() / static_cast<double>(n) + shift * Matrix::Identity(n, n);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline LinearLayer dense(Matrix w, Vector b, Activation act) {
  return LinearLayer{std::move(w), std::move(b), act};
}

/// Dataset on a 1 x 1 x d grid from explicit vectors.
inline Dataset flat_dataset(const std::vector<Vector>& xs, const std::vector<Vector>& ys,
                            std::vector<std::string> tags = {"a"}, std::vector<std::size_t> tag_of = {}) {
  Dataset d;
  d.grid = GridShape{1, 1, static_cast<std::size_t>(xs.at(0).size()), 1.0};
  d.tags = std::move(tags);
  for (std::size_t n = 0; n < xs.size(); ++n) {
    d.samples.push_back({GridField(d.grid, xs[n]), GridField(d.grid, ys[n]), tag_of.empty() ? 0 : tag_of[n]});
  }
  return d;
}

/// Gaussian inputs and targets, tags cycling over `groups`.
inline Dataset random_dataset(std::size_t dim, std::size_t n, std::uint64_t seed, std::size_t groups = 1) {
  std::vector<Vector> xs, ys;
  std::vector<std::size_t> tag_of;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(gaussian_vector(static_cast<Eigen::Index>(dim), seed + 2 * i));
    ys.push_back(gaussian_vector(static_cast<Eigen::Index>(dim), seed + 2 * i + 1));
    tag_of.push_back(i % groups);
  }
  std::vector<std::string> tags;
  for (std::size_t g = 0; g < groups; ++g) tags.push_back("group" + std::to_string(g));
  return flat_dataset(xs, ys, tags, tag_of);
}

}  // namespace sfsvd::testing

namespace sfsvd::testing {

/// Loss as a function of the linear output Z_i, holding parameters fixed.
inline double loss_from_z(const SequentialModel& model, std::size_t layer, Vector z, const Vector& target,
                          const LossConfig& loss) {
  Vector a = apply_activation(model.activation(layer), z);
  for (std::size_t l = layer + 1; l < model.num_layers(); ++l) {
    z = model.dense_weight(l) * a + model.bias(l);
    a = apply_activation(model.activation(l), z);
  }
  return combined_loss(a, target, loss);
}

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Central differences of the loss in every Z_i coordinate against
/// backward(). Coordinates where the two one-sided quotients disagree
/// (an l1 kink inside the stencil) are skipped. Relative error uses a floor
/// of 1e-3 times the largest gradient entry of the layer.
inline FdReport fd_check(const SequentialModel& model, const Vector& x, const Vector& target,
                         const LossConfig& loss, double h = 1e-5) {
  const ForwardTrace trace = forward(model, x);
  const GradTrace grads = backward(model, trace, target, loss);
  FdReport rep;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const Vector& z = trace.linear_outputs[l];
    const Vector& g = grads.z_grads[l];
    const double f0 = loss_from_z(model, l, z, target, loss);
    const double floor = std::max(1e-3 * g.cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Vector zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      const double fp = loss_from_z(model, l, zp, target, loss);
      const double fm = loss_from_z(model, l, zm, target, loss);
      const double fwd = (fp - f0) / h;
      const double bwd = (f0 - fm) / h;
      if (std::abs(fwd - bwd) > 1e-3 * std::max({std::abs(fwd), std::abs(bwd), floor})) {
        ++rep.skipped;
        continue;
      }
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), floor});
      rep.max_rel_error = std::max(rep.max_rel_error, err);
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace sfsvd::testing
