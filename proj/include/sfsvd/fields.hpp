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

// Scalar/vector fields on a periodic uniform 2D grid, synthetic data
// generators, and the central-difference stencils used by the losses.
//
// Indexing: channel c, row i (y axis, 0..H-1), column j (x axis, 0..W-1).
// Data is channel-major then row-major. x = j * spacing, y = i * spacing.

#pragma once

#include "sfsvd/exec.hpp"
#include "sfsvd/linalg.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace sfsvd {

struct GridShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  double spacing = 1.0;

  std::size_t cells() const { return height * width; }
  std::size_t size() const { return channels * height * width; }
  bool operator==(const GridShape&) const = default;
};

/// Unit-period grid: spacing = 1 / width.
GridShape unit_grid(std::size_t channels, std::size_t height, std::size_t width);

struct GridField {
  GridShape shape;
  Vector data;

  GridField() = default;
  explicit GridField(GridShape s);
  GridField(GridShape s, Vector values);

  double& at(std::size_t c, std::size_t i, std::size_t j) {
    return data[static_cast<Eigen::Index>((c * shape.height + i) * shape.width + j)];
  }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return data[static_cast<Eigen::Index>((c * shape.height + i) * shape.width + j)];
  }
  /// View of one channel's H*W block.
  Eigen::Map<const Vector> channel(std::size_t c) const;
  Eigen::Map<Vector> channel(std::size_t c);
};

enum class Axis { x, y };

/// Finite-difference multi-index; compact second differences for xx / yy,
/// D_x D_y for the mixed term.
enum class Derivative { none, x, y, xx, xy, yy };

/// Multi-indices of total order <= p, in the fixed order (), x, y, xx, xy, yy.
std::vector<Derivative> derivatives_up_to(int order);
int derivative_order(Derivative d);
const char* derivative_name(Derivative d);

enum class StencilScheme { central_periodic };

struct StencilSet {
  StencilScheme scheme = StencilScheme::central_periodic;
  double spacing = 1.0;
};

/// One Fourier mode of a synthetic field.
struct Mode {
  int kx = 0;
  int ky = 0;
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Evaluates sum_m a_m sin(2 pi (kx x + ky y) / L + phi_m) with L = W * spacing,
/// the same mode list on every channel.
GridField eval_modes(const GridShape& shape, const std::vector<Mode>& modes);

/// Seeded random field; each channel draws its own num_modes modes with
/// integer wavenumbers in [-K, K]^2 \ {0}, K = max(1, min(H, W) / 4), and
/// amplitudes N(0, 1) * (1 + |k|)^-decay.
GridField gen_grf(std::uint64_t seed, const GridShape& shape, std::size_t num_modes, double decay);

/// Stream-function construction (u, v) = (D_y psi, -D_x psi) with psi = gen_grf.
GridField gen_divfree(std::uint64_t seed, const GridShape& shape, std::size_t num_modes = 6,
                      double decay = 1.5);
/// Same construction from a given single-channel stream function.
GridField divfree_from_stream(const GridField& psi);

struct HeatStep {
  double nu = 0.0;
  double dt = 0.0;
};
struct AdvectStep {
  double cx = 0.0;
  double cy = 0.0;
  double dt = 0.0;
};
using TeacherOperator = std::variant<HeatStep, AdvectStep>;

/// Heat step at half the explicit stability bound for this grid.
HeatStep default_heat_step(const GridShape& shape);

GridField apply_operator(const GridField& field, const TeacherOperator& op);

GridField fd_derivative(const GridField& field, Axis axis, const StencilSet& stencils,
                        Exec exec = Exec::serial);
GridField fd_derivative(const GridField& field, Axis axis, Exec exec = Exec::serial);
GridField fd_laplacian(const GridField& field, Exec exec = Exec::serial);
/// D^alpha applied channel-wise.
GridField fd_apply(const GridField& field, Derivative d, Exec exec = Exec::serial);
/// Adjoint of D^alpha under the Euclidean inner product on grid values.
GridField fd_apply_adjoint(const GridField& field, Derivative d, Exec exec = Exec::serial);

GridField fd_divergence(const GridField& velocity);
GridField fd_vorticity(const GridField& velocity);

double inner(const GridField& a, const GridField& b);
double max_abs(const GridField& f);

}  // namespace sfsvd
