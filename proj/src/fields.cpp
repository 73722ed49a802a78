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

#include "sfsvd/fields.hpp"

#include "sfsvd/errors.hpp"
#include "sfsvd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace sfsvd {
namespace {

void require_grid(const GridShape& s, const char* what) {
  if (s.channels == 0 || s.height == 0 || s.width == 0 || !(s.spacing > 0.0)) {
    std::ostringstream os;
    os << what << ": invalid grid " << s.channels << "x" << s.height << "x" << s.width
       << " spacing " << s.spacing;
    throw ContractViolation(os.str());
  }
}

void require_velocity(const GridField& f, const char* what) {
  if (f.shape.channels != 2) {
    std::ostringstream os;
    os << what << ": expected a 2-channel velocity field, got " << f.shape.channels
       << " channel(s)";
    throw ContractViolation(os.str());
  }
}

std::span<const double> channel_span(const GridField& f, std::size_t c) {
  return {f.data.data() + c * f.shape.cells(), f.shape.cells()};
}
std::span<double> channel_span(GridField& f, std::size_t c) {
  return {f.data.data() + c * f.shape.cells(), f.shape.cells()};
}

GridField first_difference(const GridField& f, Axis axis, double spacing, Exec exec) {
  GridField out(f.shape);
  const double scale = 1.0 / (2.0 * spacing);
  for (std::size_t c = 0; c < f.shape.channels; ++c) {
    if (exec == Exec::parallel) {
      kernels::central_difference_omp(channel_span(f, c), channel_span(out, c), f.shape.height,
                                      f.shape.width, axis == Axis::x, scale);
    } else {
      kernels::central_difference_serial(channel_span(f, c), channel_span(out, c),
                                         f.shape.height, f.shape.width, axis == Axis::x, scale);
    }
  }
  return out;
}

GridField second_difference(const GridField& f, Axis axis, Exec exec) {
  GridField out(f.shape);
  const double scale = 1.0 / (f.shape.spacing * f.shape.spacing);
  for (std::size_t c = 0; c < f.shape.channels; ++c) {
    if (exec == Exec::parallel) {
      kernels::second_difference_omp(channel_span(f, c), channel_span(out, c), f.shape.height,
                                     f.shape.width, axis == Axis::x, scale);
    } else {
      kernels::second_difference_serial(channel_span(f, c), channel_span(out, c),
                                        f.shape.height, f.shape.width, axis == Axis::x, scale);
    }
  }
  return out;
}

}  // namespace

GridShape unit_grid(std::size_t channels, std::size_t height, std::size_t width) {
  return GridShape{channels, height, width, 1.0 / static_cast<double>(width)};
}

GridField::GridField(GridShape s) : shape(s), data(Vector::Zero(static_cast<Eigen::Index>(s.size()))) {}

GridField::GridField(GridShape s, Vector values) : shape(s), data(std::move(values)) {
  if (static_cast<std::size_t>(data.size()) != shape.size()) {
    std::ostringstream os;
    os << "GridField: " << data.size() << " values for a " << shape.channels << "x"
       << shape.height << "x" << shape.width << " grid";
    throw ContractViolation(os.str());
  }
}

Eigen::Map<const Vector> GridField::channel(std::size_t c) const {
  return {data.data() + c * shape.cells(), static_cast<Eigen::Index>(shape.cells())};
}
Eigen::Map<Vector> GridField::channel(std::size_t c) {
  return {data.data() + c * shape.cells(), static_cast<Eigen::Index>(shape.cells())};
}

std::vector<Derivative> derivatives_up_to(int order) {
  std::vector<Derivative> out{Derivative::none};
  if (order >= 1) {
    out.push_back(Derivative::x);
    out.push_back(Derivative::y);
  }
  if (order >= 2) {
    out.push_back(Derivative::xx);
    out.push_back(Derivative::xy);
    out.push_back(Derivative::yy);
  }
  return out;
}

int derivative_order(Derivative d) {
  switch (d) {
    case Derivative::none:
      return 0;
    case Derivative::x:
    case Derivative::y:
      return 1;
    default:
      return 2;
  }
}

const char* derivative_name(Derivative d) {
  switch (d) {
    case Derivative::none:
      return "()";
    case Derivative::x:
      return "x";
    case Derivative::y:
      return "y";
    case Derivative::xx:
      return "xx";
    case Derivative::xy:
      return "xy";
    case Derivative::yy:
      return "yy";
  }
  return "?";
}

GridField eval_modes(const GridShape& shape, const std::vector<Mode>& modes) {
  require_grid(shape, "eval_modes");
  GridField out(shape);
  const double period = static_cast<double>(shape.width) * shape.spacing;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t i = 0; i < shape.height; ++i) {
      const double y = static_cast<double>(i) * shape.spacing;
      for (std::size_t j = 0; j < shape.width; ++j) {
        const double x = static_cast<double>(j) * shape.spacing;
        double v = 0.0;
        for (const Mode& m : modes) {
          v += m.amplitude * std::sin(two_pi * (m.kx * x + m.ky * y) / period + m.phase);
        }
        out.at(c, i, j) = v;
      }
    }
  }
  return out;
}

GridField gen_grf(std::uint64_t seed, const GridShape& shape, std::size_t num_modes, double decay) {
  require_grid(shape, "gen_grf");
  if (num_modes < 1) throw ContractViolation("gen_grf: num_modes must be >= 1");
  if (!(decay > 0.0)) throw ContractViolation("gen_grf: decay must be > 0");

  std::mt19937_64 rng(seed);
  const int kmax = std::max<int>(1, static_cast<int>(std::min(shape.height, shape.width) / 4));
  std::uniform_int_distribution<int> wave(-kmax, kmax);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  GridField out(shape);
  GridShape single = shape;
  single.channels = 1;
  for (std::size_t c = 0; c < shape.channels; ++c) {
    std::vector<Mode> modes;
    modes.reserve(num_modes);
    while (modes.size() < num_modes) {
      Mode m;
      m.kx = wave(rng);
      m.ky = wave(rng);
      if (m.kx == 0 && m.ky == 0) continue;
      const double knorm = std::hypot(static_cast<double>(m.kx), static_cast<double>(m.ky));
      m.amplitude = gauss(rng) * std::pow(1.0 + knorm, -decay);
      m.phase = angle(rng);
      modes.push_back(m);
    }
    out.channel(c) = eval_modes(single, modes).data;
  }
  return out;
}

GridField divfree_from_stream(const GridField& psi) {
  if (psi.shape.channels != 1) {
    throw ContractViolation("divfree_from_stream: stream function must have one channel");
  }
  if (psi.shape.height < 4 || psi.shape.width < 4) {
    throw ContractViolation("divfree_from_stream: grid must be at least 4x4");
  }
  const GridField dy = fd_derivative(psi, Axis::y);
  const GridField dx = fd_derivative(psi, Axis::x);
  GridShape vel = psi.shape;
  vel.channels = 2;
  GridField out(vel);
  out.channel(0) = dy.data;
  out.channel(1) = -dx.data;
  return out;
}

GridField gen_divfree(std::uint64_t seed, const GridShape& shape, std::size_t num_modes,
                      double decay) {
  GridShape scalar = shape;
  scalar.channels = 1;
  return divfree_from_stream(gen_grf(seed, scalar, num_modes, decay));
}

HeatStep default_heat_step(const GridShape& shape) {
  return HeatStep{0.125 * shape.spacing * shape.spacing, 1.0};
}

GridField apply_operator(const GridField& field, const TeacherOperator& op) {
  require_grid(field.shape, "apply_operator");
  if (const auto* heat = std::get_if<HeatStep>(&op)) {
    const double h = field.shape.spacing;
    const double number = heat->nu * heat->dt / (h * h);
    if (!(number <= 0.25 * (1.0 + 1e-12)) || heat->nu < 0.0 || heat->dt < 0.0) {
      std::ostringstream os;
      os << "heat_step: nu*dt/h^2 = " << number << " violates the stability bound 0.25";
      throw ConfigError("heat_step", os.str());
    }
    GridField out = field;
    out.data += (heat->nu * heat->dt) * fd_laplacian(field).data;
    return out;
  }
  const auto& adv = std::get<AdvectStep>(op);
  GridField out = field;
  if (adv.cx != 0.0) out.data -= (adv.dt * adv.cx) * fd_derivative(field, Axis::x).data;
  if (adv.cy != 0.0) out.data -= (adv.dt * adv.cy) * fd_derivative(field, Axis::y).data;
  return out;
}

GridField fd_derivative(const GridField& field, Axis axis, const StencilSet& stencils, Exec exec) {
  require_grid(field.shape, "fd_derivative");
  if (!(stencils.spacing > 0.0)) throw ContractViolation("fd_derivative: spacing must be > 0");
  return first_difference(field, axis, stencils.spacing, exec);
}

GridField fd_derivative(const GridField& field, Axis axis, Exec exec) {
  return fd_derivative(field, axis, StencilSet{StencilScheme::central_periodic, field.shape.spacing},
                       exec);
}

GridField fd_laplacian(const GridField& field, Exec exec) {
  GridField out = second_difference(field, Axis::x, exec);
  out.data += second_difference(field, Axis::y, exec).data;
  return out;
}

GridField fd_apply(const GridField& field, Derivative d, Exec exec) {
  switch (d) {
    case Derivative::none:
      return field;
    case Derivative::x:
      return fd_derivative(field, Axis::x, exec);
    case Derivative::y:
      return fd_derivative(field, Axis::y, exec);
    case Derivative::xx:
      return second_difference(field, Axis::x, exec);
    case Derivative::yy:
      return second_difference(field, Axis::y, exec);
    case Derivative::xy:
      return fd_derivative(fd_derivative(field, Axis::y, exec), Axis::x, exec);
  }
  return field;
}

GridField fd_apply_adjoint(const GridField& field, Derivative d, Exec exec) {
  switch (d) {
    case Derivative::x:
    case Derivative::y: {
      GridField out = fd_apply(field, d, exec);
      out.data = -out.data;
      return out;
    }
    case Derivative::xy:
      // (D_x D_y)^T = D_y^T D_x^T = D_y D_x
      return fd_derivative(fd_derivative(field, Axis::x, exec), Axis::y, exec);
    default:
      return fd_apply(field, d, exec);
  }
}

GridField fd_divergence(const GridField& velocity) {
  require_velocity(velocity, "fd_divergence");
  GridShape scalar = velocity.shape;
  scalar.channels = 1;
  GridField u(scalar, velocity.channel(0));
  GridField v(scalar, velocity.channel(1));
  GridField out = fd_derivative(u, Axis::x);
  out.data += fd_derivative(v, Axis::y).data;
  return out;
}

GridField fd_vorticity(const GridField& velocity) {
  require_velocity(velocity, "fd_vorticity");
  GridShape scalar = velocity.shape;
  scalar.channels = 1;
  GridField u(scalar, velocity.channel(0));
  GridField v(scalar, velocity.channel(1));
  GridField out = fd_derivative(v, Axis::x);
  out.data -= fd_derivative(u, Axis::y).data;
  return out;
}

double inner(const GridField& a, const GridField& b) {
  if (!(a.shape == b.shape)) throw ContractViolation("inner: grid mismatch");
  return a.data.dot(b.data);
}

double max_abs(const GridField& f) {
  return f.data.size() ? f.data.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace sfsvd
