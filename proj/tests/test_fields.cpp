#include "support.hpp"

#include "sfsvd/dataset.hpp"
#include "sfsvd/errors.hpp"
#include "sfsvd/fields.hpp"
#include "sfsvd/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sfsvd;
using namespace sfsvd::testing;

namespace {

GridField row_pattern(std::size_t height) {
  GridShape g{1, height, 4, 1.0};
  GridField f(g);
  const double row[4] = {0, 1, 0, -1};
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < 4; ++j) f.at(0, i, j) = row[j];
  return f;
}

GridField constant(GridShape g, double v) {
  GridField f(g);
  f.data.setConstant(v);
  return f;
}

}  // namespace

TEST_CASE("single mode on a 4x4 grid") {
  const GridShape g{1, 4, 4, 1.0};
  const GridField f = eval_modes(g, {Mode{1, 0, 1.0, 0.0}});
  const double expect[4] = {0, 1, 0, -1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(f.at(0, i, j) == doctest::Approx(expect[j]).epsilon(1e-15));
  CHECK(std::abs(f.data.mean()) < 1e-15);
}

TEST_CASE("gen_grf is a pure function of the seed") {
  const GridShape g = unit_grid(2, 8, 8);
  const GridField a = gen_grf(3, g, 6, 1.5);
  const GridField b = gen_grf(3, g, 6, 1.5);
  const GridField c = gen_grf(4, g, 6, 1.5);
  CHECK(max_abs(a.data - b.data) == 0.0);
  CHECK(max_abs(a.data - c.data) > 0.0);
  CHECK_THROWS_AS(gen_grf(3, g, 0, 1.5), ContractViolation);
}

TEST_CASE("gen_divfree is discretely divergence free") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GridField v = gen_divfree(seed, unit_grid(2, 8 + seed % 3, 8 + seed % 5));
    CHECK(div_free_error(v) <= 1e-12);
    CHECK(max_abs(fd_divergence(v)) <= 1e-12);
  }
}

TEST_CASE("divfree_from_stream examples") {
  const GridShape g = unit_grid(1, 8, 8);
  const GridField flat = divfree_from_stream(constant(g, 2.5));
  CHECK(max_abs(flat.data) == 0.0);

  const GridField psi = eval_modes(g, {Mode{1, 0, 1.0, 0.3}});
  const GridField vel = divfree_from_stream(psi);
  const GridField dx = fd_derivative(psi, Axis::x);
  CHECK(max_abs(vel.channel(0)) < 1e-13);
  CHECK(max_abs(vel.channel(1) + dx.channel(0)) == 0.0);
  CHECK_THROWS_AS(divfree_from_stream(GridField(unit_grid(1, 3, 8))), ContractViolation);
}

TEST_CASE("apply_operator examples") {
  const GridShape g = unit_grid(1, 8, 8);
  const HeatStep heat = default_heat_step(g);
  CHECK(max_abs(apply_operator(constant(g, 1.7), heat).data - constant(g, 1.7).data) < 1e-15);

  const GridField mode = eval_modes(g, {Mode{1, 0, 1.0, 0.0}});
  const double h = g.spacing;
  const double lambda = 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi / 8.0)) / (h * h);
  const GridField stepped = apply_operator(mode, heat);
  CHECK(max_abs(stepped.data - (1.0 - heat.nu * heat.dt * lambda) * mode.data) < 1e-13);

  const GridField f = gen_grf(9, g, 6, 1.5);
  CHECK(max_abs(apply_operator(f, AdvectStep{0.0, 0.0, 0.3}).data - f.data) == 0.0);

  CHECK_THROWS_AS(apply_operator(f, HeatStep{1.0, 1.0}), ConfigError);
}

TEST_CASE("hand stencil examples") {
  const GridField f = row_pattern(3);
  const GridField dx = fd_derivative(f, Axis::x);
  const double expect[4] = {1, 0, -1, 0};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(dx.at(0, i, j) == expect[j]);
  CHECK(max_abs(fd_derivative(f, Axis::y).data) == 0.0);

  const GridShape g = unit_grid(1, 6, 5);
  CHECK(max_abs(fd_derivative(constant(g, 3.0), Axis::x).data) == 0.0);
  CHECK(max_abs(fd_derivative(constant(g, 3.0), Axis::y).data) == 0.0);
  CHECK(max_abs(fd_laplacian(constant(g, 3.0)).data) == 0.0);
}

TEST_CASE("second differences by hand") {
  const GridField f = row_pattern(1);
  const GridField dxx = fd_apply(f, Derivative::xx);
  // (f(j+1) - 2 f(j) + f(j-1)) / h^2 on (0, 1, 0, -1)
  const double expect[4] = {0, -2, 0, 2};
  for (std::size_t j = 0; j < 4; ++j) CHECK(dxx.at(0, 0, j) == expect[j]);
}

TEST_CASE("discrete operators are linear, commute and have the stated adjoints") {
  const GridShape g = unit_grid(2, 8, 12);
  const GridField a = gen_grf(1, g, 6, 1.5);
  const GridField b = gen_grf(2, g, 6, 1.5);
  GridField combo(g, 2.0 * a.data - 0.5 * b.data);
  for (Derivative d : derivatives_up_to(2)) {
    const Vector lhs = fd_apply(combo, d).data;
    const Vector rhs = 2.0 * fd_apply(a, d).data - 0.5 * fd_apply(b, d).data;
    CHECK(max_abs(lhs - rhs) <= 1e-10 * std::max(1.0, max_abs(lhs)));
    CHECK(std::abs(inner(fd_apply(a, d), b) - inner(a, fd_apply_adjoint(b, d))) <=
          1e-12 * std::max(1.0, max_abs(fd_apply(a, d).data) * static_cast<double>(g.size())));
  }
  const GridField xy = fd_derivative(fd_derivative(a, Axis::y), Axis::x);
  const GridField yx = fd_derivative(fd_derivative(a, Axis::x), Axis::y);
  CHECK(max_abs(xy.data - yx.data) <= 1e-13 * max_abs(a.data) / (g.spacing * g.spacing));
  const double adj = inner(fd_derivative(a, Axis::x), b) + inner(a, fd_derivative(b, Axis::x));
  CHECK(std::abs(adj) <= 1e-12 * static_cast<double>(g.size()) * max_abs(a.data) * max_abs(b.data) / g.spacing);
}

TEST_CASE("vector operators need two channels") {
  const GridField s(unit_grid(1, 4, 4));
  CHECK_THROWS_AS(fd_divergence(s), ContractViolation);
  CHECK_THROWS_AS(fd_vorticity(s), ContractViolation);
}

TEST_CASE("serial and OpenMP stencils agree bitwise") {
  const GridField f = gen_grf(5, unit_grid(2, 16, 16), 8, 1.2);
  for (Derivative d : derivatives_up_to(2)) {
    CHECK(max_abs(fd_apply(f, d, Exec::serial).data - fd_apply(f, d, Exec::parallel).data) == 0.0);
  }
}

TEST_CASE("generate_dataset is seeded, cycles tags and applies teachers") {
  DatasetSpec spec;
  spec.grid = unit_grid(2, 8, 8);
  spec.kind = FieldKind::divfree;
  spec.tags = {"heat", "advect"};
  spec.tag_scales = {1.0, 3.0};
  spec.num_samples = 6;
  const Dataset a = generate_dataset(spec, 17);
  const Dataset b = generate_dataset(spec, 17);
  REQUIRE(a.size() == 6);
  for (std::size_t n = 0; n < 6; ++n) {
    CHECK(a.samples[n].tag == n % 2);
    CHECK(max_abs(a.samples[n].input.data - b.samples[n].input.data) == 0.0);
    CHECK(div_free_error(a.samples[n].input) <= 1e-12);
    const TeacherOperator op = teacher_for_tag(spec.tags[a.samples[n].tag], spec.grid);
    CHECK(max_abs(apply_operator(a.samples[n].input, op).data - a.samples[n].target.data) == 0.0);
  }
  CHECK(a.subset(1).size() == 3);
  spec.tags = {"sound"};
  spec.tag_scales.clear();
  CHECK_THROWS_AS(generate_dataset(spec, 1), ConfigError);
}
