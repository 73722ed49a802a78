#include "support.hpp"

#include "sfsvd/calibration.hpp"
#include "sfsvd/errors.hpp"
#include "sfsvd/kernels.hpp"

#include <doctest.h>

#include <cmath>

using namespace sfsvd;
using namespace sfsvd::testing;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

SequentialModel net(std::size_t dim, std::uint64_t seed, Activation act = Activation::tanh) {
  ModelSpec spec;
  spec.input_dim = dim;
  spec.hidden = {dim + 2, dim};
  spec.output_dim = dim;
  spec.hidden_activation = act;
  spec.output_activation = act;
  return random_model(spec, seed);
}

}  // namespace

TEST_CASE("clean statistics from single samples") {
  const SequentialModel id({dense(Matrix::Identity(2, 2), Vector::Zero(2), Activation::identity)});
  const Dataset d = flat_dataset({vec({1, 2})}, {vec({0, 3})});
  const StatsGroups g = accumulate_clean_stats(id, d, LossConfig{}, Exec::serial);
  const LayerStats& s = g.at("a")[0];
  Matrix sxx(2, 2), fz(2, 2);
  sxx << 1, 2, 2, 4;
  fz << 1, -1, -1, 1;
  CHECK(max_abs(s.sigma_xx - sxx) == 0.0);
  CHECK(max_abs(s.fisher_z - fz) == 0.0);
  CHECK(s.n_samples == 1);
}

TEST_CASE("clean statistics average per-sample outer products") {
  const SequentialModel m = net(4, 3);
  const Dataset d = random_dataset(4, 2, 50);
  const StatsGroups g = accumulate_clean_stats(m, d, LossConfig{}, Exec::serial);
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    Matrix sxx = Matrix::Zero(m.in_dim(l), m.in_dim(l));
    Matrix fz = Matrix::Zero(m.out_dim(l), m.out_dim(l));
    for (const Sample& s : d.samples) {
      const ForwardTrace t = forward(m, s.input.data);
      const GradTrace gt = backward(m, t, s.target.data, LossConfig{});
      sxx += 0.5 * t.inputs[l] * t.inputs[l].transpose();
      fz += 0.5 * gt.z_grads[l] * gt.z_grads[l].transpose();
    }
    CHECK(max_abs(g.at("group0")[l].sigma_xx - sxx) <= 1e-14 * std::max(1.0, max_abs(sxx)));
    CHECK(max_abs(g.at("group0")[l].fisher_z - fz) <= 1e-14 * std::max(1.0, max_abs(fz)));
  }
}

TEST_CASE("statistics are symmetric PSD and thread-count independent") {
  const SequentialModel m = net(6, 4);
  const Dataset d = random_dataset(6, 70, 900, 2);
  const StatsGroups s = accumulate_clean_stats(m, d, LossConfig{}, Exec::serial);
  const StatsGroups p = accumulate_clean_stats(m, d, LossConfig{}, Exec::parallel);
  for (const auto& [tag, layers] : s) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (const Matrix* mat : {&layers[l].sigma_xx, &layers[l].fisher_z}) {
        CHECK(max_abs(*mat - mat->transpose()) <= 1e-12 * mat->norm());
        Eigen::SelfAdjointEigenSolver<Matrix> es(*mat);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * mat->trace() / static_cast<double>(mat->rows()));
      }
      CHECK(max_abs(layers[l].sigma_xx - p.at(tag)[l].sigma_xx) == 0.0);
      CHECK(max_abs(layers[l].fisher_z - p.at(tag)[l].fisher_z) == 0.0);
    }
  }
}

TEST_CASE("mean_outer chunking only moves roundoff") {
  const Matrix a = gaussian(9, 100, 1);
  const Matrix ref = a * a.transpose() / 100.0;
  for (std::size_t chunk : {1u, 7u, 32u, 1000u}) {
    CHECK(max_abs(kernels::mean_outer_serial(a, a, chunk) - ref) <= 1e-13 * max_abs(ref));
    CHECK(max_abs(kernels::mean_outer_serial(a, a, chunk) - kernels::mean_outer_omp(a, a, chunk)) == 0.0);
  }
}

TEST_CASE("non-finite gradients name the sample") {
  const SequentialModel m = net(3, 1);
  Dataset d = random_dataset(3, 4, 10);
  d.samples[2].target.data(1) = std::numeric_limits<double>::infinity();
  try {
    accumulate_clean_stats(m, d, LossConfig{}, Exec::serial);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
  }
}

TEST_CASE("pair statistics examples") {
  const SequentialModel m = net(4, 8);
  const Dataset d = random_dataset(4, 12, 300);
  const StatsGroups clean = accumulate_clean_stats(m, d, LossConfig{}, Exec::serial);
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const PairStats p = accumulate_pair_stats(m, m, d, l, Exec::serial);
    CHECK(max_abs(p.sigma_xpx - clean.at("group0")[l].sigma_xx) == 0.0);
    CHECK(max_abs(p.sigma_xpxp - clean.at("group0")[l].sigma_xx) == 0.0);
  }

  const Matrix w0 = m.dense_weight(0);
  auto [a, b] = truncated_svd(w0, 4);
  const SequentialModel exact = replace_layer(m, 0, FactoredLayer{a, b, m.bias(0), m.activation(0)});
  const PairStats pe = accumulate_pair_stats(m, exact, d, 2, Exec::serial);
  CHECK(max_abs(pe.sigma_xpx - clean.at("group0")[2].sigma_xx) <= 1e-8);
  CHECK(max_abs(pe.sigma_xpxp - clean.at("group0")[2].sigma_xx) <= 1e-8);

  std::vector<Layer> layers;
  for (std::size_t l = 0; l < 3; ++l) {
    layers.emplace_back(dense(m.dense_weight(l), Vector::Zero(static_cast<Eigen::Index>(m.out_dim(l))),
                              Activation::identity));
  }
  const SequentialModel lin(layers);
  const SequentialModel zeroed = replace_layer(
      lin, 0, FactoredLayer{Matrix::Zero(6, 0), Matrix::Zero(0, 4), Vector::Zero(6), Activation::identity});
  const PairStats pz = accumulate_pair_stats(lin, zeroed, d, 2, Exec::serial);
  CHECK(max_abs(pz.sigma_xpx) == 0.0);
  CHECK(max_abs(pz.sigma_xpxp) == 0.0);

  ModelSpec other;
  other.input_dim = 4;
  other.hidden = {5, 4};
  other.output_dim = 4;
  CHECK_THROWS_AS(accumulate_pair_stats(m, random_model(other, 1), d, 1, Exec::serial), ContractViolation);
}

TEST_CASE("combined pair statistics reproduce the reference statistics bitwise") {
  const SequentialModel m = net(5, 2);
  const Dataset d = random_dataset(5, 30, 40, 3);
  const StatsGroups g = accumulate_clean_stats(m, d, LossConfig{}, Exec::serial);
  for (bool balance : {false, true}) {
    const BalancedStats ref = balance ? balance_stats(g) : pool_stats(g);
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
      const PairStats p = combined_pair_stats(m, m, d, l, ref, Exec::serial);
      CHECK(max_abs(p.sigma_xpx - ref.sigma_xx[l]) == 0.0);
      CHECK(max_abs(p.sigma_xpxp - ref.sigma_xx[l]) == 0.0);
    }
  }
}

TEST_CASE("balance_stats examples") {
  LayerStats one{Matrix::Identity(3, 3), Matrix::Identity(2, 2), 5, "a"};
  StatsGroups single{{"a", {one}}};
  const BalancedStats s = balance_stats(single);
  CHECK(max_abs(s.sigma_xx[0] - one.sigma_xx) == 0.0);
  CHECK(s.scale_log.at("a")[0].sx == 1.0);

  LayerStats big{100.0 * Matrix::Identity(3, 3), 100.0 * Matrix::Identity(2, 2), 5, "b"};
  const BalancedStats two = balance_stats(StatsGroups{{"a", {one}}, {"b", {big}}});
  CHECK(two.scale_log.at("a")[0].sx == 100.0);
  CHECK(two.scale_log.at("b")[0].sx == 1.0);
  CHECK(max_abs(two.sigma_xx[0] - 100.0 * Matrix::Identity(3, 3)) == 0.0);
  CHECK(max_abs(two.fisher_z[0] - 100.0 * Matrix::Identity(2, 2)) == 0.0);

  LayerStats zero{Matrix::Zero(3, 3), Matrix::Zero(2, 2), 5, "z"};
  const BalancedStats guarded = balance_stats(StatsGroups{{"a", {one}}, {"z", {zero}}});
  CHECK(guarded.scale_log.at("z")[0].sx == 1.0);
  CHECK(std::isfinite(guarded.sigma_xx[0].sum()));

  CHECK_THROWS_AS(balance_stats(StatsGroups{{"a", {one}}, {"b", {big, big}}}), ContractViolation);
}

TEST_CASE("balanced statistics under per-group scaling") {
  const SequentialModel m = net(4, 6);
  const Dataset d = random_dataset(4, 60, 77, 3);
  const StatsGroups g = accumulate_clean_stats(m, d, LossConfig{}, Exec::serial);
  const BalancedStats before = balance_stats(g);
  auto max_trace = [](const StatsGroups& gs, std::size_t l, bool fisher) {
    double t = 0.0;
    for (const auto& [tag, ls] : gs) t = std::max(t, (fisher ? ls[l].fisher_z : ls[l].sigma_xx).trace());
    return t;
  };
  // Each group enters as tau * Sigma / Tr(Sigma), so only the common max-trace factor can move.
  for (const std::string& tag : {"group0", "group1", "group2"}) {
    for (double c : {1e-3, 7.0, 1e3}) {
      StatsGroups scaled = g;
      for (auto& ls : scaled.at(tag)) {
        ls.sigma_xx *= c;
        ls.fisher_z *= c;
      }
      const BalancedStats after = balance_stats(scaled);
      for (std::size_t l = 0; l < m.num_layers(); ++l) {
        const double rx = max_trace(scaled, l, false) / max_trace(g, l, false);
        const double rf = max_trace(scaled, l, true) / max_trace(g, l, true);
        CHECK(max_abs(after.sigma_xx[l] - rx * before.sigma_xx[l]) <= 1e-12 * rx * max_abs(before.sigma_xx[l]));
        CHECK(max_abs(after.fisher_z[l] - rf * before.fisher_z[l]) <= 1e-12 * rf * max_abs(before.fisher_z[l]));
      }
    }
  }

  // A group that stays below the max trace leaves the balanced matrices unchanged.
  LayerStats small{Matrix::Identity(3, 3), Matrix::Identity(2, 2), 5, "s"};
  LayerStats big{random_spd(3, 1) * 50.0, random_spd(2, 2) * 50.0, 5, "b"};
  const BalancedStats ref = balance_stats(StatsGroups{{"s", {small}}, {"b", {big}}});
  LayerStats bumped{3.0 * small.sigma_xx, 3.0 * small.fisher_z, 5, "s"};
  const BalancedStats moved = balance_stats(StatsGroups{{"s", {bumped}}, {"b", {big}}});
  CHECK(max_abs(moved.sigma_xx[0] - ref.sigma_xx[0]) <= 1e-12 * max_abs(ref.sigma_xx[0]));
  CHECK(max_abs(moved.fisher_z[0] - ref.fisher_z[0]) <= 1e-12 * max_abs(ref.fisher_z[0]));
}

TEST_CASE("pool_stats weights groups by sample count") {
  LayerStats a{Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1, "a"};
  LayerStats b{3.0 * Matrix::Identity(2, 2), Matrix::Zero(2, 2), 3, "b"};
  const BalancedStats p = pool_stats(StatsGroups{{"a", {a}}, {"b", {b}}});
  CHECK(max_abs(p.sigma_xx[0] - 2.5 * Matrix::Identity(2, 2)) < 1e-15);
  CHECK(p.pair_weights.at("a")[0] == 0.25);
  CHECK_FALSE(p.balanced);
}

TEST_CASE("auto Sobolev scale puts the Sobolev term one decade above the base term") {
  const GridShape grid = unit_grid(1, 4, 4);
  ModelSpec spec;
  spec.input_dim = 16;
  spec.hidden = {16};
  spec.output_dim = 16;
  const SequentialModel m = random_model(spec, 2);
  Dataset d;
  d.grid = grid;
  d.tags = {"t"};
  for (std::uint64_t n = 0; n < 40; ++n) {
    d.samples.push_back({gen_grf(n, grid, 4, 1.0), gen_grf(100 + n, grid, 4, 1.0), 0});
  }
  LossConfig loss;
  loss.sobolev_order = 2;
  loss.grid = grid;
  const double lambda = auto_sobolev_scale(m, d, loss);
  double base = 0.0, sob = 0.0;
  for (std::size_t n = 0; n < 32; ++n) {
    const Vector pred = predict(m, d.samples[n].input.data);
    base += base_loss(pred, d.samples[n].target.data, loss.base);
    sob += sobolev_loss(GridField(grid, pred), d.samples[n].target, loss);
  }
  CHECK(rel_diff(lambda * sob, 10.0 * base) < 1e-12);
}
