#include "support.hpp"

#include "sfsvd/allocation.hpp"
#include "sfsvd/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace sfsvd;
using namespace sfsvd::testing;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

LayerScores layer(std::vector<double> sigma2, std::size_t out, std::size_t in) {
  std::sort(sigma2.begin(), sigma2.end(), std::greater<>());
  return LayerScores{std::move(sigma2), out + in, out, in};
}

SequentialModel linear_model(const std::vector<std::pair<int, int>>& shapes) {
  std::vector<Layer> layers;
  for (const auto& [out, in] : shapes) layers.emplace_back(dense(Matrix::Ones(out, in), Vector::Zero(out), Activation::identity));
  return SequentialModel(layers);
}

/// Picks the best remaining candidate afresh at every step.
std::vector<std::size_t> naive_greedy(const ScoreTable& t, std::uint64_t budget) {
  struct Cand {
    double v;
    std::size_t layer, comp;
    bool done = false;
  };
  std::vector<Cand> cands;
  for (std::size_t l = 0; l < t.size(); ++l)
    for (std::size_t i = 0; i < t[l].sigma2.size(); ++i)
      cands.push_back({t[l].sigma2[i] / static_cast<double>(t[l].unit_cost), l, i});
  std::vector<std::size_t> k(t.size(), 0);
  std::uint64_t spent = 0;
  for (;;) {
    Cand* best = nullptr;
    for (Cand& c : cands) {
      if (c.done) continue;
      if (!best || c.v > best->v || (c.v == best->v && (c.layer < best->layer ||
                                                        (c.layer == best->layer && c.comp < best->comp))))
        best = &c;
    }
    if (!best) break;
    best->done = true;
    if (spent + t[best->layer].unit_cost <= budget) {
      spent += t[best->layer].unit_cost;
      ++k[best->layer];
    }
  }
  return k;
}

double retained(const ScoreTable& t, const std::vector<std::size_t>& k) {
  double s = 0.0;
  for (std::size_t l = 0; l < t.size(); ++l)
    for (std::size_t i = 0; i < k[l]; ++i) s += t[l].sigma2[i];
  return s;
}

/// Best retained sum over every feasible rank vector.
double exhaustive_best(const ScoreTable& t, std::uint64_t budget) {
  std::vector<std::size_t> k(t.size(), 0);
  double best = 0.0;
  for (;;) {
    std::uint64_t cost = 0;
    for (std::size_t l = 0; l < t.size(); ++l) cost += k[l] * t[l].unit_cost;
    if (cost <= budget) best = std::max(best, retained(t, k));
    std::size_t l = 0;
    while (l < t.size() && k[l] == t[l].sigma2.size()) k[l++] = 0;
    if (l == t.size()) break;
    ++k[l];
  }
  return best;
}

ScoreTable random_table(std::mt19937_64& rng, bool equal_cost, std::size_t max_rank) {
  std::uniform_int_distribution<int> nl(1, 4), dim(1, 6), rk(1, static_cast<int>(max_rank));
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::bernoulli_distribution coarse(0.3);
  ScoreTable t;
  const int layers = nl(rng);
  const int shared = dim(rng);
  for (int l = 0; l < layers; ++l) {
    const std::size_t out = static_cast<std::size_t>(equal_cost ? shared : dim(rng));
    const std::size_t in = static_cast<std::size_t>(equal_cost ? shared : dim(rng));
    const std::size_t r = std::min<std::size_t>({out, in, static_cast<std::size_t>(rk(rng))});
    std::vector<double> s;
    for (std::size_t i = 0; i < r; ++i) s.push_back(coarse(rng) ? std::round(u(rng)) : u(rng));
    t.push_back(layer(s, out, in));
  }
  return t;
}

}  // namespace

TEST_CASE("layer_scores examples") {
  const std::vector<double> a = layer_scores(Matrix::Identity(2, 2), diag2(3, 1), Matrix::Identity(2, 2));
  CHECK(a[0] == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> b = layer_scores(diag2(1, 10), diag2(3, 1), Matrix::Identity(2, 2));
  CHECK(b[0] == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(9.0).epsilon(1e-15));
  for (double s : layer_scores(Matrix::Identity(3, 3), Matrix::Zero(3, 2), Matrix::Identity(2, 2))) CHECK(s == 0.0);
  CHECK_THROWS_AS(layer_scores(Matrix::Identity(3, 3), diag2(1, 1), Matrix::Identity(2, 2)), ContractViolation);
}

TEST_CASE("layer_scores equal squared singular values of the product") {
  const Matrix l = gaussian(5, 5, 1), w = gaussian(5, 4, 2), r = gaussian(4, 4, 3);
  const Vector s = svd(l * w * r).singular_values;
  const std::vector<double> got = layer_scores(l, w, r);
  REQUIRE(got.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rel_diff(got[i], s(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i))) < 1e-12);
}

TEST_CASE("budget examples") {
  const SequentialModel two = linear_model({{2, 2}, {2, 2}});
  CHECK(budget(1.0, two) == 8);
  CHECK(budget(0.25, two) == 2);
  CHECK(budget(0.5, linear_model({{3, 3}})) == 4);
  CHECK_THROWS_AS(budget(0.0, two), ContractViolation);
  CHECK_THROWS_AS(budget(1.5, two), ContractViolation);
}

TEST_CASE("greedy_allocate examples") {
  const ScoreTable t{layer({9, 1}, 2, 2), layer({4, 4}, 2, 2)};
  const RankPlan p = greedy_allocate(t, 4);
  CHECK(p.ranks == std::vector<std::size_t>{1, 0});
  CHECK(p.spent == 4);
  CHECK(retained(t, p.ranks) == exhaustive_best(t, 4));

  const RankPlan zero = greedy_allocate(t, 0);
  CHECK(zero.ranks == std::vector<std::size_t>{0, 0});
  CHECK(zero.spent == 0);

  const RankPlan one = greedy_allocate(ScoreTable{layer({4, 1}, 2, 2)}, 4);
  CHECK(one.ranks == std::vector<std::size_t>{1});
  CHECK(one.skipped_components == 1);
}

TEST_CASE("skipped candidates do not stop the scan") {
  // The expensive layer's candidate comes first but does not fit; the cheap one still does.
  const ScoreTable t{layer({100}, 5, 5), layer({1}, 1, 1)};
  const RankPlan p = greedy_allocate(t, 4);
  CHECK(p.ranks == std::vector<std::size_t>{0, 1});
  CHECK(p.skipped_components == 1);
}

TEST_CASE("greedy allocation properties on seeded instances") {
  std::mt19937_64 rng(2024);
  int equal_cost_checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const bool equal_cost = trial % 2 == 0;
    const ScoreTable t = random_table(rng, equal_cost, equal_cost ? 3 : 6);
    std::uint64_t total = 0;
    for (const LayerScores& l : t) total += l.sigma2.size() * l.unit_cost;
    const std::uint64_t b = std::uniform_int_distribution<std::uint64_t>(0, total + 3)(rng);
    const RankPlan p = greedy_allocate(t, b);
    CAPTURE(trial);

    std::uint64_t spent = 0;
    for (std::size_t l = 0; l < t.size(); ++l) {
      spent += p.ranks[l] * t[l].unit_cost;
      CHECK(p.ranks[l] <= std::min(t[l].out_dim, t[l].in_dim));
      // Nothing affordable may be left behind.
      if (p.ranks[l] < t[l].sigma2.size()) CHECK(p.spent + t[l].unit_cost > b);
    }
    CHECK(spent == p.spent);
    CHECK(p.spent <= b);
    CHECK(p.ranks == naive_greedy(t, b));

    if (equal_cost) {
      CHECK(retained(t, p.ranks) == doctest::Approx(exhaustive_best(t, b)).epsilon(1e-12));
      ++equal_cost_checked;
    }
  }
  CHECK(equal_cost_checked == 500);
}

TEST_CASE("uniform and full-rank plans") {
  const SequentialModel m = linear_model({{8, 4}, {4, 8}, {6, 4}});
  CHECK(full_rank_plan(m).ranks == std::vector<std::size_t>{4, 4, 4});
  const RankPlan u = uniform_allocate(m, 0.5);
  // floor(0.5 * 32 / 12) = 1, floor(0.5 * 24 / 10) = 1
  CHECK(u.ranks == std::vector<std::size_t>{1, 1, 1});
  CHECK(uniform_allocate(m, 1.0).ranks == std::vector<std::size_t>{2, 2, 2});
}

TEST_CASE("plan_summary examples") {
  const ScoreTable t{layer({9, 1}, 2, 2), layer({4, 3, 2}, 3, 4)};
  const double total = 9 + 1 + 4 + 3 + 2;

  RankPlan full;
  full.ranks = {2, 3};
  CHECK(plan_summary(full, t).dropped == 0.0);

  RankPlan none;
  none.ranks = {0, 0};
  CHECK(plan_summary(none, t).dropped == total);

  RankPlan mixed;
  mixed.ranks = {1, 2};
  const PlanSummary s = plan_summary(mixed, t);
  CHECK(std::abs(s.retained + s.dropped - total) <= 1e-10);
  CHECK(s.layers[1].dropped == 2.0);
  CHECK(s.layers[0].factored_params == 4);
  CHECK(s.layers[1].factored_params == 14);
  CHECK(s.dense_params == 16);
}
