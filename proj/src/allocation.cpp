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

#include "sfsvd/allocation.hpp"

#include "sfsvd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sfsvd {
namespace {

struct Candidate {
  double efficiency;
  std::size_t layer;
  std::size_t component;
};

}  // namespace

std::vector<double> layer_scores(const Matrix& fisher_whitener, const Matrix& weight,
                                 const Matrix& clean_factor) {
  if (fisher_whitener.rows() != fisher_whitener.cols() ||
      fisher_whitener.cols() != weight.rows() || clean_factor.rows() != clean_factor.cols() ||
      clean_factor.rows() != weight.cols()) {
    std::ostringstream os;
    os << "layer_scores: cannot chain L (" << fisher_whitener.rows() << "x"
       << fisher_whitener.cols() << "), W (" << weight.rows() << "x" << weight.cols()
       << "), Rc (" << clean_factor.rows() << "x" << clean_factor.cols() << ")";
    throw ContractViolation(os.str());
  }
  const Matrix product = fisher_whitener * weight * clean_factor;
  std::vector<double> out(static_cast<std::size_t>(std::min(product.rows(), product.cols())), 0.0);
  if (product.cwiseAbs().maxCoeff() == 0.0) return out;
  const SvdResult d = svd(product, "L*W*Rc");
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = d.singular_values(static_cast<Eigen::Index>(i));
    out[i] = s * s;
  }
  return out;
}

ScoreTable score_model(const SequentialModel& model, const BalancedStats& stats, bool use_fisher,
                       std::span<const double> jitter_schedule) {
  if (stats.num_layers() != model.num_layers()) {
    throw ContractViolation("score_model: statistics do not cover every layer");
  }
  ScoreTable table(model.num_layers());
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const std::string where = "layer " + std::to_string(l);
    const FactorResult rc = factor_spd(stats.sigma_xx[l], jitter_schedule, where + " sigma_xx");
    const Matrix whitener = use_fisher
                                ? loss_whitener(factor_spd(stats.fisher_z[l], jitter_schedule,
                                                           where + " fisher_z"))
                                : Matrix::Identity(static_cast<Eigen::Index>(model.out_dim(l)),
                                                   static_cast<Eigen::Index>(model.out_dim(l)));
    LayerScores& s = table[l];
    s.sigma2 = layer_scores(whitener, model.dense_weight(l), rc.factor);
    s.out_dim = model.out_dim(l);
    s.in_dim = model.in_dim(l);
    s.unit_cost = s.out_dim + s.in_dim;
  }
  return table;
}

std::uint64_t budget(double ratio, const SequentialModel& model) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    std::ostringstream os;
    os << "ratio must lie in (0, 1], got " << ratio;
    throw ContractViolation(os.str());
  }
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    total += static_cast<std::uint64_t>(model.out_dim(l)) * model.in_dim(l);
  }
  return static_cast<std::uint64_t>(std::floor(ratio * static_cast<double>(total)));
}

RankPlan greedy_allocate(const ScoreTable& scores, std::uint64_t budget) {
  std::vector<Candidate> pool;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    const LayerScores& s = scores[l];
    if (s.unit_cost == 0) throw ContractViolation("greedy_allocate: zero unit cost");
    for (std::size_t i = 0; i < s.sigma2.size(); ++i) {
      pool.push_back({s.sigma2[i] / static_cast<double>(s.unit_cost), l, i});
    }
  }
  std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    if (a.efficiency != b.efficiency) return a.efficiency > b.efficiency;
    if (a.layer != b.layer) return a.layer < b.layer;
    return a.component < b.component;
  });

  RankPlan plan;
  plan.ranks.assign(scores.size(), 0);
  plan.budget = budget;
  for (const Candidate& c : pool) {
    const std::uint64_t cost = scores[c.layer].unit_cost;
    if (plan.spent + cost <= budget) {
      ++plan.ranks[c.layer];
      plan.spent += cost;
    } else {
      ++plan.skipped_components;
    }
  }
  return plan;
}

RankPlan uniform_allocate(const SequentialModel& model, double ratio) {
  RankPlan plan;
  plan.ratio = ratio;
  plan.budget = budget(ratio, model);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const double m = static_cast<double>(model.out_dim(l));
    const double n = static_cast<double>(model.in_dim(l));
    const auto cap = std::min(model.out_dim(l), model.in_dim(l));
    const auto k = std::min<std::size_t>(cap, static_cast<std::size_t>(std::floor(ratio * m * n / (m + n))));
    plan.ranks.push_back(k);
    plan.spent += k * (model.out_dim(l) + model.in_dim(l));
  }
  return plan;
}

RankPlan full_rank_plan(const SequentialModel& model) {
  RankPlan plan;
  plan.ratio = 1.0;
  plan.budget = budget(1.0, model);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const std::size_t k = std::min(model.out_dim(l), model.in_dim(l));
    plan.ranks.push_back(k);
    plan.spent += k * (model.out_dim(l) + model.in_dim(l));
  }
  return plan;
}

PlanSummary plan_summary(const RankPlan& plan, const ScoreTable& scores) {
  if (plan.ranks.size() != scores.size()) {
    throw ContractViolation("plan_summary: plan and score table cover different layer counts");
  }
  PlanSummary out;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    const LayerScores& s = scores[l];
    LayerSummary row;
    row.rank = plan.ranks[l];
    row.dense_params = static_cast<std::uint64_t>(s.out_dim) * s.in_dim;
    row.factored_params = static_cast<std::uint64_t>(row.rank) * s.unit_cost;
    for (std::size_t i = 0; i < s.sigma2.size(); ++i) {
      (i < row.rank ? row.retained : row.dropped) += s.sigma2[i];
    }
    out.dense_params += row.dense_params;
    out.factored_params += row.factored_params;
    out.retained += row.retained;
    out.dropped += row.dropped;
    out.layers.push_back(row);
  }
  return out;
}

}  // namespace sfsvd
