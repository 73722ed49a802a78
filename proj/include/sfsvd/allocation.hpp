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

// Global rank allocation under a parameter budget.
//
// Each layer contributes one candidate per singular value of L W R^c. A
// candidate's benefit is sigma^2 (the loss degradation avoided by keeping
// it) and its cost is d_out + d_in parameters. Candidates from all layers
// are merged, sorted by sigma^2 / cost, and accepted greedily while the
// running cost stays within the budget; unaffordable candidates are skipped
// and the scan continues.

#pragma once

#include "sfsvd/calibration.hpp"
#include "sfsvd/linalg.hpp"
#include "sfsvd/netcore.hpp"

#include <cstdint>
#include <vector>

namespace sfsvd {

struct LayerScores {
  std::vector<double> sigma2;  ///< descending
  std::size_t unit_cost = 0;   ///< d_out + d_in
  std::size_t out_dim = 0;
  std::size_t in_dim = 0;
};

using ScoreTable = std::vector<LayerScores>;

struct RankPlan {
  std::vector<std::size_t> ranks;
  double ratio = 1.0;
  std::uint64_t budget = 0;
  std::uint64_t spent = 0;
  std::uint64_t skipped_components = 0;
};

/// Squared singular values of L * W * Rc, descending. L is the whitening
/// matrix with L^T L = F_Z; Rc satisfies Rc Rc^T = Sigma_XX.
std::vector<double> layer_scores(const Matrix& fisher_whitener, const Matrix& weight,
                                 const Matrix& clean_factor);

/// Scores for every layer of `model` from reference statistics. With
/// `use_fisher` false the loss whitener is the identity.
ScoreTable score_model(const SequentialModel& model, const BalancedStats& stats, bool use_fisher,
                       std::span<const double> jitter_schedule = kDefaultJitterSchedule);

/// floor(ratio * sum_l d_out * d_in); throws ContractViolation unless 0 < ratio <= 1.
std::uint64_t budget(double ratio, const SequentialModel& model);

RankPlan greedy_allocate(const ScoreTable& scores, std::uint64_t budget);

/// Same ratio in every layer: k_l = min(rank cap, floor(ratio * m n / (m + n))).
RankPlan uniform_allocate(const SequentialModel& model, double ratio);

/// k_l = min(d_out, d_in) everywhere.
RankPlan full_rank_plan(const SequentialModel& model);

struct LayerSummary {
  std::size_t rank = 0;
  std::uint64_t dense_params = 0;
  std::uint64_t factored_params = 0;
  double retained = 0.0;  ///< sum of kept sigma^2
  double dropped = 0.0;   ///< sum of discarded sigma^2; predicted loss degradation
};

struct PlanSummary {
  std::vector<LayerSummary> layers;
  std::uint64_t dense_params = 0;
  std::uint64_t factored_params = 0;
  double retained = 0.0;
  double dropped = 0.0;
};

PlanSummary plan_summary(const RankPlan& plan, const ScoreTable& scores);

}  // namespace sfsvd
