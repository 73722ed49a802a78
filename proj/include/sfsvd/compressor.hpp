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

// Loss-aware low-rank layer solver and the sequential whole-model pipeline.
//
// For one layer the objective is
//
//   (1 - alpha) E||L (W X - W' X)||^2 + alpha E||L (W X - W' X')||^2
//
// with X the clean input, X' the input after the already-compressed prefix
// and L^T L = F_Z. Expanding the expectations gives
//
//   -2 Tr(L W' S_cov W^T L^T) + Tr(L W' S_ccov W'^T L^T) + const,
//   S_cov  = (1 - alpha) E[X X^T] + alpha E[X' X^T],
//   S_ccov = (1 - alpha) E[X X^T] + alpha E[X' X'^T] = R R^T,
//
// which equals ||L W' R - M*||_F^2 + const with M* = L W S_cov^T R^-T. The
// rank-k minimizer truncates M* and maps back: W' = L^-1 SVD_k(M*) R^-1.

#pragma once

#include "sfsvd/allocation.hpp"
#include "sfsvd/calibration.hpp"
#include "sfsvd/dataset.hpp"
#include "sfsvd/errors.hpp"
#include "sfsvd/linalg.hpp"
#include "sfsvd/losses.hpp"
#include "sfsvd/netcore.hpp"

#include <string>
#include <vector>

namespace sfsvd {

enum class FisherMode { fisher, identity };

const char* to_string(FisherMode m);

struct CompressionConfig {
  double alpha = 0.7;
  FisherMode fisher_mode = FisherMode::fisher;
  bool balance = false;
  double ratio = 1.0;
  LossConfig loss;
  std::vector<double> jitter_schedule{kDefaultJitterSchedule.begin(), kDefaultJitterSchedule.end()};
  Exec exec = Exec::serial;

  void validate() const;
};

struct LayerSolveInputs {
  Matrix weight;
  FactorResult fisher;  ///< factor of F_Z (F F^T = F_Z); L = F^T
  Matrix sigma_cov;     ///< (1 - alpha) Sigma_XX + alpha Sigma_X'X, not symmetrized
  FactorResult cov;     ///< factor R of (1 - alpha) Sigma_XX + alpha Sigma_X'X'
  std::size_t rank = 0;
};

/// Solves one layer. Bias and activation are copied from `bias`/`activation`.
/// `where` names the layer in diagnostics.
FactoredLayer compress_layer(const LayerSolveInputs& inputs, const Vector& bias,
                             Activation activation, const std::string& where = "layer");

/// M* = L W S_cov^T R^-T.
Matrix target_matrix(const LayerSolveInputs& inputs, const std::string& where = "layer");

/// Objective terms for a candidate W' from statistics (no sampling).
struct TraceObjective {
  double variable = 0.0;  ///< -2 Tr(L W' S_cov W^T L^T) + Tr(L W' S_ccov W'^T L^T)
  double constant = 0.0;  ///< Tr(L W Sigma_XX W^T L^T)
  double total() const { return variable + constant; }
};

TraceObjective trace_objective(const Matrix& weight, const Matrix& candidate,
                               const Matrix& whitener, const Matrix& sigma_xx,
                               const Matrix& sigma_cov, const Matrix& sigma_ccov);

/// ||L W' R - M*||_F^2.
double regression_residual(const Matrix& candidate, const Matrix& whitener, const Matrix& cov_factor,
                           const Matrix& target);

struct EmpiricalObjective {
  double intra = 0.0;       ///< mean ||L (W X - W' X)||^2
  double propagated = 0.0;  ///< mean ||L (W X - W' X')||^2
  double total = 0.0;       ///< (1 - alpha) intra + alpha propagated
};

/// Sample form of the layer objective. W and X come from `original`; W' and
/// X' from `compressed`.
EmpiricalObjective empirical_objective(const SequentialModel& original,
                                       const SequentialModel& compressed, std::size_t layer_index,
                                       const Matrix& whitener, double alpha, const Dataset& dataset);

struct LayerReport {
  std::size_t rank = 0;
  FactorMode fisher_mode = FactorMode::cholesky;
  double fisher_jitter = 0.0;
  FactorMode cov_mode = FactorMode::cholesky;
  double cov_jitter = 0.0;
  std::size_t cov_rank = 0;
  EmpiricalObjective before;  ///< W' = W on the current prefix
  EmpiricalObjective after;
};

struct CompressionReport {
  std::vector<LayerReport> layers;
  double alpha = 0.0;
  FisherMode fisher_mode = FisherMode::fisher;
  bool balance = false;
};

/// Per-layer failure inside compress_model; carries the report up to the
/// failing layer.
class CompressionError : public NumericalError {
 public:
  CompressionError(std::size_t layer, const std::string& what, CompressionReport partial)
      : NumericalError(what), layer_(layer), report_(std::move(partial)) {}
  std::size_t layer() const { return layer_; }
  const CompressionReport& report() const { return report_; }

 private:
  std::size_t layer_;
  CompressionReport report_;
};

struct CompressionResult {
  SequentialModel model;
  CompressionReport report;
};

/// Layer-by-layer compression, first to last, with pair statistics taken
/// against the partially compressed model at each step.
CompressionResult compress_model(const SequentialModel& model, const BalancedStats& stats,
                                 const Dataset& dataset, const RankPlan& plan,
                                 const CompressionConfig& cfg);

/// Plain truncated SVD of every weight at the plan's ranks.
SequentialModel truncate_model(const SequentialModel& model, const RankPlan& plan);

}  // namespace sfsvd
