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

// Calibration statistics: clean input covariances and output Fisher
// matrices from the dense model, paired clean/perturbed covariances during
// sequential compression, and per-dataset trace balancing.

#pragma once

#include "sfsvd/dataset.hpp"
#include "sfsvd/exec.hpp"
#include "sfsvd/linalg.hpp"
#include "sfsvd/losses.hpp"
#include "sfsvd/netcore.hpp"

#include <map>
#include <string>
#include <vector>

namespace sfsvd {

/// Division guard for trace balancing.
inline constexpr double kBalanceEpsilon = 1e-15;

struct LayerStats {
  Matrix sigma_xx;  ///< E[X X^T], d_in x d_in
  Matrix fisher_z;  ///< E[g g^T], g = dL/dZ, d_out x d_out
  std::size_t n_samples = 0;
  std::string dataset_tag;
};

/// Per-layer statistics keyed by dataset tag.
using StatsGroups = std::map<std::string, std::vector<LayerStats>>;

struct PairStats {
  Matrix sigma_xpx;   ///< E[X' X^T], generally asymmetric
  Matrix sigma_xpxp;  ///< E[X' X'^T]
  std::size_t n_samples = 0;
};

struct LayerScale {
  double sx = 1.0;  ///< scale applied to this dataset's sigma_xx
  double sf = 1.0;  ///< scale applied to this dataset's fisher_z
};

/// Reference statistics per layer combined over dataset groups, together
/// with the per-group weights that combined them. `pair_weights` carries the
/// weight applied to each group's pair statistics, so that pair statistics
/// with an unperturbed prefix reproduce `sigma_xx` exactly.
struct BalancedStats {
  std::vector<Matrix> sigma_xx;
  std::vector<Matrix> fisher_z;
  std::map<std::string, std::vector<LayerScale>> scale_log;
  std::map<std::string, std::vector<double>> pair_weights;
  bool balanced = false;

  std::size_t num_layers() const { return sigma_xx.size(); }
};

/// One LayerStats vector per distinct dataset tag present in `dataset`.
/// Per-sample passes run under `exec`; the reduction is the fixed-chunk
/// serial kernel for Exec::serial and the OpenMP kernel otherwise.
StatsGroups accumulate_clean_stats(const SequentialModel& model, const Dataset& dataset,
                                   const LossConfig& loss, Exec exec = Exec::serial);

/// Lockstep pass: X from `original`, X' from `partial`, both entering layer
/// `layer_index`, over every sample of `dataset`.
PairStats accumulate_pair_stats(const SequentialModel& original, const SequentialModel& partial,
                                const Dataset& dataset, std::size_t layer_index,
                                Exec exec = Exec::serial);

/// sum_c w_c * PairStats(dataset restricted to tag c), w_c from `stats.pair_weights`.
PairStats combined_pair_stats(const SequentialModel& original, const SequentialModel& partial,
                              const Dataset& dataset, std::size_t layer_index,
                              const BalancedStats& stats, Exec exec = Exec::serial);

/// Trace-based energy balancing across dataset groups.
BalancedStats balance_stats(const StatsGroups& groups);

/// Sample-weighted pooling across dataset groups (no balancing).
BalancedStats pool_stats(const StatsGroups& groups);

/// lambda = 10 * mean(base) / mean(sobolev) of the model's predictions over
/// the first `pilot` samples; 0 when the Sobolev term vanishes there.
double auto_sobolev_scale(const SequentialModel& model, const Dataset& dataset,
                          const LossConfig& loss, std::size_t pilot = 32);

}  // namespace sfsvd
