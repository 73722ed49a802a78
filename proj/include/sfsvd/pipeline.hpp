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

// The end-to-end workflow behind the command-line tool, as plain functions:
// data splits, model creation, target relabelling, calibration, planning,
// compression, and evaluation metrics.

#pragma once

#include "sfsvd/allocation.hpp"
#include "sfsvd/artifacts.hpp"
#include "sfsvd/calibration.hpp"
#include "sfsvd/compressor.hpp"
#include "sfsvd/config.hpp"
#include "sfsvd/dataset.hpp"
#include "sfsvd/netcore.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace sfsvd {

enum class Split { calib, test };

/// Independent seed per purpose, all derived from the run seed.
enum class SeedStream : std::uint64_t { calib_data = 1, test_data = 2, model = 3, noise = 4 };
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream);

DatasetSpec dataset_spec(const RunConfig& cfg, Split split);
Dataset make_dataset(const RunConfig& cfg, Split split);

ModelSpec model_spec(const RunConfig& cfg);
/// Random model, or a random model trained against the teacher targets of
/// `train_data` when model_init = trained.
SequentialModel make_model(const RunConfig& cfg, const Dataset* train_data, Exec exec);

/// Full-batch gradient descent on the dense weights and biases.
SequentialModel train_model(const SequentialModel& model, const Dataset& data, const LossConfig& loss,
                            std::size_t steps, double learning_rate, Exec exec);

/// Targets replaced by model(x) + noise * N(0, 1), noise drawn from `seed`.
Dataset relabel(const Dataset& data, const SequentialModel& model, double noise, std::uint64_t seed);

/// Dataset with the targets the config asks for (teacher or model-consistent).
Dataset prepare_targets(const RunConfig& cfg, const Dataset& data, const SequentialModel& model,
                        Split split);

/// Loss settings from the config. The Sobolev scale is left at 0; see
/// resolve_loss.
LossConfig loss_config(const RunConfig& cfg, const GridShape& grid);
/// loss_config with the Sobolev scale fixed (auto when not given).
LossConfig resolve_loss(const RunConfig& cfg, const SequentialModel& model, const Dataset& data);

StatsFile calibrate(const RunConfig& cfg, const SequentialModel& model, const Dataset& data, Exec exec);

BalancedStats reference_stats(const StatsGroups& groups, bool balance);

PlanFile make_plan(const RunConfig& cfg, const SequentialModel& model, const StatsFile& stats,
                   bool exact);

CompressionConfig compression_config(const RunConfig& cfg, const LossConfig& loss, Exec exec);

/// Mean metrics over a dataset: base_loss, sobolev_loss and, for
/// two-channel fields, div_free_error and vorticity_error.
std::map<std::string, double> evaluate_metrics(const SequentialModel& model, const Dataset& data,
                                               const LossConfig& loss);

/// Mean combined loss (base + lambda * Sobolev) over a dataset.
double mean_combined_loss(const SequentialModel& model, const Dataset& data, const LossConfig& loss);

/// `key = value` metrics report with _orig, _compressed and _rel_change_pct.
std::string metrics_report(const std::map<std::string, double>& original,
                           const std::map<std::string, double>& compressed);

/// JSON run report for a compression.
std::string compression_report_json(const CompressionReport& report, const PlanFile& plan,
                                    const SequentialModel& original, const SequentialModel& compressed);

}  // namespace sfsvd
