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

// Container encodings for the pipeline artifacts. Every file carries a raw
// "kind" section so a model cannot be read back as a dataset.

#pragma once

#include "sfsvd/allocation.hpp"
#include "sfsvd/calibration.hpp"
#include "sfsvd/dataset.hpp"
#include "sfsvd/io.hpp"
#include "sfsvd/losses.hpp"
#include "sfsvd/netcore.hpp"

#include <filesystem>

namespace sfsvd {

Sections model_sections(const SequentialModel& model);
SequentialModel model_from_sections(const Sections& sections);

Sections dataset_sections(const Dataset& dataset);
Dataset dataset_from_sections(const Sections& sections);

/// Clean statistics plus the loss settings they were taken under.
struct StatsFile {
  StatsGroups groups;
  LossConfig loss;
};

Sections stats_sections(const StatsFile& stats);
StatsFile stats_from_sections(const Sections& sections);

struct PlanFile {
  RankPlan plan;
  bool balance = false;
  bool exact = false;
};

Sections plan_sections(const PlanFile& plan);
PlanFile plan_from_sections(const Sections& sections);

void save_model(const std::filesystem::path& path, const SequentialModel& model);
SequentialModel load_model(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);
void save_stats(const std::filesystem::path& path, const StatsFile& stats);
StatsFile load_stats(const std::filesystem::path& path);
void save_plan(const std::filesystem::path& path, const PlanFile& plan);
PlanFile load_plan(const std::filesystem::path& path);

}  // namespace sfsvd
