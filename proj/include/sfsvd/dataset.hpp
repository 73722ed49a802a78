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

#pragma once

#include "sfsvd/fields.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sfsvd {

struct Sample {
  GridField input;
  GridField target;
  std::size_t tag = 0;  ///< index into Dataset::tags
};

/// Calibration or test pairs on one shared grid.
struct Dataset {
  GridShape grid;
  std::vector<std::string> tags;
  std::vector<Sample> samples;

  /// Throws ContractViolation when samples disagree with the grid or tag table.
  void validate() const;
  std::size_t size() const { return samples.size(); }
  std::vector<Vector> inputs() const;
  std::vector<Vector> targets() const;
  /// Samples whose tag index is `tag`, in dataset order.
  Dataset subset(std::size_t tag) const;
};

enum class FieldKind { scalar, divfree };

struct DatasetSpec {
  GridShape grid = unit_grid(1, 8, 8);
  std::size_t num_samples = 64;
  /// Teacher operators, one per tag: "heat" or "advect". Samples cycle
  /// through tags in order.
  std::vector<std::string> tags{"heat"};
  /// Per-tag multiplier on input amplitudes; empty means all ones.
  std::vector<double> tag_scales;
  FieldKind kind = FieldKind::scalar;
  std::size_t num_modes = 6;
  double decay = 1.5;
};

/// Teacher operator for a tag name; throws ConfigError for unknown names.
TeacherOperator teacher_for_tag(const std::string& tag, const GridShape& grid);

/// Inputs from gen_grf / gen_divfree with per-sample seeds derived from
/// `seed`; targets from the tag's teacher operator.
Dataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed);

}  // namespace sfsvd
