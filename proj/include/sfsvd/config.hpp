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

// Run configuration: a `key = value` text file checked against a fixed
// schema. Lines starting with '#' and blank lines are ignored; unknown or
// repeated keys are errors.

#pragma once

#include "sfsvd/compressor.hpp"
#include "sfsvd/dataset.hpp"
#include "sfsvd/losses.hpp"
#include "sfsvd/netcore.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sfsvd {

enum class ModelInit { random, trained };
enum class TargetSource { model, teacher };
enum class Allocation { greedy, uniform };

struct RunConfig {
  // grid and data
  std::size_t grid_channels = 2;
  std::size_t grid_height = 8;
  std::size_t grid_width = 8;
  FieldKind field_kind = FieldKind::divfree;
  std::vector<std::string> tags{"heat"};
  std::vector<double> tag_scales;
  std::size_t num_modes = 6;
  double decay = 1.5;
  std::size_t calib_samples = 192;
  std::size_t test_samples = 64;
  std::uint64_t seed = 0;

  // model
  std::vector<std::size_t> hidden{64, 64};
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::identity;
  double spectrum_decay = 1.0;
  double gain = 1.0;
  double bias_scale = 0.1;
  ModelInit model_init = ModelInit::random;
  std::size_t train_steps = 200;
  double learning_rate = 0.05;

  // targets used for calibration and evaluation
  TargetSource targets = TargetSource::model;
  double label_noise = 0.01;

  // loss
  BaseLoss base_loss = BaseLoss::mse;
  PdeFamily pde_family = PdeFamily::incompressible_ns;
  std::optional<int> sobolev_order;  ///< defaults to the family's order, else 0
  SobolevNorm sobolev_norm = SobolevNorm::l1;
  std::optional<double> sobolev_scale;  ///< nullopt = auto
  std::array<double, 3> derivative_weights{1.0, 1.0, 1.0};

  // compression
  double alpha = 0.7;
  double ratio = 0.5;
  FisherMode fisher_mode = FisherMode::fisher;
  bool balance = false;
  Allocation allocation = Allocation::greedy;

  GridShape grid() const;
  int effective_sobolev_order() const;
  /// Cross-key checks; throws ConfigError naming the offending key.
  void validate() const;
};

/// Parses and validates config text. `origin` prefixes line diagnostics.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment to `cfg` (schema-checked).
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical `key = value` listing of every schema key.
std::string format_config(const RunConfig& cfg);

std::vector<std::string> config_keys();

}  // namespace sfsvd
