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

// Base losses, the derivative-matching (Sobolev) loss, their combination
// used for calibration gradients, and the physics metrics.

#pragma once

#include "sfsvd/fields.hpp"
#include "sfsvd/linalg.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>

namespace sfsvd {

enum class BaseLoss { mse, relative_l1 };
enum class SobolevNorm { l1, l2 };

/// PDE families with a fixed Sobolev order.
enum class PdeFamily {
  unspecified,
  incompressible_ns,   // p = 2
  diffusion_reaction,  // p = 2
  compressible_euler,  // p = 1
  compressible_ns,     // p = 1
  wave,                // p = 1
  shallow_water,       // p = 1
};

/// Sobolev order for a family, or nullopt for `unspecified`.
std::optional<int> required_sobolev_order(PdeFamily family);

struct LossConfig {
  BaseLoss base = BaseLoss::mse;
  int sobolev_order = 0;
  SobolevNorm sobolev_norm = SobolevNorm::l1;
  /// lambda_alpha per derivative order 0, 1, 2.
  std::array<double, 3> derivative_weights{1.0, 1.0, 1.0};
  /// lambda: weight of the Sobolev term in the combined loss.
  double sobolev_scale = 0.0;
  std::optional<GridShape> grid;
  PdeFamily family = PdeFamily::unspecified;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

double base_loss(const Vector& pred, const Vector& target, BaseLoss kind);
Vector base_loss_grad(const Vector& pred, const Vector& target, BaseLoss kind);

/// sum_alpha lambda_alpha / (C |Omega_h|) sum_{c,r} |D^alpha (pred - target)|^q,
/// alpha over the multi-indices of order <= cfg.sobolev_order.
double sobolev_loss(const GridField& pred, const GridField& target, const LossConfig& cfg);
/// Per-order breakdown of sobolev_loss (entry i = sum over |alpha| = i).
std::array<double, 3> sobolev_terms(const GridField& pred, const GridField& target,
                                    const LossConfig& cfg);
GridField sobolev_loss_grad(const GridField& pred, const GridField& target,
                            const LossConfig& cfg);

/// base + sobolev_scale * sobolev, on flattened fields.
double combined_loss(const Vector& pred, const Vector& target, const LossConfig& cfg);
Vector combined_loss_grad(const Vector& pred, const Vector& target, const LossConfig& cfg);

/// Mean |D_x u + D_y v| over the grid.
double div_free_error(const GridField& velocity);
/// Mean |omega(pred) - omega(ref)| over the grid.
double vorticity_error(const GridField& pred_velocity, const GridField& ref_velocity);

/// 100 (compressed - original) / |original| per key; nullopt ("undefined")
/// when the original is zero.
std::map<std::string, std::optional<double>> relative_change_report(
    const std::map<std::string, double>& original, const std::map<std::string, double>& compressed);

const char* to_string(BaseLoss kind);
const char* to_string(SobolevNorm norm);
const char* to_string(PdeFamily family);
std::optional<BaseLoss> parse_base_loss(const std::string& s);
std::optional<SobolevNorm> parse_sobolev_norm(const std::string& s);
std::optional<PdeFamily> parse_pde_family(const std::string& s);

}  // namespace sfsvd
