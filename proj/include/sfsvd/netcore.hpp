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

// Minimal sequential network: dense or factored linear layers with bias and
// an elementwise activation, forward traces, and reverse-mode gradients of
// the combined loss with respect to every layer's linear output Z_i.

#pragma once

#include "sfsvd/exec.hpp"
#include "sfsvd/linalg.hpp"
#include "sfsvd/losses.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sfsvd {

enum class Activation { identity, tanh };

const char* to_string(Activation a);
std::optional<Activation> parse_activation(const std::string& s);

struct LinearLayer {
  Matrix weight;  ///< d_out x d_in
  Vector bias;    ///< d_out
  Activation activation = Activation::tanh;

  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
};

/// left * right replaces the weight; rank 0 is the zero map.
struct FactoredLayer {
  Matrix left;   ///< d_out x k
  Matrix right;  ///< k x d_in
  Vector bias;
  Activation activation = Activation::tanh;

  std::size_t out_dim() const { return static_cast<std::size_t>(left.rows()); }
  std::size_t in_dim() const { return static_cast<std::size_t>(right.cols()); }
  std::size_t rank() const { return static_cast<std::size_t>(left.cols()); }
};

using Layer = std::variant<LinearLayer, FactoredLayer>;

class SequentialModel {
 public:
  SequentialModel() = default;
  /// Validates that dimensions chain and entries are finite.
  explicit SequentialModel(std::vector<Layer> layers);

  std::size_t num_layers() const { return layers_.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }

  std::size_t out_dim(std::size_t i) const;
  std::size_t in_dim(std::size_t i) const;
  const Vector& bias(std::size_t i) const;
  Activation activation(std::size_t i) const;
  bool is_factored(std::size_t i) const;
  /// Dense weight of layer i (left * right for factored layers).
  Matrix dense_weight(std::size_t i) const;

 private:
  std::vector<Layer> layers_;
};

struct ForwardTrace {
  std::vector<Vector> inputs;          ///< X_i, the input to layer i
  std::vector<Vector> linear_outputs;  ///< Z_i = W_i X_i + b_i
  Vector final_output;
};

struct GradTrace {
  std::vector<Vector> z_grads;  ///< dL/dZ_i
};

struct ParamCount {
  std::size_t budgeted = 0;  ///< weights or factors; what the rank budget meters
  std::size_t bias = 0;
};

Vector apply_activation(Activation a, const Vector& z);

ForwardTrace forward(const SequentialModel& model, const Vector& x);
/// Final output only.
Vector predict(const SequentialModel& model, const Vector& x);
/// Activation entering layer `index` (X_index); index == num_layers gives the output.
Vector activation_at(const SequentialModel& model, const Vector& x, std::size_t index);

GradTrace backward(const SequentialModel& model, const ForwardTrace& trace, const Vector& target,
                   const LossConfig& loss);

SequentialModel replace_layer(const SequentialModel& model, std::size_t index,
                              const FactoredLayer& factored);

ParamCount param_count(const SequentialModel& model);

/// Per-sample forward over a batch; parallel over samples when requested.
std::vector<Vector> predict_batch(const SequentialModel& model, const std::vector<Vector>& inputs,
                                  Exec exec = Exec::parallel);

struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  ///< widths of hidden layers
  std::size_t output_dim = 0;
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::identity;
  /// Singular values of each weight decay like (1 + i)^-spectrum_decay
  /// before scaling; 0 gives a flat spectrum.
  double spectrum_decay = 0.0;
  double gain = 1.0;
  double bias_scale = 0.1;
};

/// Seeded random model with orthogonal singular vectors and a power-law
/// spectrum normalized so that each layer has unit RMS gain times `gain`.
SequentialModel random_model(const ModelSpec& spec, std::uint64_t seed);

}  // namespace sfsvd
