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

#include "sfsvd/netcore.hpp"

#include "sfsvd/errors.hpp"
#include "sfsvd/kernels.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace sfsvd {
namespace {

struct LayerView {
  std::size_t out = 0;
  std::size_t in = 0;
  const Vector* bias = nullptr;
  Activation activation = Activation::identity;
};

LayerView view(const Layer& layer) {
  return std::visit(
      [](const auto& l) { return LayerView{l.out_dim(), l.in_dim(), &l.bias, l.activation}; },
      layer);
}

Vector linear(const Layer& layer, const Vector& x) {
  if (const auto* dense = std::get_if<LinearLayer>(&layer)) {
    return dense->weight * x + dense->bias;
  }
  const auto& f = std::get<FactoredLayer>(layer);
  if (f.rank() == 0) return f.bias;
  return f.left * (f.right * x) + f.bias;
}

// W^T g without forming W for factored layers.
Vector linear_transpose(const Layer& layer, const Vector& g) {
  if (const auto* dense = std::get_if<LinearLayer>(&layer)) {
    return dense->weight.transpose() * g;
  }
  const auto& f = std::get<FactoredLayer>(layer);
  if (f.rank() == 0) return Vector::Zero(static_cast<Eigen::Index>(f.in_dim()));
  return f.right.transpose() * (f.left.transpose() * g);
}

Vector activation_derivative(Activation a, const Vector& z) {
  if (a == Activation::identity) return Vector::Ones(z.size());
  return z.unaryExpr([](double v) {
    const double t = std::tanh(v);
    return 1.0 - t * t;
  });
}

void check_layer(const Layer& layer, std::size_t index) {
  std::ostringstream os;
  const LayerView v = view(layer);
  if (v.out == 0 || v.in == 0) {
    os << "layer " << index << ": dimensions must be >= 1";
    throw ContractViolation(os.str());
  }
  if (static_cast<std::size_t>(v.bias->size()) != v.out) {
    os << "layer " << index << ": bias length " << v.bias->size() << " != d_out " << v.out;
    throw ContractViolation(os.str());
  }
  bool finite = v.bias->allFinite();
  if (const auto* f = std::get_if<FactoredLayer>(&layer)) {
    if (f->left.cols() != f->right.rows()) {
      os << "layer " << index << ": factor ranks disagree (" << f->left.cols() << " vs "
         << f->right.rows() << ")";
      throw ContractViolation(os.str());
    }
    finite = finite && f->left.allFinite() && f->right.allFinite();
  } else {
    finite = finite && std::get<LinearLayer>(layer).weight.allFinite();
  }
  if (!finite) {
    os << "layer " << index << ": non-finite parameters";
    throw ContractViolation(os.str());
  }
}

Matrix random_orthonormal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  return q;
}

}  // namespace

const char* to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

std::optional<Activation> parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  return std::nullopt;
}

SequentialModel::SequentialModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_layer(layers_[i], i);
    if (i > 0 && view(layers_[i - 1]).out != view(layers_[i]).in) {
      std::ostringstream os;
      os << "layer " << i << ": input dim " << view(layers_[i]).in
         << " does not chain with previous output dim " << view(layers_[i - 1]).out;
      throw ContractViolation(os.str());
    }
  }
}

std::size_t SequentialModel::input_dim() const {
  return layers_.empty() ? 0 : view(layers_.front()).in;
}
std::size_t SequentialModel::output_dim() const {
  return layers_.empty() ? 0 : view(layers_.back()).out;
}
std::size_t SequentialModel::out_dim(std::size_t i) const { return view(layers_.at(i)).out; }
std::size_t SequentialModel::in_dim(std::size_t i) const { return view(layers_.at(i)).in; }
const Vector& SequentialModel::bias(std::size_t i) const { return *view(layers_.at(i)).bias; }
Activation SequentialModel::activation(std::size_t i) const {
  return view(layers_.at(i)).activation;
}
bool SequentialModel::is_factored(std::size_t i) const {
  return std::holds_alternative<FactoredLayer>(layers_.at(i));
}

Matrix SequentialModel::dense_weight(std::size_t i) const {
  const Layer& layer = layers_.at(i);
  if (const auto* dense = std::get_if<LinearLayer>(&layer)) return dense->weight;
  const auto& f = std::get<FactoredLayer>(layer);
  if (f.rank() == 0) {
    return Matrix::Zero(static_cast<Eigen::Index>(f.out_dim()),
                        static_cast<Eigen::Index>(f.in_dim()));
  }
  return f.left * f.right;
}

Vector apply_activation(Activation a, const Vector& z) {
  if (a == Activation::identity) return z;
  return z.array().tanh().matrix();
}

ForwardTrace forward(const SequentialModel& model, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != model.input_dim()) {
    std::ostringstream os;
    os << "forward: input length " << x.size() << " != model input dim " << model.input_dim();
    throw ContractViolation(os.str());
  }
  ForwardTrace trace;
  trace.inputs.reserve(model.num_layers());
  trace.linear_outputs.reserve(model.num_layers());
  Vector current = x;
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    Vector z = linear(model.layer(i), current);
    trace.inputs.push_back(std::move(current));
    current = apply_activation(model.activation(i), z);
    trace.linear_outputs.push_back(std::move(z));
  }
  trace.final_output = std::move(current);
  return trace;
}

Vector predict(const SequentialModel& model, const Vector& x) {
  return activation_at(model, x, model.num_layers());
}

Vector activation_at(const SequentialModel& model, const Vector& x, std::size_t index) {
  if (static_cast<std::size_t>(x.size()) != model.input_dim()) {
    throw ContractViolation("activation_at: input length does not match model input dim");
  }
  if (index > model.num_layers()) throw ContractViolation("activation_at: index out of range");
  Vector current = x;
  for (std::size_t i = 0; i < index; ++i) {
    current = apply_activation(model.activation(i), linear(model.layer(i), current));
  }
  return current;
}

GradTrace backward(const SequentialModel& model, const ForwardTrace& trace, const Vector& target,
                   const LossConfig& loss) {
  const std::size_t n = model.num_layers();
  if (trace.linear_outputs.size() != n || trace.inputs.size() != n) {
    throw ContractViolation("backward: trace does not belong to this model");
  }
  if (static_cast<std::size_t>(target.size()) != model.output_dim()) {
    throw ContractViolation("backward: target length does not match model output dim");
  }
  if (loss.sobolev_scale > 0.0 && (!loss.grid || loss.grid->size() != model.output_dim())) {
    throw ConfigError("grid", "Sobolev loss needs a grid whose C*H*W equals the model output dim");
  }
  GradTrace grads;
  grads.z_grads.resize(n);
  if (n == 0) return grads;
  Vector upstream = combined_loss_grad(trace.final_output, target, loss);
  for (std::size_t k = n; k-- > 0;) {
    Vector g = upstream.cwiseProduct(
        activation_derivative(model.activation(k), trace.linear_outputs[k]));
    if (k > 0) upstream = linear_transpose(model.layer(k), g);
    grads.z_grads[k] = std::move(g);
  }
  return grads;
}

SequentialModel replace_layer(const SequentialModel& model, std::size_t index,
                              const FactoredLayer& factored) {
  if (index >= model.num_layers()) {
    std::ostringstream os;
    os << "replace_layer: index " << index << " out of range for " << model.num_layers()
       << " layers";
    throw ContractViolation(os.str());
  }
  if (factored.out_dim() != model.out_dim(index) || factored.in_dim() != model.in_dim(index)) {
    std::ostringstream os;
    os << "replace_layer: factored layer is " << factored.out_dim() << "x" << factored.in_dim()
       << ", layer " << index << " is " << model.out_dim(index) << "x" << model.in_dim(index);
    throw ContractViolation(os.str());
  }
  std::vector<Layer> layers = model.layers();
  layers[index] = factored;
  return SequentialModel(std::move(layers));
}

ParamCount param_count(const SequentialModel& model) {
  ParamCount count;
  for (const Layer& layer : model.layers()) {
    if (const auto* dense = std::get_if<LinearLayer>(&layer)) {
      count.budgeted += dense->out_dim() * dense->in_dim();
      count.bias += static_cast<std::size_t>(dense->bias.size());
    } else {
      const auto& f = std::get<FactoredLayer>(layer);
      count.budgeted += f.rank() * (f.out_dim() + f.in_dim());
      count.bias += static_cast<std::size_t>(f.bias.size());
    }
  }
  return count;
}

std::vector<Vector> predict_batch(const SequentialModel& model, const std::vector<Vector>& inputs,
                                  Exec exec) {
  std::vector<Vector> out(inputs.size());
  kernels::for_each_index(inputs.size(), exec,
                          [&](std::size_t i) { out[i] = predict(model, inputs[i]); });
  return out;
}

SequentialModel random_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim == 0 || spec.output_dim == 0) {
    throw ContractViolation("random_model: input and output dims must be >= 1");
  }
  std::vector<std::size_t> dims{spec.input_dim};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.output_dim);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const Eigen::Index r = std::min(out, in);
    Vector s(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      s(i) = std::pow(1.0 + static_cast<double>(i), -spec.spectrum_decay);
    }
    s *= spec.gain / std::sqrt(s.squaredNorm() / static_cast<double>(r));
    const Matrix u = random_orthonormal(rng, out, r);
    const Matrix v = random_orthonormal(rng, in, r);
    LinearLayer layer;
    layer.weight = u * s.asDiagonal() * v.transpose();
    layer.bias = Vector(out);
    for (Eigen::Index i = 0; i < out; ++i) layer.bias(i) = spec.bias_scale * gauss(rng);
    layer.activation = l + 2 == dims.size() ? spec.output_activation : spec.hidden_activation;
    layers.emplace_back(std::move(layer));
  }
  return SequentialModel(std::move(layers));
}

}  // namespace sfsvd
