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

#include "sfsvd/losses.hpp"

#include "sfsvd/errors.hpp"

#include <cmath>
#include <sstream>

namespace sfsvd {
namespace {

constexpr double kRelativeL1Floor = 1e-15;

void require_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << what << ": length mismatch " << a.size() << " vs " << b.size();
    throw ContractViolation(os.str());
  }
}

void require_same_grid(const GridField& a, const GridField& b, const char* what) {
  if (!(a.shape == b.shape)) throw ContractViolation(std::string(what) + ": grid mismatch");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double norm_q(const Vector& v, SobolevNorm q) {
  return q == SobolevNorm::l2 ? v.squaredNorm() : v.cwiseAbs().sum();
}

GridField as_field(const Vector& v, const LossConfig& cfg) {
  if (!cfg.grid) throw ConfigError("grid", "Sobolev term requires grid metadata");
  if (static_cast<std::size_t>(v.size()) != cfg.grid->size()) {
    std::ostringstream os;
    os << "vector of length " << v.size() << " does not match grid size " << cfg.grid->size();
    throw ConfigError("grid", os.str());
  }
  return GridField(*cfg.grid, v);
}

}  // namespace

std::optional<int> required_sobolev_order(PdeFamily family) {
  switch (family) {
    case PdeFamily::incompressible_ns:
    case PdeFamily::diffusion_reaction:
      return 2;
    case PdeFamily::compressible_euler:
    case PdeFamily::compressible_ns:
    case PdeFamily::wave:
    case PdeFamily::shallow_water:
      return 1;
    case PdeFamily::unspecified:
      return std::nullopt;
  }
  return std::nullopt;
}

void LossConfig::validate() const {
  if (sobolev_order < 0 || sobolev_order > 2) {
    throw ConfigError("sobolev_order", "must be 0, 1 or 2");
  }
  for (double w : derivative_weights) {
    if (!(w > 0.0)) throw ConfigError("derivative_weights", "weights must be positive");
  }
  if (!(sobolev_scale >= 0.0) || !std::isfinite(sobolev_scale)) {
    throw ConfigError("sobolev_scale", "must be finite and >= 0");
  }
  if (sobolev_scale > 0.0 && !grid) {
    throw ConfigError("grid", "sobolev_scale > 0 requires grid metadata");
  }
  if (auto p = required_sobolev_order(family); p && *p != sobolev_order) {
    std::ostringstream os;
    os << "family " << to_string(family) << " requires Sobolev order " << *p << ", got "
       << sobolev_order;
    throw ConfigError("sobolev_order", os.str());
  }
}

double base_loss(const Vector& pred, const Vector& target, BaseLoss kind) {
  require_same_length(pred, target, "base_loss");
  if (pred.size() == 0) return 0.0;
  const Vector r = pred - target;
  if (kind == BaseLoss::mse) return r.squaredNorm() / static_cast<double>(r.size());
  return r.cwiseAbs().sum() / std::max(target.cwiseAbs().sum(), kRelativeL1Floor);
}

Vector base_loss_grad(const Vector& pred, const Vector& target, BaseLoss kind) {
  require_same_length(pred, target, "base_loss_grad");
  const Vector r = pred - target;
  if (kind == BaseLoss::mse) return (2.0 / static_cast<double>(r.size())) * r;
  const double denom = std::max(target.cwiseAbs().sum(), kRelativeL1Floor);
  return r.unaryExpr([](double v) { return sign(v); }) / denom;
}

std::array<double, 3> sobolev_terms(const GridField& pred, const GridField& target,
                                    const LossConfig& cfg) {
  require_same_grid(pred, target, "sobolev_loss");
  std::array<double, 3> terms{0.0, 0.0, 0.0};
  GridField residual = pred;
  residual.data -= target.data;
  const double norm = 1.0 / static_cast<double>(pred.shape.size());
  for (Derivative d : derivatives_up_to(cfg.sobolev_order)) {
    const int order = derivative_order(d);
    const GridField dr = fd_apply(residual, d);
    terms[order] += cfg.derivative_weights[order] * norm * norm_q(dr.data, cfg.sobolev_norm);
  }
  return terms;
}

double sobolev_loss(const GridField& pred, const GridField& target, const LossConfig& cfg) {
  const auto t = sobolev_terms(pred, target, cfg);
  return t[0] + t[1] + t[2];
}

GridField sobolev_loss_grad(const GridField& pred, const GridField& target,
                            const LossConfig& cfg) {
  require_same_grid(pred, target, "sobolev_loss_grad");
  GridField residual = pred;
  residual.data -= target.data;
  GridField grad(pred.shape);
  const double norm = 1.0 / static_cast<double>(pred.shape.size());
  for (Derivative d : derivatives_up_to(cfg.sobolev_order)) {
    const double w = cfg.derivative_weights[derivative_order(d)] * norm;
    GridField dr = fd_apply(residual, d);
    if (cfg.sobolev_norm == SobolevNorm::l2) {
      dr.data *= 2.0;
    } else {
      dr.data = dr.data.unaryExpr([](double v) { return sign(v); });
    }
    grad.data += w * fd_apply_adjoint(dr, d).data;
  }
  return grad;
}

double combined_loss(const Vector& pred, const Vector& target, const LossConfig& cfg) {
  double loss = base_loss(pred, target, cfg.base);
  if (cfg.sobolev_scale > 0.0) {
    loss += cfg.sobolev_scale * sobolev_loss(as_field(pred, cfg), as_field(target, cfg), cfg);
  }
  return loss;
}

Vector combined_loss_grad(const Vector& pred, const Vector& target, const LossConfig& cfg) {
  Vector grad = base_loss_grad(pred, target, cfg.base);
  if (cfg.sobolev_scale > 0.0) {
    grad += cfg.sobolev_scale *
            sobolev_loss_grad(as_field(pred, cfg), as_field(target, cfg), cfg).data;
  }
  return grad;
}

double div_free_error(const GridField& velocity) {
  const GridField div = fd_divergence(velocity);
  return div.data.cwiseAbs().mean();
}

double vorticity_error(const GridField& pred_velocity, const GridField& ref_velocity) {
  require_same_grid(pred_velocity, ref_velocity, "vorticity_error");
  const GridField a = fd_vorticity(pred_velocity);
  const GridField b = fd_vorticity(ref_velocity);
  return (a.data - b.data).cwiseAbs().mean();
}

std::map<std::string, std::optional<double>> relative_change_report(
    const std::map<std::string, double>& original, const std::map<std::string, double>& compressed) {
  std::map<std::string, std::optional<double>> out;
  for (const auto& [key, orig] : original) {
    auto it = compressed.find(key);
    if (it == compressed.end()) {
      throw ContractViolation("relative_change_report: missing compressed metric '" + key + "'");
    }
    if (orig == 0.0) {
      out[key] = std::nullopt;
    } else {
      out[key] = 100.0 * (it->second - orig) / std::abs(orig);
    }
  }
  if (compressed.size() != original.size()) {
    throw ContractViolation("relative_change_report: metric key sets differ");
  }
  return out;
}

const char* to_string(BaseLoss kind) { return kind == BaseLoss::mse ? "mse" : "relative_l1"; }
const char* to_string(SobolevNorm norm) { return norm == SobolevNorm::l1 ? "l1" : "l2"; }

const char* to_string(PdeFamily family) {
  switch (family) {
    case PdeFamily::unspecified:
      return "unspecified";
    case PdeFamily::incompressible_ns:
      return "incompressible_ns";
    case PdeFamily::diffusion_reaction:
      return "diffusion_reaction";
    case PdeFamily::compressible_euler:
      return "compressible_euler";
    case PdeFamily::compressible_ns:
      return "compressible_ns";
    case PdeFamily::wave:
      return "wave";
    case PdeFamily::shallow_water:
      return "shallow_water";
  }
  return "?";
}

std::optional<BaseLoss> parse_base_loss(const std::string& s) {
  if (s == "mse") return BaseLoss::mse;
  if (s == "relative_l1") return BaseLoss::relative_l1;
  return std::nullopt;
}

std::optional<SobolevNorm> parse_sobolev_norm(const std::string& s) {
  if (s == "l1") return SobolevNorm::l1;
  if (s == "l2") return SobolevNorm::l2;
  return std::nullopt;
}

std::optional<PdeFamily> parse_pde_family(const std::string& s) {
  for (PdeFamily f : {PdeFamily::unspecified, PdeFamily::incompressible_ns,
                      PdeFamily::diffusion_reaction, PdeFamily::compressible_euler,
                      PdeFamily::compressible_ns, PdeFamily::wave, PdeFamily::shallow_water}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

}  // namespace sfsvd
