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

#include "sfsvd/calibration.hpp"

#include "sfsvd/errors.hpp"
#include "sfsvd/kernels.hpp"

#include <algorithm>
#include <sstream>

namespace sfsvd {
namespace {

Matrix columns(const std::vector<Vector>& vs, std::size_t dim) {
  Matrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(vs.size()));
  for (std::size_t n = 0; n < vs.size(); ++n) out.col(static_cast<Eigen::Index>(n)) = vs[n];
  return out;
}

std::vector<std::size_t> indices_for_tag(const Dataset& dataset, std::size_t tag) {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < dataset.samples.size(); ++n) {
    if (dataset.samples[n].tag == tag) out.push_back(n);
  }
  return out;
}

void require_same_layers(const StatsGroups& groups) {
  if (groups.empty()) throw ContractViolation("balance_stats: no dataset groups");
  const auto& first = groups.begin()->second;
  for (const auto& [tag, layers] : groups) {
    if (layers.size() != first.size()) {
      throw ContractViolation("balance_stats: group '" + tag + "' covers a different layer set");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].sigma_xx.rows() != first[l].sigma_xx.rows() ||
          layers[l].fisher_z.rows() != first[l].fisher_z.rows()) {
        std::ostringstream os;
        os << "balance_stats: group '" << tag << "' layer " << l << " has mismatched dimensions";
        throw ContractViolation(os.str());
      }
    }
  }
}

double balance_scale(double trace, double max_trace) {
  return trace > kBalanceEpsilon ? max_trace / trace : 1.0;
}

PairStats pair_stats_over(const SequentialModel& original, const SequentialModel& partial,
                          const Dataset& dataset, const std::vector<std::size_t>& rows,
                          std::size_t layer_index, Exec exec) {
  const std::size_t d = original.in_dim(layer_index);
  std::vector<Vector> clean(rows.size()), shifted(rows.size());
  kernels::for_each_index(rows.size(), exec, [&](std::size_t k) {
    const Vector& x = dataset.samples[rows[k]].input.data;
    clean[k] = activation_at(original, x, layer_index);
    shifted[k] = activation_at(partial, x, layer_index);
  });
  const Matrix xc = columns(clean, d);
  const Matrix xs = columns(shifted, d);
  PairStats out;
  out.sigma_xpx = kernels::mean_outer(xs, xc, exec);
  out.sigma_xpxp = kernels::mean_outer(xs, xs, exec);
  out.n_samples = rows.size();
  return out;
}

void require_lockstep(const SequentialModel& a, const SequentialModel& b, std::size_t layer) {
  if (a.num_layers() != b.num_layers()) {
    throw ContractViolation("pair stats: models have different layer counts");
  }
  for (std::size_t i = 0; i < a.num_layers(); ++i) {
    if (a.in_dim(i) != b.in_dim(i) || a.out_dim(i) != b.out_dim(i)) {
      std::ostringstream os;
      os << "pair stats: architecture mismatch at layer " << i;
      throw ContractViolation(os.str());
    }
  }
  if (layer >= a.num_layers()) throw ContractViolation("pair stats: layer index out of range");
}

}  // namespace

StatsGroups accumulate_clean_stats(const SequentialModel& model, const Dataset& dataset,
                                   const LossConfig& loss, Exec exec) {
  if (dataset.samples.empty()) throw ContractViolation("accumulate_clean_stats: empty dataset");
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    if (model.is_factored(i)) {
      throw ContractViolation("accumulate_clean_stats: model must be dense (uncompressed)");
    }
  }
  dataset.validate();
  const std::size_t layers = model.num_layers();

  StatsGroups groups;
  for (std::size_t tag = 0; tag < dataset.tags.size(); ++tag) {
    const std::vector<std::size_t> rows = indices_for_tag(dataset, tag);
    if (rows.empty()) continue;
    std::vector<ForwardTrace> traces(rows.size());
    std::vector<GradTrace> grads(rows.size());
    kernels::for_each_index(rows.size(), exec, [&](std::size_t k) {
      const Sample& s = dataset.samples[rows[k]];
      traces[k] = forward(model, s.input.data);
      grads[k] = backward(model, traces[k], s.target.data, loss);
    });
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (std::size_t l = 0; l < layers; ++l) {
        if (!grads[k].z_grads[l].allFinite()) {
          std::ostringstream os;
          os << "accumulate_clean_stats: non-finite gradient at sample " << rows[k] << ", layer "
             << l;
          throw NumericalError(os.str());
        }
      }
    }
    std::vector<LayerStats> per_layer(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      std::vector<Vector> xs(rows.size()), gs(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        xs[k] = traces[k].inputs[l];
        gs[k] = grads[k].z_grads[l];
      }
      const Matrix x = columns(xs, model.in_dim(l));
      const Matrix g = columns(gs, model.out_dim(l));
      per_layer[l].sigma_xx = kernels::mean_outer(x, x, exec);
      per_layer[l].fisher_z = kernels::mean_outer(g, g, exec);
      per_layer[l].n_samples = rows.size();
      per_layer[l].dataset_tag = dataset.tags[tag];
    }
    groups.emplace(dataset.tags[tag], std::move(per_layer));
  }
  return groups;
}

PairStats accumulate_pair_stats(const SequentialModel& original, const SequentialModel& partial,
                                const Dataset& dataset, std::size_t layer_index, Exec exec) {
  require_lockstep(original, partial, layer_index);
  if (dataset.samples.empty()) throw ContractViolation("accumulate_pair_stats: empty dataset");
  std::vector<std::size_t> rows(dataset.samples.size());
  for (std::size_t n = 0; n < rows.size(); ++n) rows[n] = n;
  return pair_stats_over(original, partial, dataset, rows, layer_index, exec);
}

PairStats combined_pair_stats(const SequentialModel& original, const SequentialModel& partial,
                              const Dataset& dataset, std::size_t layer_index,
                              const BalancedStats& stats, Exec exec) {
  require_lockstep(original, partial, layer_index);
  const auto d = static_cast<Eigen::Index>(original.in_dim(layer_index));
  PairStats out;
  out.sigma_xpx = Matrix::Zero(d, d);
  out.sigma_xpxp = Matrix::Zero(d, d);
  // Same group order as the reference statistics (map order), so an
  // unperturbed prefix reproduces them bitwise.
  for (const auto& [name, weights] : stats.pair_weights) {
    const auto found = std::find(dataset.tags.begin(), dataset.tags.end(), name);
    if (found == dataset.tags.end()) continue;
    const std::vector<std::size_t> rows =
        indices_for_tag(dataset, static_cast<std::size_t>(found - dataset.tags.begin()));
    if (rows.empty()) continue;
    if (layer_index >= weights.size()) {
      throw ContractViolation("combined_pair_stats: no weight for layer of tag '" + name + "'");
    }
    const PairStats part = pair_stats_over(original, partial, dataset, rows, layer_index, exec);
    out.sigma_xpx += weights[layer_index] * part.sigma_xpx;
    out.sigma_xpxp += weights[layer_index] * part.sigma_xpxp;
    out.n_samples += part.n_samples;
  }
  if (out.n_samples == 0) {
    throw ContractViolation("combined_pair_stats: dataset shares no tags with the statistics");
  }
  return out;
}

BalancedStats balance_stats(const StatsGroups& groups) {
  require_same_layers(groups);
  const std::size_t layers = groups.begin()->second.size();
  const double inv_groups = 1.0 / static_cast<double>(groups.size());
  BalancedStats out;
  out.balanced = true;
  out.sigma_xx.resize(layers);
  out.fisher_z.resize(layers);
  for (const auto& [tag, _] : groups) {
    out.scale_log[tag].resize(layers);
    out.pair_weights[tag].resize(layers);
  }
  for (std::size_t l = 0; l < layers; ++l) {
    double tau_x = 0.0, tau_f = 0.0;
    for (const auto& [tag, stats] : groups) {
      tau_x = std::max(tau_x, stats[l].sigma_xx.trace());
      tau_f = std::max(tau_f, stats[l].fisher_z.trace());
    }
    const auto& first = groups.begin()->second[l];
    out.sigma_xx[l] = Matrix::Zero(first.sigma_xx.rows(), first.sigma_xx.cols());
    out.fisher_z[l] = Matrix::Zero(first.fisher_z.rows(), first.fisher_z.cols());
    for (const auto& [tag, stats] : groups) {
      const double sx = balance_scale(stats[l].sigma_xx.trace(), tau_x);
      const double sf = balance_scale(stats[l].fisher_z.trace(), tau_f);
      out.sigma_xx[l] += (sx * inv_groups) * stats[l].sigma_xx;
      out.fisher_z[l] += (sf * inv_groups) * stats[l].fisher_z;
      out.scale_log[tag][l] = LayerScale{sx, sf};
      out.pair_weights[tag][l] = sx * inv_groups;
    }
  }
  return out;
}

BalancedStats pool_stats(const StatsGroups& groups) {
  require_same_layers(groups);
  const std::size_t layers = groups.begin()->second.size();
  BalancedStats out;
  out.sigma_xx.resize(layers);
  out.fisher_z.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t total = 0;
    for (const auto& [tag, stats] : groups) total += stats[l].n_samples;
    if (total == 0) throw ContractViolation("pool_stats: groups hold no samples");
    const auto& first = groups.begin()->second[l];
    out.sigma_xx[l] = Matrix::Zero(first.sigma_xx.rows(), first.sigma_xx.cols());
    out.fisher_z[l] = Matrix::Zero(first.fisher_z.rows(), first.fisher_z.cols());
    for (const auto& [tag, stats] : groups) {
      const double w = static_cast<double>(stats[l].n_samples) / static_cast<double>(total);
      if (groups.size() == 1) {
        out.sigma_xx[l] = stats[l].sigma_xx;
        out.fisher_z[l] = stats[l].fisher_z;
      } else {
        out.sigma_xx[l] += w * stats[l].sigma_xx;
        out.fisher_z[l] += w * stats[l].fisher_z;
      }
      out.scale_log[tag].push_back(LayerScale{1.0, 1.0});
      out.pair_weights[tag].push_back(groups.size() == 1 ? 1.0 : w);
    }
  }
  return out;
}

double auto_sobolev_scale(const SequentialModel& model, const Dataset& dataset,
                          const LossConfig& loss, std::size_t pilot) {
  if (loss.sobolev_order < 0 || !loss.grid) return 0.0;
  const std::size_t n = std::min(pilot, dataset.samples.size());
  if (n == 0) throw ContractViolation("auto_sobolev_scale: empty dataset");
  double base = 0.0, sob = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Sample& s = dataset.samples[k];
    const Vector pred = predict(model, s.input.data);
    base += base_loss(pred, s.target.data, loss.base);
    sob += sobolev_loss(GridField(*loss.grid, pred), GridField(*loss.grid, s.target.data), loss);
  }
  if (!(sob > 0.0)) return 0.0;
  return 10.0 * base / sob;
}

}  // namespace sfsvd
