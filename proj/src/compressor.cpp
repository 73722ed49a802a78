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

#include "sfsvd/compressor.hpp"

#include "sfsvd/errors.hpp"
#include "sfsvd/kernels.hpp"

#include <sstream>

namespace sfsvd {
namespace {

std::string layer_name(std::size_t l) { return "layer " + std::to_string(l); }

}  // namespace

const char* to_string(FisherMode m) { return m == FisherMode::fisher ? "fisher" : "identity"; }

void CompressionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in [0, 1]");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio", "must lie in (0, 1]");
  if (jitter_schedule.empty()) throw ConfigError("jitter_schedule", "must not be empty");
  loss.validate();
}

Matrix target_matrix(const LayerSolveInputs& in, const std::string& where) {
  const auto m = in.weight.rows();
  const auto n = in.weight.cols();
  if (static_cast<Eigen::Index>(in.fisher.order()) != m ||
      static_cast<Eigen::Index>(in.cov.order()) != n || in.sigma_cov.rows() != n ||
      in.sigma_cov.cols() != n) {
    std::ostringstream os;
    os << where << ": statistics do not match the " << m << "x" << n << " weight";
    throw ContractViolation(os.str());
  }
  // L W S_cov^T R^-T, applying R^-T by triangular / eigen solve.
  const Matrix ws = in.weight * in.sigma_cov.transpose();
  const Matrix wsr = solve_factor(in.cov, ws, Side::right_inverse_transpose, where + " input covariance");
  return loss_whitener(in.fisher) * wsr;
}

FactoredLayer compress_layer(const LayerSolveInputs& in, const Vector& bias, Activation activation,
                             const std::string& where) {
  const auto m = in.weight.rows();
  const auto n = in.weight.cols();
  const auto cap = static_cast<std::size_t>(std::min(m, n));
  if (in.rank > cap) {
    std::ostringstream os;
    os << where << ": rank " << in.rank << " exceeds min(d_out, d_in) = " << cap;
    throw ContractViolation(os.str());
  }
  FactoredLayer out;
  out.bias = bias;
  out.activation = activation;
  if (in.rank == 0) {
    out.left = Matrix::Zero(m, 0);
    out.right = Matrix::Zero(0, n);
    return out;
  }
  const Matrix target = target_matrix(in, where);
  auto [a, b] = truncated_svd(target, in.rank, where + " M*");
  out.left = solve_factor(in.fisher, a, Side::left_inverse_transpose, where + " Fisher factor");
  out.right = solve_factor(in.cov, b, Side::right_inverse, where + " input covariance");
  return out;
}

TraceObjective trace_objective(const Matrix& weight, const Matrix& candidate, const Matrix& whitener,
                               const Matrix& sigma_xx, const Matrix& sigma_cov,
                               const Matrix& sigma_ccov) {
  const Matrix lw = whitener * weight;
  const Matrix lc = whitener * candidate;
  TraceObjective t;
  t.variable = -2.0 * (lc * sigma_cov * lw.transpose()).trace() +
               (lc * sigma_ccov * lc.transpose()).trace();
  t.constant = (lw * sigma_xx * lw.transpose()).trace();
  return t;
}

double regression_residual(const Matrix& candidate, const Matrix& whitener, const Matrix& cov_factor,
                           const Matrix& target) {
  return (whitener * candidate * cov_factor - target).squaredNorm();
}

EmpiricalObjective empirical_objective(const SequentialModel& original,
                                       const SequentialModel& compressed, std::size_t layer_index,
                                       const Matrix& whitener, double alpha, const Dataset& dataset) {
  if (dataset.samples.empty()) throw ContractViolation("empirical_objective: empty dataset");
  const Matrix w = original.dense_weight(layer_index);
  const Matrix wc = compressed.dense_weight(layer_index);
  EmpiricalObjective out;
  for (const Sample& s : dataset.samples) {
    const Vector x = activation_at(original, s.input.data, layer_index);
    const Vector xp = activation_at(compressed, s.input.data, layer_index);
    const Vector wx = w * x;
    out.intra += (whitener * (wx - wc * x)).squaredNorm();
    out.propagated += (whitener * (wx - wc * xp)).squaredNorm();
  }
  const double inv = 1.0 / static_cast<double>(dataset.samples.size());
  out.intra *= inv;
  out.propagated *= inv;
  out.total = (1.0 - alpha) * out.intra + alpha * out.propagated;
  return out;
}

CompressionResult compress_model(const SequentialModel& model, const BalancedStats& stats,
                                 const Dataset& dataset, const RankPlan& plan,
                                 const CompressionConfig& cfg) {
  cfg.validate();
  const std::size_t layers = model.num_layers();
  if (stats.num_layers() != layers || plan.ranks.size() != layers) {
    throw ContractViolation("compress_model: plan and statistics must cover every layer");
  }
  if (dataset.samples.empty()) throw ContractViolation("compress_model: empty calibration set");

  CompressionReport report;
  report.alpha = cfg.alpha;
  report.fisher_mode = cfg.fisher_mode;
  report.balance = cfg.balance;

  SequentialModel working = model;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string where = layer_name(l);
    try {
      LayerReport row;
      row.rank = plan.ranks[l];

      LayerSolveInputs in;
      in.weight = model.dense_weight(l);
      in.rank = plan.ranks[l];
      in.fisher = cfg.fisher_mode == FisherMode::fisher
                      ? factor_spd(stats.fisher_z[l], cfg.jitter_schedule, where + " fisher_z")
                      : identity_factor(model.out_dim(l));

      const PairStats pair = combined_pair_stats(model, working, dataset, l, stats, cfg.exec);
      const Matrix& sxx = stats.sigma_xx[l];
      in.sigma_cov = (1.0 - cfg.alpha) * sxx + cfg.alpha * pair.sigma_xpx;
      const Matrix ccov = (1.0 - cfg.alpha) * sxx + cfg.alpha * pair.sigma_xpxp;
      in.cov = factor_spd(ccov, cfg.jitter_schedule, where + " sigma_c_cov");

      row.fisher_mode = in.fisher.mode;
      row.fisher_jitter = in.fisher.jitter_used;
      row.cov_mode = in.cov.mode;
      row.cov_jitter = in.cov.jitter_used;
      row.cov_rank = in.cov.rank();

      const Matrix whitener = loss_whitener(in.fisher);
      row.before = empirical_objective(model, working, l, whitener, cfg.alpha, dataset);
      const FactoredLayer solved = compress_layer(in, model.bias(l), model.activation(l), where);
      working = replace_layer(working, l, solved);
      row.after = empirical_objective(model, working, l, whitener, cfg.alpha, dataset);
      report.layers.push_back(row);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "compress_model: " << where << " failed: " << e.what();
      throw CompressionError(l, os.str(), report);
    }
  }
  return CompressionResult{std::move(working), std::move(report)};
}

SequentialModel truncate_model(const SequentialModel& model, const RankPlan& plan) {
  if (plan.ranks.size() != model.num_layers()) {
    throw ContractViolation("truncate_model: plan does not cover every layer");
  }
  SequentialModel out = model;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const Matrix w = model.dense_weight(l);
    FactoredLayer f;
    f.bias = model.bias(l);
    f.activation = model.activation(l);
    if (plan.ranks[l] == 0) {
      f.left = Matrix::Zero(w.rows(), 0);
      f.right = Matrix::Zero(0, w.cols());
    } else {
      auto [a, b] = truncated_svd(w, plan.ranks[l], layer_name(l) + " weight");
      f.left = std::move(a);
      f.right = std::move(b);
    }
    out = replace_layer(out, l, f);
  }
  return out;
}

}  // namespace sfsvd
