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

#include "sfsvd/pipeline.hpp"

#include "sfsvd/errors.hpp"
#include "sfsvd/io.hpp"
#include "sfsvd/kernels.hpp"

#include <json.hpp>

#include <random>
#include <sstream>

namespace sfsvd {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

const char* mode_name(FactorMode m) { return m == FactorMode::cholesky ? "cholesky" : "evd_fallback"; }

nlohmann::json objective_json(const EmpiricalObjective& o) {
  return {{"intra", o.intra}, {"propagated", o.propagated}, {"total", o.total}};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  return splitmix(splitmix(seed) ^ static_cast<std::uint64_t>(stream));
}

DatasetSpec dataset_spec(const RunConfig& cfg, Split split) {
  DatasetSpec spec;
  spec.grid = cfg.grid();
  spec.num_samples = split == Split::calib ? cfg.calib_samples : cfg.test_samples;
  spec.tags = cfg.tags;
  spec.tag_scales = cfg.tag_scales;
  spec.kind = cfg.field_kind;
  spec.num_modes = cfg.num_modes;
  spec.decay = cfg.decay;
  return spec;
}

Dataset make_dataset(const RunConfig& cfg, Split split) {
  return generate_dataset(dataset_spec(cfg, split),
                          derive_seed(cfg.seed, split == Split::calib ? SeedStream::calib_data
                                                                      : SeedStream::test_data));
}

ModelSpec model_spec(const RunConfig& cfg) {
  ModelSpec spec;
  spec.input_dim = cfg.grid().size();
  spec.output_dim = cfg.grid().size();
  spec.hidden = cfg.hidden;
  spec.hidden_activation = cfg.hidden_activation;
  spec.output_activation = cfg.output_activation;
  spec.spectrum_decay = cfg.spectrum_decay;
  spec.gain = cfg.gain;
  spec.bias_scale = cfg.bias_scale;
  return spec;
}

SequentialModel make_model(const RunConfig& cfg, const Dataset* train_data, Exec exec) {
  SequentialModel model = random_model(model_spec(cfg), derive_seed(cfg.seed, SeedStream::model));
  if (cfg.model_init == ModelInit::random) return model;
  if (!train_data) throw ConfigError("model_init", "trained models need a training dataset");
  return train_model(model, *train_data, loss_config(cfg, train_data->grid), cfg.train_steps,
                     cfg.learning_rate, exec);
}

SequentialModel train_model(const SequentialModel& model, const Dataset& data, const LossConfig& loss,
                            std::size_t steps, double learning_rate, Exec exec) {
  if (data.samples.empty()) throw ContractViolation("train_model: empty dataset");
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    if (model.is_factored(l)) throw ContractViolation("train_model: model must be dense");
  }
  std::vector<Layer> layers = model.layers();
  const double inv = 1.0 / static_cast<double>(data.samples.size());
  for (std::size_t step = 0; step < steps; ++step) {
    const SequentialModel current(layers);
    std::vector<ForwardTrace> traces(data.samples.size());
    std::vector<GradTrace> grads(data.samples.size());
    kernels::for_each_index(data.samples.size(), exec, [&](std::size_t n) {
      traces[n] = forward(current, data.samples[n].input.data);
      grads[n] = backward(current, traces[n], data.samples[n].target.data, loss);
    });
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& dense = std::get<LinearLayer>(layers[l]);
      Matrix dw = Matrix::Zero(dense.weight.rows(), dense.weight.cols());
      Vector db = Vector::Zero(dense.bias.size());
      for (std::size_t n = 0; n < grads.size(); ++n) {
        dw.noalias() += grads[n].z_grads[l] * traces[n].inputs[l].transpose();
        db += grads[n].z_grads[l];
      }
      dense.weight -= (learning_rate * inv) * dw;
      dense.bias -= (learning_rate * inv) * db;
    }
  }
  SequentialModel out(std::move(layers));
  return out;
}

Dataset relabel(const Dataset& data, const SequentialModel& model, double noise, std::uint64_t seed) {
  Dataset out = data;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Sample& s : out.samples) {
    Vector y = predict(model, s.input.data);
    if (noise > 0.0) {
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise * gauss(rng);
    }
    s.target = GridField(data.grid, std::move(y));
  }
  return out;
}

Dataset prepare_targets(const RunConfig& cfg, const Dataset& data, const SequentialModel& model,
                        Split split) {
  if (model.input_dim() != data.grid.size() || model.output_dim() != data.grid.size()) {
    throw ConfigError("grid_channels", "model and dataset grids disagree");
  }
  if (cfg.targets == TargetSource::teacher) return data;
  const std::uint64_t seed = derive_seed(cfg.seed, SeedStream::noise) ^ static_cast<std::uint64_t>(split);
  return relabel(data, model, cfg.label_noise, seed);
}

LossConfig loss_config(const RunConfig& cfg, const GridShape& grid) {
  LossConfig loss;
  loss.base = cfg.base_loss;
  loss.sobolev_order = cfg.effective_sobolev_order();
  loss.sobolev_norm = cfg.sobolev_norm;
  loss.derivative_weights = cfg.derivative_weights;
  loss.family = cfg.pde_family;
  loss.grid = grid;
  loss.sobolev_scale = 0.0;
  loss.validate();
  return loss;
}

LossConfig resolve_loss(const RunConfig& cfg, const SequentialModel& model, const Dataset& data) {
  LossConfig loss = loss_config(cfg, data.grid);
  loss.sobolev_scale = cfg.sobolev_scale ? *cfg.sobolev_scale : auto_sobolev_scale(model, data, loss);
  loss.validate();
  return loss;
}

StatsFile calibrate(const RunConfig& cfg, const SequentialModel& model, const Dataset& data, Exec exec) {
  StatsFile out;
  out.loss = resolve_loss(cfg, model, data);
  out.groups = accumulate_clean_stats(model, data, out.loss, exec);
  return out;
}

BalancedStats reference_stats(const StatsGroups& groups, bool balance) {
  return balance ? balance_stats(groups) : pool_stats(groups);
}

PlanFile make_plan(const RunConfig& cfg, const SequentialModel& model, const StatsFile& stats,
                   bool exact) {
  PlanFile out;
  out.balance = cfg.balance;
  out.exact = exact;
  if (exact) {
    out.plan = full_rank_plan(model);
    return out;
  }
  if (cfg.allocation == Allocation::uniform) {
    out.plan = uniform_allocate(model, cfg.ratio);
    return out;
  }
  const BalancedStats ref = reference_stats(stats.groups, cfg.balance);
  const ScoreTable scores = score_model(model, ref, cfg.fisher_mode == FisherMode::fisher);
  out.plan = greedy_allocate(scores, budget(cfg.ratio, model));
  out.plan.ratio = cfg.ratio;
  return out;
}

CompressionConfig compression_config(const RunConfig& cfg, const LossConfig& loss, Exec exec) {
  CompressionConfig out;
  out.alpha = cfg.alpha;
  out.fisher_mode = cfg.fisher_mode;
  out.balance = cfg.balance;
  out.ratio = cfg.ratio;
  out.loss = loss;
  out.exec = exec;
  return out;
}

std::map<std::string, double> evaluate_metrics(const SequentialModel& model, const Dataset& data,
                                               const LossConfig& loss) {
  if (data.samples.empty()) throw ContractViolation("evaluate_metrics: empty dataset");
  const bool velocity = data.grid.channels == 2;
  double base = 0.0, sob = 0.0, div = 0.0, vort = 0.0;
  for (const Sample& s : data.samples) {
    const GridField pred(data.grid, predict(model, s.input.data));
    base += base_loss(pred.data, s.target.data, loss.base);
    sob += sobolev_loss(pred, s.target, loss);
    if (velocity) {
      div += div_free_error(pred);
      vort += vorticity_error(pred, s.target);
    }
  }
  const double inv = 1.0 / static_cast<double>(data.samples.size());
  std::map<std::string, double> out{{"base_loss", base * inv}, {"sobolev_loss", sob * inv}};
  if (velocity) {
    out["div_free_error"] = div * inv;
    out["vorticity_error"] = vort * inv;
  }
  return out;
}

double mean_combined_loss(const SequentialModel& model, const Dataset& data, const LossConfig& loss) {
  if (data.samples.empty()) throw ContractViolation("mean_combined_loss: empty dataset");
  double total = 0.0;
  for (const Sample& s : data.samples) {
    total += combined_loss(predict(model, s.input.data), s.target.data, loss);
  }
  return total / static_cast<double>(data.samples.size());
}

std::string metrics_report(const std::map<std::string, double>& original,
                           const std::map<std::string, double>& compressed) {
  const auto change = relative_change_report(original, compressed);
  std::ostringstream os;
  for (const char* key : {"base_loss", "sobolev_loss", "div_free_error", "vorticity_error"}) {
    const auto o = original.find(key);
    if (o == original.end()) {
      os << key << "_orig = n/a\n" << key << "_compressed = n/a\n" << key << "_rel_change_pct = n/a\n";
      continue;
    }
    const auto pct = change.at(key);
    os << key << "_orig = " << format_double(o->second) << "\n"
       << key << "_compressed = " << format_double(compressed.at(key)) << "\n"
       << key << "_rel_change_pct = " << (pct ? format_double(*pct) : std::string("undefined"))
       << "\n";
  }
  return os.str();
}

std::string compression_report_json(const CompressionReport& report, const PlanFile& plan,
                                    const SequentialModel& original, const SequentialModel& compressed) {
  nlohmann::json j;
  j["alpha"] = report.alpha;
  j["fisher_mode"] = to_string(report.fisher_mode);
  j["balance"] = report.balance;
  j["exact"] = plan.exact;
  j["ratio"] = plan.plan.ratio;
  j["budget"] = plan.plan.budget;
  j["spent"] = plan.plan.spent;
  j["skipped_components"] = plan.plan.skipped_components;
  j["params_original"] = param_count(original).budgeted;
  j["params_compressed"] = param_count(compressed).budgeted;
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const LayerReport& r = report.layers[l];
    layers.push_back({{"layer", l},
                      {"rank", r.rank},
                      {"fisher_factor", mode_name(r.fisher_mode)},
                      {"fisher_jitter", r.fisher_jitter},
                      {"cov_factor", mode_name(r.cov_mode)},
                      {"cov_jitter", r.cov_jitter},
                      {"cov_rank", r.cov_rank},
                      {"objective_before", objective_json(r.before)},
                      {"objective_after", objective_json(r.after)}});
  }
  j["layers"] = layers;
  return j.dump(2) + "\n";
}

}  // namespace sfsvd
