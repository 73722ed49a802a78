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

#include "sfsvd/artifacts.hpp"

#include "sfsvd/errors.hpp"

#include <sstream>

namespace sfsvd {
namespace {

using U64 = std::uint64_t;

void require_kind(const Sections& s, const std::string& kind) {
  const std::string got = as_text(require_section(s, "kind", kind + " file"));
  if (got != kind) throw FormatError("expected a " + kind + " file, found '" + got + "'");
}

std::vector<std::int64_t> ints(const Sections& s, const std::string& name, std::size_t count,
                               const std::string& ctx) {
  std::vector<std::int64_t> v = as_i64(require_section(s, name, ctx));
  if (v.size() != count) {
    throw FormatError(ctx + ": section '" + name + "' should hold " + std::to_string(count) +
                      " integers");
  }
  return v;
}

std::size_t to_size(std::int64_t v, const std::string& what) {
  if (v < 0) throw FormatError(what + " is negative");
  return static_cast<std::size_t>(v);
}

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].find('\n') != std::string::npos) {
      throw ContractViolation("name contains a newline: " + v[i]);
    }
    if (i) out += '\n';
    out += v[i];
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

Matrix rows_of(const std::vector<Vector>& vs, std::size_t width) {
  Matrix m(static_cast<Eigen::Index>(vs.size()), static_cast<Eigen::Index>(width));
  for (std::size_t n = 0; n < vs.size(); ++n) m.row(static_cast<Eigen::Index>(n)) = vs[n].transpose();
  return m;
}

void put_loss(Sections& out, const LossConfig& loss) {
  const std::int64_t has_grid = loss.grid ? 1 : 0;
  const GridShape g = loss.grid.value_or(GridShape{});
  const std::vector<std::int64_t> e{static_cast<std::int64_t>(loss.base),
                                    loss.sobolev_order,
                                    static_cast<std::int64_t>(loss.sobolev_norm),
                                    static_cast<std::int64_t>(loss.family),
                                    has_grid,
                                    static_cast<std::int64_t>(g.channels),
                                    static_cast<std::int64_t>(g.height),
                                    static_cast<std::int64_t>(g.width)};
  out.push_back(i64_section("loss.settings", {e.size()}, e));
  const std::vector<double> p{loss.sobolev_scale, loss.derivative_weights[0],
                              loss.derivative_weights[1], loss.derivative_weights[2], g.spacing};
  out.push_back(f64_section("loss.params", {p.size()}, p));
}

LossConfig get_loss(const Sections& s) {
  const auto e = ints(s, "loss.settings", 8, "stats file");
  const std::vector<double> p = as_f64(require_section(s, "loss.params", "stats file"));
  if (p.size() != 5) throw FormatError("stats file: loss.params should hold 5 values");
  if (e[0] < 0 || e[0] > 1 || e[2] < 0 || e[2] > 1 || e[3] < 0 || e[3] > 6) {
    throw FormatError("stats file: loss settings out of range");
  }
  LossConfig loss;
  loss.base = static_cast<BaseLoss>(e[0]);
  loss.sobolev_order = static_cast<int>(e[1]);
  loss.sobolev_norm = static_cast<SobolevNorm>(e[2]);
  loss.family = static_cast<PdeFamily>(e[3]);
  if (e[4]) {
    loss.grid = GridShape{to_size(e[5], "channels"), to_size(e[6], "height"),
                          to_size(e[7], "width"), p[4]};
  }
  loss.sobolev_scale = p[0];
  loss.derivative_weights = {p[1], p[2], p[3]};
  return loss;
}

}  // namespace

Sections model_sections(const SequentialModel& model) {
  Sections out;
  out.push_back(text_section("kind", "model"));
  // Per layer: factored flag, d_out, d_in, activation, rank.
  std::vector<std::int64_t> table;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    table.push_back(model.is_factored(l) ? 1 : 0);
    table.push_back(static_cast<std::int64_t>(model.out_dim(l)));
    table.push_back(static_cast<std::int64_t>(model.in_dim(l)));
    table.push_back(static_cast<std::int64_t>(model.activation(l)));
    table.push_back(model.is_factored(l)
                        ? static_cast<std::int64_t>(std::get<FactoredLayer>(model.layer(l)).rank())
                        : 0);
  }
  out.push_back(i64_section("layers", {model.num_layers(), 5}, table));
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    if (model.is_factored(l)) {
      const auto& f = std::get<FactoredLayer>(model.layer(l));
      out.push_back(matrix_section(p + "left", f.left));
      out.push_back(matrix_section(p + "right", f.right));
    } else {
      out.push_back(matrix_section(p + "weight", std::get<LinearLayer>(model.layer(l)).weight));
    }
    out.push_back(vector_section(p + "bias", model.bias(l)));
  }
  return out;
}

SequentialModel model_from_sections(const Sections& s) {
  require_kind(s, "model");
  const Section& table_s = require_section(s, "layers", "model file");
  if (table_s.dims.size() != 2 || table_s.dims[1] != 5) {
    throw FormatError("model file: 'layers' must be an L x 5 table");
  }
  const std::vector<std::int64_t> t = as_i64(table_s);
  const std::size_t count = table_s.dims[0];
  std::vector<Layer> layers;
  for (std::size_t l = 0; l < count; ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    const std::int64_t* row = t.data() + 5 * l;
    if (row[3] < 0 || row[3] > 1) throw FormatError("model file: bad activation code");
    const auto act = static_cast<Activation>(row[3]);
    const Vector bias = as_vector(require_section(s, p + "bias", "model file"));
    const auto m = static_cast<Eigen::Index>(to_size(row[1], "d_out"));
    const auto n = static_cast<Eigen::Index>(to_size(row[2], "d_in"));
    if (row[0] == 1) {
      FactoredLayer f{as_matrix(require_section(s, p + "left", "model file")),
                      as_matrix(require_section(s, p + "right", "model file")), bias, act};
      if (f.left.rows() != m || f.right.cols() != n ||
          f.left.cols() != static_cast<Eigen::Index>(to_size(row[4], "rank"))) {
        throw FormatError("model file: layer " + std::to_string(l) + " factors disagree with table");
      }
      layers.emplace_back(std::move(f));
    } else {
      LinearLayer d{as_matrix(require_section(s, p + "weight", "model file")), bias, act};
      if (d.weight.rows() != m || d.weight.cols() != n) {
        throw FormatError("model file: layer " + std::to_string(l) + " weight disagrees with table");
      }
      layers.emplace_back(std::move(d));
    }
  }
  try {
    return SequentialModel(std::move(layers));
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

Sections dataset_sections(const Dataset& d) {
  d.validate();
  Sections out;
  out.push_back(text_section("kind", "dataset"));
  const std::vector<std::int64_t> g{static_cast<std::int64_t>(d.grid.channels),
                                    static_cast<std::int64_t>(d.grid.height),
                                    static_cast<std::int64_t>(d.grid.width)};
  out.push_back(i64_section("grid", {3}, g));
  const std::vector<double> spacing{d.grid.spacing};
  out.push_back(f64_section("spacing", {1}, spacing));
  out.push_back(text_section("tags", join_lines(d.tags)));
  std::vector<std::int64_t> tags;
  for (const Sample& s : d.samples) tags.push_back(static_cast<std::int64_t>(s.tag));
  out.push_back(i64_section("sample_tags", {tags.size()}, tags));
  out.push_back(matrix_section("inputs", rows_of(d.inputs(), d.grid.size())));
  out.push_back(matrix_section("targets", rows_of(d.targets(), d.grid.size())));
  return out;
}

Dataset dataset_from_sections(const Sections& s) {
  require_kind(s, "dataset");
  const auto g = ints(s, "grid", 3, "dataset file");
  const std::vector<double> spacing = as_f64(require_section(s, "spacing", "dataset file"));
  if (spacing.size() != 1) throw FormatError("dataset file: spacing must hold one value");
  Dataset d;
  d.grid = GridShape{to_size(g[0], "channels"), to_size(g[1], "height"), to_size(g[2], "width"),
                     spacing[0]};
  d.tags = split_lines(as_text(require_section(s, "tags", "dataset file")));
  const Matrix in = as_matrix(require_section(s, "inputs", "dataset file"));
  const Matrix out = as_matrix(require_section(s, "targets", "dataset file"));
  const Section& tag_s = require_section(s, "sample_tags", "dataset file");
  const std::vector<std::int64_t> tags = as_i64(tag_s);
  if (in.rows() != out.rows() || tags.size() != static_cast<std::size_t>(in.rows()) ||
      static_cast<std::size_t>(in.cols()) != d.grid.size() ||
      static_cast<std::size_t>(out.cols()) != d.grid.size()) {
    throw FormatError("dataset file: inputs, targets and tags disagree");
  }
  for (Eigen::Index n = 0; n < in.rows(); ++n) {
    Sample smp{GridField(d.grid, in.row(n).transpose()), GridField(d.grid, out.row(n).transpose()),
               to_size(tags[static_cast<std::size_t>(n)], "sample tag")};
    d.samples.push_back(std::move(smp));
  }
  try {
    d.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("dataset file: ") + e.what());
  }
  return d;
}

Sections stats_sections(const StatsFile& stats) {
  Sections out;
  out.push_back(text_section("kind", "stats"));
  std::vector<std::string> names;
  for (const auto& [tag, _] : stats.groups) names.push_back(tag);
  out.push_back(text_section("groups", join_lines(names)));
  const std::size_t layers = stats.groups.empty() ? 0 : stats.groups.begin()->second.size();
  std::vector<std::int64_t> counts;
  std::size_t g = 0;
  for (const auto& [tag, per_layer] : stats.groups) {
    if (per_layer.size() != layers) throw ContractViolation("stats: groups cover different layers");
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string p = "stats." + std::to_string(g) + "." + std::to_string(l) + ".";
      out.push_back(matrix_section(p + "sigma_xx", per_layer[l].sigma_xx));
      out.push_back(matrix_section(p + "fisher_z", per_layer[l].fisher_z));
      counts.push_back(static_cast<std::int64_t>(per_layer[l].n_samples));
    }
    ++g;
  }
  out.push_back(i64_section("n_samples", {stats.groups.size(), layers}, counts));
  put_loss(out, stats.loss);
  return out;
}

StatsFile stats_from_sections(const Sections& s) {
  require_kind(s, "stats");
  StatsFile out;
  const std::vector<std::string> names = split_lines(as_text(require_section(s, "groups", "stats file")));
  const Section& counts_s = require_section(s, "n_samples", "stats file");
  if (counts_s.dims.size() != 2 || counts_s.dims[0] != names.size()) {
    throw FormatError("stats file: n_samples table does not match the group list");
  }
  const std::size_t layers = counts_s.dims[1];
  const std::vector<std::int64_t> counts = as_i64(counts_s);
  for (std::size_t g = 0; g < names.size(); ++g) {
    std::vector<LayerStats> per_layer(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string p = "stats." + std::to_string(g) + "." + std::to_string(l) + ".";
      per_layer[l].sigma_xx = as_matrix(require_section(s, p + "sigma_xx", "stats file"));
      per_layer[l].fisher_z = as_matrix(require_section(s, p + "fisher_z", "stats file"));
      per_layer[l].n_samples = to_size(counts[g * layers + l], "n_samples");
      per_layer[l].dataset_tag = names[g];
    }
    if (!out.groups.emplace(names[g], std::move(per_layer)).second) {
      throw FormatError("stats file: duplicate group '" + names[g] + "'");
    }
  }
  out.loss = get_loss(s);
  return out;
}

Sections plan_sections(const PlanFile& p) {
  Sections out;
  out.push_back(text_section("kind", "plan"));
  std::vector<std::int64_t> ranks;
  for (std::size_t k : p.plan.ranks) ranks.push_back(static_cast<std::int64_t>(k));
  out.push_back(i64_section("ranks", {ranks.size()}, ranks));
  const std::vector<std::int64_t> meta{static_cast<std::int64_t>(p.plan.budget),
                                       static_cast<std::int64_t>(p.plan.spent),
                                       static_cast<std::int64_t>(p.plan.skipped_components),
                                       p.balance ? 1 : 0, p.exact ? 1 : 0};
  out.push_back(i64_section("meta", {meta.size()}, meta));
  const std::vector<double> ratio{p.plan.ratio};
  out.push_back(f64_section("ratio", {1}, ratio));
  return out;
}

PlanFile plan_from_sections(const Sections& s) {
  require_kind(s, "plan");
  PlanFile p;
  for (std::int64_t k : as_i64(require_section(s, "ranks", "plan file"))) {
    p.plan.ranks.push_back(to_size(k, "rank"));
  }
  const auto meta = ints(s, "meta", 5, "plan file");
  p.plan.budget = static_cast<U64>(meta[0]);
  p.plan.spent = static_cast<U64>(meta[1]);
  p.plan.skipped_components = static_cast<U64>(meta[2]);
  p.balance = meta[3] != 0;
  p.exact = meta[4] != 0;
  const std::vector<double> ratio = as_f64(require_section(s, "ratio", "plan file"));
  if (ratio.size() != 1) throw FormatError("plan file: ratio must hold one value");
  p.plan.ratio = ratio[0];
  return p;
}

void save_model(const std::filesystem::path& path, const SequentialModel& model) {
  write_container(path, model_sections(model));
}
SequentialModel load_model(const std::filesystem::path& path) {
  return model_from_sections(read_container(path));
}
void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_container(path, dataset_sections(dataset));
}
Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_sections(read_container(path));
}
void save_stats(const std::filesystem::path& path, const StatsFile& stats) {
  write_container(path, stats_sections(stats));
}
StatsFile load_stats(const std::filesystem::path& path) {
  return stats_from_sections(read_container(path));
}
void save_plan(const std::filesystem::path& path, const PlanFile& plan) {
  write_container(path, plan_sections(plan));
}
PlanFile load_plan(const std::filesystem::path& path) {
  return plan_from_sections(read_container(path));
}

}  // namespace sfsvd
