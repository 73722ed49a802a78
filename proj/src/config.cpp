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

#include "sfsvd/config.hpp"

#include "sfsvd/errors.hpp"
#include "sfsvd/io.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sfsvd {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& want) {
  throw ConfigError(key, "invalid value '" + value + "', expected " + want);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad(key, v, "a non-negative integer");
  return out;
}

double parse_f64(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad(key, v, "a finite number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  bad(key, v, "true or false");
}

template <typename T>
T from_opt(const std::string& key, const std::string& v, std::optional<T> got, const char* want) {
  if (!got) bad(key, v, want);
  return *got;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeySpec {
  Setter set;
  Getter get;
};

const std::map<std::string, KeySpec>& schema() {
  static const std::map<std::string, KeySpec> table = [] {
    std::map<std::string, KeySpec> t;
    auto size_key = [&t](const char* name, std::size_t RunConfig::*field) {
      t[name] = {[field](RunConfig& c, const std::string& k, const std::string& v) {
                   c.*field = static_cast<std::size_t>(parse_u64(k, v));
                 },
                 [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto real_key = [&t](const char* name, double RunConfig::*field) {
      t[name] = {[field](RunConfig& c, const std::string& k, const std::string& v) {
                   c.*field = parse_f64(k, v);
                 },
                 [field](const RunConfig& c) { return format_double(c.*field); }};
    };
    size_key("grid_channels", &RunConfig::grid_channels);
    size_key("grid_height", &RunConfig::grid_height);
    size_key("grid_width", &RunConfig::grid_width);
    size_key("num_modes", &RunConfig::num_modes);
    size_key("calib_samples", &RunConfig::calib_samples);
    size_key("test_samples", &RunConfig::test_samples);
    size_key("train_steps", &RunConfig::train_steps);
    real_key("decay", &RunConfig::decay);
    real_key("spectrum_decay", &RunConfig::spectrum_decay);
    real_key("gain", &RunConfig::gain);
    real_key("bias_scale", &RunConfig::bias_scale);
    real_key("learning_rate", &RunConfig::learning_rate);
    real_key("label_noise", &RunConfig::label_noise);
    real_key("alpha", &RunConfig::alpha);
    real_key("ratio", &RunConfig::ratio);

    t["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }};
    t["field_kind"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "scalar") c.field_kind = FieldKind::scalar;
          else if (v == "divfree") c.field_kind = FieldKind::divfree;
          else bad(k, v, "scalar or divfree");
        },
        [](const RunConfig& c) { return std::string(c.field_kind == FieldKind::scalar ? "scalar" : "divfree"); }};
    t["tags"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                   c.tags = split_list(v);
                   if (c.tags.empty()) bad(k, v, "a comma-separated list of teacher names");
                 },
                 [](const RunConfig& c) { return join(c.tags); }};
    t["tag_scales"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                         c.tag_scales.clear();
                         for (const auto& item : split_list(v)) c.tag_scales.push_back(parse_f64(k, item));
                       },
                       [](const RunConfig& c) {
                         std::vector<std::string> s;
                         for (double x : c.tag_scales) s.push_back(format_double(x));
                         return join(s);
                       }};
    t["hidden"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                     c.hidden.clear();
                     for (const auto& item : split_list(v)) {
                       c.hidden.push_back(static_cast<std::size_t>(parse_u64(k, item)));
                     }
                   },
                   [](const RunConfig& c) {
                     std::vector<std::string> s;
                     for (auto w : c.hidden) s.push_back(std::to_string(w));
                     return join(s);
                   }};
    t["hidden_activation"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.hidden_activation = from_opt(k, v, parse_activation(v), "identity or tanh");
        },
        [](const RunConfig& c) { return std::string(to_string(c.hidden_activation)); }};
    t["output_activation"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.output_activation = from_opt(k, v, parse_activation(v), "identity or tanh");
        },
        [](const RunConfig& c) { return std::string(to_string(c.output_activation)); }};
    t["model_init"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "random") c.model_init = ModelInit::random;
          else if (v == "trained") c.model_init = ModelInit::trained;
          else bad(k, v, "random or trained");
        },
        [](const RunConfig& c) { return std::string(c.model_init == ModelInit::random ? "random" : "trained"); }};
    t["targets"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "model") c.targets = TargetSource::model;
          else if (v == "teacher") c.targets = TargetSource::teacher;
          else bad(k, v, "model or teacher");
        },
        [](const RunConfig& c) { return std::string(c.targets == TargetSource::model ? "model" : "teacher"); }};
    t["base_loss"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.base_loss = from_opt(k, v, parse_base_loss(v), "mse or relative_l1");
        },
        [](const RunConfig& c) { return std::string(to_string(c.base_loss)); }};
    t["pde_family"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.pde_family = from_opt(k, v, parse_pde_family(v), "a known PDE family");
        },
        [](const RunConfig& c) { return std::string(to_string(c.pde_family)); }};
    t["sobolev_order"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.sobolev_order = static_cast<int>(parse_u64(k, v));
        },
        [](const RunConfig& c) { return std::to_string(c.effective_sobolev_order()); }};
    t["sobolev_norm"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.sobolev_norm = from_opt(k, v, parse_sobolev_norm(v), "l1 or l2");
        },
        [](const RunConfig& c) { return std::string(to_string(c.sobolev_norm)); }};
    t["sobolev_scale"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "auto") c.sobolev_scale.reset();
          else c.sobolev_scale = parse_f64(k, v);
        },
        [](const RunConfig& c) {
          return c.sobolev_scale ? format_double(*c.sobolev_scale) : std::string("auto");
        }};
    t["derivative_weights"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          const auto items = split_list(v);
          if (items.size() != 3) bad(k, v, "three comma-separated weights");
          for (std::size_t i = 0; i < 3; ++i) c.derivative_weights[i] = parse_f64(k, items[i]);
        },
        [](const RunConfig& c) {
          return format_double(c.derivative_weights[0]) + "," + format_double(c.derivative_weights[1]) +
                 "," + format_double(c.derivative_weights[2]);
        }};
    t["fisher_mode"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "fisher") c.fisher_mode = FisherMode::fisher;
          else if (v == "identity") c.fisher_mode = FisherMode::identity;
          else bad(k, v, "fisher or identity");
        },
        [](const RunConfig& c) { return std::string(to_string(c.fisher_mode)); }};
    t["balance"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.balance = parse_bool(k, v); },
                    [](const RunConfig& c) { return std::string(c.balance ? "true" : "false"); }};
    t["allocation"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "greedy") c.allocation = Allocation::greedy;
          else if (v == "uniform") c.allocation = Allocation::uniform;
          else bad(k, v, "greedy or uniform");
        },
        [](const RunConfig& c) { return std::string(c.allocation == Allocation::greedy ? "greedy" : "uniform"); }};
    return t;
  }();
  return table;
}

}  // namespace

GridShape RunConfig::grid() const { return unit_grid(grid_channels, grid_height, grid_width); }

int RunConfig::effective_sobolev_order() const {
  if (sobolev_order) return *sobolev_order;
  return required_sobolev_order(pde_family).value_or(0);
}

void RunConfig::validate() const {
  if (grid_channels == 0) throw ConfigError("grid_channels", "must be >= 1");
  if (grid_height < 3) throw ConfigError("grid_height", "must be >= 3");
  if (grid_width < 3) throw ConfigError("grid_width", "must be >= 3");
  if (grid_height > 64) throw ConfigError("grid_height", "must be <= 64");
  if (grid_width > 64) throw ConfigError("grid_width", "must be <= 64");
  if (field_kind == FieldKind::divfree) {
    if (grid_channels != 2) throw ConfigError("grid_channels", "divfree fields need 2 channels");
    if (grid_height < 4) throw ConfigError("grid_height", "divfree fields need >= 4 rows");
    if (grid_width < 4) throw ConfigError("grid_width", "divfree fields need >= 4 columns");
  }
  if (!tag_scales.empty() && tag_scales.size() != tags.size()) {
    throw ConfigError("tag_scales", "needs one entry per tag");
  }
  for (double s : tag_scales) {
    if (!(s > 0.0)) throw ConfigError("tag_scales", "entries must be positive");
  }
  std::set<std::string> unique(tags.begin(), tags.end());
  if (unique.size() != tags.size()) throw ConfigError("tags", "names must be distinct");
  for (const auto& tag : tags) teacher_for_tag(tag, grid());
  if (num_modes == 0) throw ConfigError("num_modes", "must be >= 1");
  if (!(decay > 0.0)) throw ConfigError("decay", "must be positive");
  if (calib_samples == 0) throw ConfigError("calib_samples", "must be >= 1");
  if (test_samples == 0) throw ConfigError("test_samples", "must be >= 1");
  for (std::size_t w : hidden) {
    if (w == 0 || w > 4096) throw ConfigError("hidden", "widths must lie in [1, 4096]");
  }
  if (!(spectrum_decay >= 0.0)) throw ConfigError("spectrum_decay", "must be >= 0");
  if (!(gain > 0.0)) throw ConfigError("gain", "must be positive");
  if (!(bias_scale >= 0.0)) throw ConfigError("bias_scale", "must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  if (!(label_noise >= 0.0)) throw ConfigError("label_noise", "must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in [0, 1]");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio", "must lie in (0, 1]");
  if (sobolev_scale && !(*sobolev_scale >= 0.0)) throw ConfigError("sobolev_scale", "must be >= 0 or auto");
  LossConfig loss;
  loss.base = base_loss;
  loss.sobolev_order = effective_sobolev_order();
  loss.sobolev_norm = sobolev_norm;
  loss.derivative_weights = derivative_weights;
  loss.family = pde_family;
  loss.grid = grid();
  loss.validate();
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  if (it == schema().end()) throw ConfigError(key, "unknown key");
  it->second.set(cfg, key, value);
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(body, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError(key, origin + ":" + std::to_string(lineno) + ": repeated key");
    }
    set_config_value(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config", "file not found: " + path.string());
  return parse_config(read_text(path), path.string());
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, spec] : schema()) out += key + " = " + spec.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [key, _] : schema()) out.push_back(key);
  return out;
}

}  // namespace sfsvd
