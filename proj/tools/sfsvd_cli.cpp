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

// sfsvd: batch pipeline driver.
//
//   sfsvd gen-data   --config run.cfg --split calib --out calib.sfsv
//   sfsvd make-model --config run.cfg --out model.sfsv
//   sfsvd calibrate  --config run.cfg --model model.sfsv --data calib.sfsv --out stats.sfsv
//   sfsvd plan       --config run.cfg --model model.sfsv --stats stats.sfsv --out plan.sfsv
//   sfsvd compress   --config run.cfg --model model.sfsv --stats stats.sfsv --data calib.sfsv
//                    --plan plan.sfsv --out small.sfsv
//   sfsvd evaluate   --config run.cfg --orig model.sfsv --compressed small.sfsv --data test.sfsv
//                    --out metrics.txt
//
// Exit status: 0 success, 2 configuration or input validation error, 1 runtime failure.

#include "sfsvd/artifacts.hpp"
#include "sfsvd/config.hpp"
#include "sfsvd/errors.hpp"
#include "sfsvd/io.hpp"
#include "sfsvd/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace sfsvd;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool deterministic = true;
  std::vector<std::string> overrides;

  RunConfig load() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        return s;
      };
      set_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
  Exec exec() const { return deterministic ? Exec::serial : Exec::parallel; }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "run seed (overrides the config)");
  cmd->add_option("--out", c.out, "output path")->required();
  cmd->add_flag("--deterministic,!--no-deterministic", c.deterministic,
                "serial kernels (default) or OpenMP kernels");
  cmd->add_option("--set", c.overrides, "extra key=value config assignment (repeatable)");
}

void require_exists(const std::string& path, const std::string& flag) {
  if (!std::filesystem::exists(path)) throw ConfigError(flag, "file not found: " + path);
}

void check_model_grid(const SequentialModel& model, const GridShape& grid) {
  if (model.input_dim() != grid.size() || model.output_dim() != grid.size()) {
    throw ConfigError("grid_channels", "model dimensions do not match the dataset grid");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-aware low-rank compression of field-to-field models"};
  app.require_subcommand(1);

  Common gen_c, model_c, cal_c, plan_c, comp_c, eval_c;
  std::string split = "calib";
  std::string model_data, cal_model, cal_data, plan_model, plan_stats;
  std::string comp_model, comp_stats, comp_data, comp_plan, comp_report;
  std::string eval_orig, eval_comp, eval_data;
  bool plan_exact = false, comp_exact = false;

  auto* gen = app.add_subcommand("gen-data", "generate a seeded dataset split");
  add_common(gen, gen_c);
  gen->add_option("--split", split, "calib or test")->check(CLI::IsMember({"calib", "test"}));

  auto* mk = app.add_subcommand("make-model", "create a random or trained model");
  add_common(mk, model_c);
  mk->add_option("--data", model_data, "training dataset (model_init = trained)");

  auto* cal = app.add_subcommand("calibrate", "accumulate activation and Fisher statistics");
  add_common(cal, cal_c);
  cal->add_option("--model", cal_model)->required();
  cal->add_option("--data", cal_data)->required();

  auto* pl = app.add_subcommand("plan", "allocate per-layer ranks under the budget");
  add_common(pl, plan_c);
  pl->add_option("--model", plan_model)->required();
  pl->add_option("--stats", plan_stats)->required();
  pl->add_flag("--exact", plan_exact, "keep every layer at full rank");

  auto* cp = app.add_subcommand("compress", "compress a model with a rank plan");
  add_common(cp, comp_c);
  cp->add_option("--model", comp_model)->required();
  cp->add_option("--stats", comp_stats)->required();
  cp->add_option("--data", comp_data)->required();
  cp->add_option("--plan", comp_plan, "rank plan (not needed with --exact)");
  cp->add_option("--report", comp_report, "JSON run report (default <out>.report.json)");
  cp->add_flag("--exact", comp_exact, "keep every layer at full rank");

  auto* ev = app.add_subcommand("evaluate", "compare original and compressed models on a split");
  add_common(ev, eval_c);
  ev->add_option("--orig", eval_orig)->required();
  ev->add_option("--compressed", eval_comp)->required();
  ev->add_option("--data", eval_data)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      const RunConfig cfg = gen_c.load();
      const Split s = split == "test" ? Split::test : Split::calib;
      save_dataset(gen_c.out, make_dataset(cfg, s));
      std::cout << "wrote " << gen_c.out << "\n";
    } else if (*mk) {
      const RunConfig cfg = model_c.load();
      std::optional<Dataset> data;
      if (!model_data.empty()) {
        require_exists(model_data, "--data");
        data = load_dataset(model_data);
        if (!(data->grid == cfg.grid())) throw ConfigError("grid_width", "dataset grid differs from config");
      }
      if (cfg.model_init == ModelInit::trained && !data) {
        throw ConfigError("model_init", "trained models need --data");
      }
      const SequentialModel model = make_model(cfg, data ? &*data : nullptr, model_c.exec());
      save_model(model_c.out, model);
      std::cout << "wrote " << model_c.out << "\n";
    } else if (*cal) {
      const RunConfig cfg = cal_c.load();
      require_exists(cal_model, "--model");
      require_exists(cal_data, "--data");
      const SequentialModel model = load_model(cal_model);
      const Dataset raw = load_dataset(cal_data);
      check_model_grid(model, raw.grid);
      const Dataset data = prepare_targets(cfg, raw, model, Split::calib);
      save_stats(cal_c.out, calibrate(cfg, model, data, cal_c.exec()));
      std::cout << "wrote " << cal_c.out << "\n";
    } else if (*pl) {
      const RunConfig cfg = plan_c.load();
      require_exists(plan_model, "--model");
      require_exists(plan_stats, "--stats");
      const SequentialModel model = load_model(plan_model);
      const StatsFile stats = load_stats(plan_stats);
      const PlanFile plan = make_plan(cfg, model, stats, plan_exact);
      save_plan(plan_c.out, plan);
      std::cout << "wrote " << plan_c.out << " ranks =";
      for (std::size_t k : plan.plan.ranks) std::cout << " " << k;
      std::cout << "\n";
    } else if (*cp) {
      const RunConfig cfg = comp_c.load();
      require_exists(comp_model, "--model");
      require_exists(comp_stats, "--stats");
      require_exists(comp_data, "--data");
      const SequentialModel model = load_model(comp_model);
      const StatsFile stats = load_stats(comp_stats);
      const Dataset raw = load_dataset(comp_data);
      check_model_grid(model, raw.grid);
      PlanFile plan;
      if (comp_exact) {
        plan.exact = true;
        plan.balance = cfg.balance;
        plan.plan = full_rank_plan(model);
      } else {
        if (comp_plan.empty()) throw ConfigError("--plan", "required unless --exact is given");
        require_exists(comp_plan, "--plan");
        plan = load_plan(comp_plan);
      }
      const Dataset data = prepare_targets(cfg, raw, model, Split::calib);
      const BalancedStats ref = reference_stats(stats.groups, cfg.balance);
      CompressionConfig ccfg = compression_config(cfg, stats.loss, comp_c.exec());
      if (plan.exact) ccfg.ratio = 1.0;
      const CompressionResult result = compress_model(model, ref, data, plan.plan, ccfg);
      const std::string report_path = comp_report.empty() ? comp_c.out + ".report.json" : comp_report;
      save_model(comp_c.out, result.model);
      write_text_atomic(report_path, compression_report_json(result.report, plan, model, result.model));
      std::cout << "wrote " << comp_c.out << " and " << report_path << "\n";
    } else if (*ev) {
      const RunConfig cfg = eval_c.load();
      require_exists(eval_orig, "--orig");
      require_exists(eval_comp, "--compressed");
      require_exists(eval_data, "--data");
      const SequentialModel orig = load_model(eval_orig);
      const SequentialModel comp = load_model(eval_comp);
      const Dataset raw = load_dataset(eval_data);
      check_model_grid(orig, raw.grid);
      check_model_grid(comp, raw.grid);
      const Dataset data = prepare_targets(cfg, raw, orig, Split::test);
      const LossConfig loss = loss_config(cfg, data.grid);
      const std::string report =
          metrics_report(evaluate_metrics(orig, data, loss), evaluate_metrics(comp, data, loss));
      write_text_atomic(eval_c.out, report);
      std::cout << report;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "invalid file: " << e.what() << "\n";
    return 2;
  } catch (const CompressionError& e) {
    std::cerr << "compression failed at layer " << e.layer() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
