// Copyright 2026 The dpcxr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dpcxr command-line front end.
//
// Exit codes: 0 success, 2 configuration/input error, 3 privacy budget
// exceeded, 4 numeric failure, 1 anything else.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpcxr/accountant.hpp"
#include "dpcxr/cohort.hpp"
#include "dpcxr/dataset.hpp"
#include "dpcxr/errors.hpp"
#include "dpcxr/experiment.hpp"
#include "dpcxr/reports.hpp"

namespace {

using namespace dpcxr;

constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "key = value config file");
  cmd->add_option("-s,--set", o.overrides,
                  "override a config key, e.g. --set epochs=5")
      ->take_all();
  cmd->add_option("-o,--output", o.output,
                  "output directory (relative paths resolve under "
                  "$DPCXR_OUTPUT_ROOT)");
}

run::ExperimentConfig resolve(const CommonOptions& o) {
  run::ExperimentConfig cfg =
      o.config_path.empty() ? run::ExperimentConfig{}
                            : run::load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.output.empty()) cfg.output_dir = o.output;
  return cfg;
}

void print_run(const run::RunResult& r) {
  std::printf("output_dir=%s\n", r.output_dir.string().c_str());
  std::printf("manifest_hash=%s\n", r.manifest_hash.c_str());
  std::printf("achieved_epsilon=%s\n",
              run::epsilon_label(r.achieved_epsilon).c_str());
  if (!std::isinf(r.achieved_epsilon))
    std::printf("noise_multiplier=%.6f\n", r.noise_multiplier);
  std::printf("mean_auroc=%.4f\n", r.metrics.average.auroc);
  std::printf("wall_seconds=%.1f\n", r.wall_seconds);
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const UndefinedMetric& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private multi-label training and fairness "
               "auditing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(run::code_version()));

  // calibrate
  double cal_eps = 0.0, cal_q = 8e-4, cal_delta = 6e-6, cal_tol = 1e-3;
  std::int64_t cal_steps = 0, cal_epochs = 150;
  bool cal_json = false;
  auto* calibrate = app.add_subcommand(
      "calibrate", "find the noise multiplier for a target epsilon");
  calibrate->add_option("-e,--epsilon", cal_eps, "target epsilon")->required();
  calibrate->add_option("-q,--sampling-rate", cal_q, "Poisson sampling rate")
      ->capture_default_str();
  calibrate->add_option("--steps", cal_steps,
                        "number of steps (overrides --epochs)");
  calibrate->add_option("--epochs", cal_epochs,
                        "epochs; steps = epochs * ceil(1 / q)")
      ->capture_default_str();
  calibrate->add_option("-d,--delta", cal_delta)->capture_default_str();
  calibrate->add_option("--tolerance", cal_tol, "relative tolerance")
      ->capture_default_str();
  calibrate->add_flag("--json", cal_json, "print JSON instead of key=value");

  // generate-cohort
  CommonOptions gen_opts;
  auto* generate =
      app.add_subcommand("generate-cohort", "write a synthetic cohort to disk");
  add_common(generate, gen_opts);

  CommonOptions train_opts;
  auto* train = app.add_subcommand("train", "train and evaluate one run");
  add_common(train, train_opts);

  CommonOptions eval_opts;
  std::string checkpoint;
  auto* evaluate =
      app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--checkpoint", checkpoint,
                       "checkpoint stem (without .bin/.json)")
      ->required();

  std::string audit_input, audit_output = "audit";
  std::vector<std::string> groupings = {"age", "sex"};
  auto* audit_cmd =
      app.add_subcommand("audit", "subgroup fairness audit of predictions");
  audit_cmd->add_option("-i,--input", audit_input,
                        "predictions.csv or a run directory")
      ->required();
  audit_cmd->add_option("-o,--output", audit_output)->capture_default_str();
  audit_cmd->add_option("--by", groupings, "groupings: age, sex")
      ->delimiter(',')
      ->check(CLI::IsMember({"age", "sex"}));

  CommonOptions sweep_opts;
  std::vector<double> sweep_eps = {0.29, 0.54, 1.06, 2.04, 4.71, 7.89};
  bool sweep_np = false;
  auto* sweep = app.add_subcommand("sweep", "one private run per epsilon");
  add_common(sweep, sweep_opts);
  sweep->add_option("--epsilons", sweep_eps, "ascending targets")
      ->delimiter(',');
  sweep->add_flag("--non-private", sweep_np,
                  "also run the non-private reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*calibrate) {
    return guarded([&] {
      if (!(cal_q > 0.0 && cal_q <= 1.0))
        throw ConfigError("sampling rate must lie in (0, 1]");
      const std::int64_t steps =
          cal_steps > 0 ? cal_steps
                        : cal_epochs * static_cast<std::int64_t>(
                                           std::ceil(1.0 / cal_q - 1e-9));
      const auto c =
          accounting::calibrate_sigma(cal_eps, cal_q, steps, cal_delta, cal_tol);
      if (cal_json) {
        std::cout << nlohmann::json{{"sigma", c.noise_multiplier},
                                    {"epsilon", c.epsilon},
                                    {"order", c.order},
                                    {"steps", steps},
                                    {"sampling_rate", cal_q},
                                    {"delta", cal_delta}}
                         .dump(2)
                  << "\n";
      } else {
        std::printf("sigma=%.10g\nepsilon=%.10g\norder=%g\nsteps=%lld\n",
                    c.noise_multiplier, c.epsilon, c.order,
                    static_cast<long long>(steps));
      }
    });
  }
  if (*generate) {
    return guarded([&] {
      auto cfg = resolve(gen_opts);
      cfg.cohort.validate();
      const auto dir = run::resolve_output(cfg.output_dir);
      const auto studies = data::generate_cohort(cfg.cohort);
      data::write_dataset(dir, studies);
      run::write_json(dir / "cohort.json", cfg.cohort.to_json());
      std::printf("output_dir=%s\nstudies=%zu\n", dir.string().c_str(),
                  studies.size());
    });
  }
  if (*train) {
    return guarded([&] { print_run(run::run_experiment(resolve(train_opts))); });
  }
  if (*evaluate) {
    return guarded([&] {
      print_run(run::evaluate_checkpoint(resolve(eval_opts), checkpoint));
    });
  }
  if (*audit_cmd) {
    return guarded([&] {
      const bool by_age =
          std::find(groupings.begin(), groupings.end(), "age") != groupings.end();
      const bool by_sex =
          std::find(groupings.begin(), groupings.end(), "sex") != groupings.end();
      const auto r = run::audit(audit_input, audit_output, by_age, by_sex);
      std::printf("manifest_hash=%s\n", r.manifest_hash.c_str());
      for (const auto* rep : {r.age ? &*r.age : nullptr, r.sex ? &*r.sex : nullptr}) {
        if (!rep) continue;
        for (const auto& g : rep->groups)
          std::printf("%s[%s] mean=%s std=%s ptd=%+.4f n=%zu\n",
                      std::string(eval::to_string(rep->grouping)).c_str(),
                      g.name.c_str(), run::format_number(g.mean_auroc, 4).c_str(),
                      run::format_number(g.std_auroc, 4).c_str(), g.ptd,
                      g.samples);
        for (const auto& m : rep->missing)
          std::printf("%s[%s] missing\n",
                      std::string(eval::to_string(rep->grouping)).c_str(),
                      m.c_str());
      }
    });
  }
  if (*sweep) {
    return guarded([&] {
      const auto r =
          run::sweep_epsilon(resolve(sweep_opts), sweep_eps, sweep_np);
      std::printf("sweep_manifest_hash=%s\n", r.manifest_hash.c_str());
      int failures = 0;
      for (const auto& e : r.entries) {
        if (e.result)
          std::printf("epsilon=%s achieved=%s mean_auroc=%.4f\n",
                      run::epsilon_label(e.target_epsilon).c_str(),
                      run::epsilon_label(e.result->achieved_epsilon).c_str(),
                      e.result->metrics.average.auroc);
        else {
          ++failures;
          std::printf("epsilon=%s failed: %s\n",
                      run::epsilon_label(e.target_epsilon).c_str(),
                      e.error.c_str());
        }
      }
      if (failures == static_cast<int>(r.entries.size()))
        throw NumericError("every sweep run failed");
    });
  }
  return 0;
}
