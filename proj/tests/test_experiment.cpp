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

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dpcxr/cohort.hpp"
#include "dpcxr/errors.hpp"
#include "dpcxr/experiment.hpp"
#include "dpcxr/experiment_config.hpp"
#include "dpcxr/reports.hpp"

namespace dpcxr::run {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyConfig = R"(# small private run
mode = private
noise_multiplier = 1.0
epochs = 1
batch_size = 32
bootstrap_redraws = 20
cohort.num_studies = 300
cohort.image_size = 8
model.size = 8
model.stem_kernel = 3
model.stem_stride = 1
model.stem_pool = false
model.stage_widths = 4,8
model.stage_strides = 2,2
model.groups = 2
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ExperimentTest : public testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("dpcxr_exp_" + std::to_string(::getpid()) + "_" +
             testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  ExperimentConfig tiny(const std::string& out) const {
    auto c = parse_config(kTinyConfig);
    c.output_dir = root_ / out;
    return c;
  }

  fs::path root_;
};

TEST(Config, DefaultsFollowMode) {
  ExperimentConfig c;
  EXPECT_EQ(c.mode, Mode::kPrivate);
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_DOUBLE_EQ(c.clip_norm, 1.5);
  EXPECT_DOUBLE_EQ(c.delta, 6e-6);
  EXPECT_DOUBLE_EQ(c.resolved_learning_rate(), 5e-4);
  EXPECT_FALSE(c.resolved_augment());
  c.set("mode", "non-private");
  EXPECT_DOUBLE_EQ(c.resolved_learning_rate(), 5e-5);
  EXPECT_TRUE(c.resolved_augment());
  c.set("learning_rate", "1e-3");
  EXPECT_DOUBLE_EQ(c.resolved_learning_rate(), 1e-3);
}

TEST(Config, ParsesTextWithComments) {
  const auto c = parse_config(kTinyConfig);
  EXPECT_EQ(c.epochs, 1u);
  EXPECT_EQ(c.model.stage_widths, (std::vector<std::size_t>{4, 8}));
  EXPECT_EQ(c.cohort.num_studies, 300u);
  EXPECT_EQ(c.noise_multiplier, 1.0);
  c.validate();
  const auto j = c.to_json();
  EXPECT_EQ(j.at("mode"), "private");
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("no_such_key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = many\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs\n"), ConfigError);
  EXPECT_THROW(parse_config("model.colour = red\n"), ConfigError);
  try {
    parse_config("banana = 3\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("banana"), std::string::npos);
  }
}

TEST(Config, PrivateModeForbidsAugmentation) {
  auto c = parse_config("epsilon = 2\naugment = true\n");
  EXPECT_THROW(c.validate(), ConfigError);
  c.augment = false;
  c.validate();
  ExperimentConfig none;
  EXPECT_THROW(none.validate(), ConfigError);  // neither epsilon nor sigma
}

TEST(Config, OutputRootFromEnvironment) {
  ::setenv(kOutputRootEnv, "/tmp/dpcxr_root", 1);
  EXPECT_EQ(resolve_output("run1"), fs::path("/tmp/dpcxr_root/run1"));
  EXPECT_EQ(resolve_output("/abs/run"), fs::path("/abs/run"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(resolve_output("run1"), fs::path("run1"));
}

TEST_F(ExperimentTest, RepeatedRunsAreByteIdentical) {
  const auto a = run_experiment(tiny("a"));
  const auto b = run_experiment(tiny("b"));
  EXPECT_EQ(a.manifest_hash, b.manifest_hash);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a.output_dir)) {
    const auto name = entry.path().filename();
    if (name == "timing.json") continue;
    ASSERT_TRUE(fs::exists(b.output_dir / name)) << name;
    EXPECT_EQ(slurp(entry.path()), slurp(b.output_dir / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 9u);
}

TEST_F(ExperimentTest, ReportsReferenceTheManifest) {
  const auto r = run_experiment(tiny("run"));
  const std::string tag = "# manifest_hash=" + r.manifest_hash + "\n";
  for (const char* f : {"predictions.csv", "metrics.csv", "subgroups.csv",
                        "sex_metrics.csv", "sample_size_auroc.csv"})
    EXPECT_EQ(slurp(r.output_dir / f).rfind(tag, 0), 0u) << f;
  const auto report = read_json(r.output_dir / "report.json");
  EXPECT_EQ(report.at("manifest_hash"), r.manifest_hash);
  const auto manifest = read_json(r.output_dir / "manifest.json");
  EXPECT_TRUE(manifest.contains("config"));
  EXPECT_EQ(r.metrics.labels.size(), data::kNumFindings);
  // Per-label grid: eight labels plus the Average row.
  const auto metrics = slurp(r.output_dir / "metrics.csv");
  EXPECT_NE(metrics.find("\nAverage,"), std::string::npos) << metrics;
}

TEST_F(ExperimentTest, PrivateRunStaysWithinTarget) {
  auto c = tiny("eps");
  c.noise_multiplier.reset();
  c.target_epsilon = 7.89;
  const auto r = run_experiment(c);
  EXPECT_LE(r.achieved_epsilon, 7.89);
  EXPECT_GT(r.achieved_epsilon, 0.0);
  const auto manifest = read_json(r.output_dir / "manifest.json");
  EXPECT_LE(manifest.at("privacy").at("achieved_epsilon").get<double>(), 7.89);
}

TEST_F(ExperimentTest, BudgetOverrunAbortsWithStep) {
  auto c = tiny("over");
  c.noise_multiplier = 0.3;
  c.target_epsilon = 0.5;
  try {
    run_experiment(c);
    FAIL() << "expected BudgetExceeded";
  } catch (const BudgetExceeded& e) {
    EXPECT_GE(e.step(), 0);
    EXPECT_GT(e.epsilon(), 0.5);
  }
}

TEST_F(ExperimentTest, NonPrivateRunReportsInfiniteEpsilon) {
  auto c = tiny("np");
  c.mode = Mode::kNonPrivate;
  c.noise_multiplier.reset();
  const auto r = run_experiment(c);
  EXPECT_TRUE(std::isinf(r.achieved_epsilon));
}

TEST_F(ExperimentTest, SweepRowsAscendWithReferenceLast) {
  auto c = tiny("sweep");
  c.noise_multiplier.reset();
  EXPECT_THROW(sweep_epsilon(c, {8.0, 2.0}, false), ConfigError);
  EXPECT_THROW(sweep_epsilon(c, {-1.0}, false), ConfigError);
  const auto s = sweep_epsilon(c, {2.0, 8.0}, true);
  ASSERT_EQ(s.entries.size(), 3u);
  EXPECT_EQ(s.entries[0].target_epsilon, 2.0);
  EXPECT_EQ(s.entries[1].target_epsilon, 8.0);
  EXPECT_TRUE(std::isinf(s.entries[2].target_epsilon));
  std::stringstream trend(slurp(c.output_dir / "trend.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(trend, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);  // header + 3
  EXPECT_EQ(rows[1].substr(0, 5), "2.00,");
  EXPECT_EQ(rows[2].substr(0, 5), "8.00,");
  EXPECT_EQ(rows[3].substr(0, 4), "inf,");
  for (const char* f : {"summary.csv", "subgroups.csv", "sex_trend.csv",
                        "sweep_manifest.json"})
    EXPECT_TRUE(fs::exists(c.output_dir / f)) << f;
}

TEST_F(ExperimentTest, SingleTargetSweepMatchesRun) {
  auto c = tiny("one");
  c.noise_multiplier.reset();
  const auto s = sweep_epsilon(c, {4.0}, false);
  ASSERT_EQ(s.entries.size(), 1u);
  ASSERT_TRUE(s.entries[0].result.has_value());
  auto d = tiny("direct");
  d.noise_multiplier.reset();
  d.target_epsilon = 4.0;
  const auto r = run_experiment(d);
  EXPECT_EQ(s.entries[0].result->metrics.average.auroc,
            r.metrics.average.auroc);
}

TEST_F(ExperimentTest, AuditFindsPlantedOldPatientDifficulty) {
  data::CohortSpec spec;
  spec.num_studies = 20000;
  spec.image_size = 4;
  std::vector<eval::SubgroupKey> keys;
  std::vector<std::uint8_t> targets;
  for (const auto& s : data::generate_cohort(spec)) {
    const auto y = data::binarize_labels(s.grades);
    keys.push_back(data::subgroup_key(s.age, s.sex, y));
    targets.insert(targets.end(), y.begin(), y.end());
  }
  const auto preds = eval::simulate_predictions(
      keys, targets,
      [](const eval::SubgroupKey& k) { return k.age_bin >= 3 ? 0.82 : 0.9; },
      1);
  write_predictions(root_ / "predictions.csv", preds, "feedbeef");
  const auto a = audit(root_ / "predictions.csv", root_ / "audit", true, true);
  EXPECT_EQ(a.manifest_hash, "feedbeef");
  ASSERT_TRUE(a.age.has_value());
  EXPECT_LT(a.age->find("[70, 80)")->ptd, 0.0);
  EXPECT_LT(a.age->find("[80, 100)")->ptd, 0.0);
  EXPECT_GT(a.age->find("[30, 60)")->ptd, 0.0);
  // Sex is unrelated to the planted accuracy.
  EXPECT_LE(std::abs(a.sex->find(a.sex->minority)->ptd), 0.02);
  for (const char* f : {"audit_subgroups.csv", "audit_sex_metrics.csv",
                        "audit_sample_size_auroc.csv"})
    EXPECT_EQ(slurp(root_ / "audit" / f).rfind("# manifest_hash=feedbeef\n", 0),
              0u)
        << f;
}

TEST_F(ExperimentTest, AuditRejectsPredictionsWithoutSubgroups) {
  std::ofstream(root_ / "bare.csv") << "# manifest_hash=00\np_cdm,y_cdm\n0.1,0\n";
  EXPECT_THROW(audit(root_ / "bare.csv", root_ / "out", true, true),
               FormatError);
  std::ofstream(root_ / "orphan.csv") << "age_bin,sex,comorbidity\n";
  EXPECT_THROW(audit(root_ / "orphan.csv", root_ / "out", true, true),
               FormatError);
}

TEST_F(ExperimentTest, PretrainedCheckpointReachesTargetSooner) {
  auto base = parse_config(
      "mode = non-private\nlearning_rate = 5e-4\naugment = false\n"
      "batch_size = 32\nbootstrap_redraws = 10\ncohort.num_studies = 800\n"
      "cohort.image_size = 16\nmodel.size = 16\n");
  auto pre = base;
  pre.cohort.seed = 100;  // disjoint synthetic patients
  pre.epochs = 10;
  pre.output_dir = root_ / "pre";
  run_experiment(pre);

  // Test-set AUROC after each fine-tuning budget; returns the first budget
  // reaching the target.
  const double target = 0.7;
  auto epochs_to_target = [&](bool pretrained) -> std::size_t {
    for (std::size_t e = 1; e <= 6; ++e) {
      auto c = base;
      c.epochs = e;
      c.output_dir = root_ / ("ft" + std::to_string(pretrained) + "_" +
                              std::to_string(e));
      if (pretrained) c.init_checkpoint = root_ / "pre" / "checkpoint";
      if (run_experiment(c).metrics.average.auroc >= target) return e;
    }
    return 7;
  };
  const std::size_t warm = epochs_to_target(true);
  const std::size_t cold = epochs_to_target(false);
  EXPECT_LT(warm, cold);
  EXPECT_LE(warm, 6u);
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(DPCXR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(ExperimentTest, CliExitCodes) {
  std::ofstream(root_ / "tiny.cfg") << kTinyConfig;
  const std::string cfg = " -c " + (root_ / "tiny.cfg").string();
  EXPECT_EQ(run_cli("calibrate -e 2.04"), 0);
  EXPECT_EQ(run_cli("calibrate -e 0.05"), 4);
  EXPECT_EQ(run_cli("calibrate"), 2);
  EXPECT_EQ(run_cli("train" + cfg + " -s augment=true -o " +
                    (root_ / "c1").string()),
            2);
  EXPECT_EQ(run_cli("train" + cfg + " -s noise_multiplier=0.3 -s epsilon=0.5"
                    " -o " + (root_ / "c2").string()),
            3);
  EXPECT_EQ(run_cli("train" + cfg + " -o " + (root_ / "c3").string()), 0);
  EXPECT_TRUE(fs::exists(root_ / "c3" / "manifest.json"));
  EXPECT_EQ(run_cli("audit -i " + (root_ / "c3").string() + " -o " +
                    (root_ / "c3a").string() + " --by age,sex"),
            0);
  EXPECT_TRUE(fs::exists(root_ / "c3a" / "audit_subgroups.csv"));
  EXPECT_EQ(run_cli("evaluate" + cfg + " --checkpoint " +
                    (root_ / "c3" / "checkpoint").string() + " -o " +
                    (root_ / "c3e").string()),
            0);
  // Same numbers under the evaluation run's own manifest.
  const auto body = [](const std::string& s) { return s.substr(s.find('\n')); };
  EXPECT_EQ(body(slurp(root_ / "c3e" / "metrics.csv")),
            body(slurp(root_ / "c3" / "metrics.csv")));
}

}  // namespace
}  // namespace dpcxr::run
