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

#include "dpcxr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "dpcxr/accountant.hpp"
#include "dpcxr/checkpoint.hpp"
#include "dpcxr/dp_sgd.hpp"
#include "dpcxr/errors.hpp"
#include "dpcxr/gradients.hpp"
#include "dpcxr/hash.hpp"
#include "dpcxr/image.hpp"
#include "dpcxr/loss.hpp"
#include "dpcxr/nadam.hpp"
#include "dpcxr/reports.hpp"
#include "dpcxr/rng.hpp"

#ifndef DPCXR_VERSION
#define DPCXR_VERSION "0.0.0"
#endif

namespace dpcxr::run {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<double> label_positives(const data::PreparedDataset& d) {
  std::vector<double> out(data::kNumFindings, 0.0);
  for (std::size_t i = 0; i < d.targets.size(); ++i)
    out[i % data::kNumFindings] += d.targets[i];
  return out;
}

nlohmann::json seed_lineage(const ExperimentConfig& c) {
  return {{"master_seed", c.seed},
          {"cohort_seed", c.cohort.seed},
          {"streams",
           {{"init", "Rng(master, init)"},
            {"sampling", "Rng(master, sampling, step)"},
            {"noise", "Rng(master, noise, step)"},
            {"shuffle", "Rng(master, shuffle, epoch)"},
            {"augment", "Rng(master, augment, epoch, position)"},
            {"bootstrap", "Rng(master, bootstrap, redraw, attempt)"},
            {"cohort", "Rng(cohort_seed, cohort, patient, visit)"},
            {"split", "Rng(cohort_seed, split)"}}}};
}

void run_private(const ExperimentConfig& c, const data::PreparedDataset& train,
                 TrainingOutcome& out, nn::NAdamState& opt) {
  const std::size_t n = train.size();
  out.sampling_rate = c.sampling_rate.value_or(
      std::min(1.0, static_cast<double>(c.batch_size) /
                        static_cast<double>(n)));
  out.steps_per_epoch =
      static_cast<std::size_t>(std::ceil(1.0 / out.sampling_rate - 1e-9));
  out.steps = static_cast<std::int64_t>(c.epochs * out.steps_per_epoch);
  out.expected_batch_size = out.sampling_rate * static_cast<double>(n);
  if (c.noise_multiplier) {
    out.noise_multiplier = *c.noise_multiplier;
  } else {
    out.noise_multiplier =
        accounting::calibrate_sigma(*c.target_epsilon, out.sampling_rate,
                                    out.steps, c.delta)
            .noise_multiplier;
  }
  accounting::DpSgdConfig dp{out.sampling_rate, out.noise_multiplier,
                             c.clip_norm, out.steps, c.delta};
  dp.validate();
  accounting::PrivacyAccountant accountant(out.sampling_rate,
                                           out.noise_multiplier, c.delta);
  const auto view = train.view();
  for (std::int64_t t = 1; t <= out.steps; ++t) {
    Rng sampler(c.seed, Stream::kSampling, static_cast<std::uint64_t>(t));
    Rng noise(c.seed, Stream::kNoise, static_cast<std::uint64_t>(t));
    const auto batch = dp::poisson_sample(n, out.sampling_rate, sampler);
    dp::private_training_step(out.model, opt, view, batch, out.pos_weights, dp,
                              out.expected_batch_size, noise, accountant);
    if (c.target_epsilon) {
      const double spent = accountant.spent().budget.epsilon;
      if (spent > *c.target_epsilon)
        throw BudgetExceeded(t, spent, *c.target_epsilon);
    }
  }
  const auto spent = accountant.spent();
  out.achieved_epsilon = spent.budget.epsilon;
  out.epsilon_order = spent.order;
}

void run_non_private(const ExperimentConfig& c,
                     const data::PreparedDataset& train, TrainingOutcome& out,
                     nn::NAdamState& opt) {
  const std::size_t n = train.size();
  const bool augment = c.resolved_augment();
  out.steps_per_epoch = (n + c.batch_size - 1) / c.batch_size;
  out.achieved_epsilon = kInf;
  std::vector<Tensor> images;
  std::vector<std::uint8_t> targets;
  for (std::size_t e = 0; e < c.epochs; ++e) {
    auto order = iota_indices(n);
    Rng shuffler(c.seed, Stream::kShuffle, e);
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffler.below(i)]);
    for (std::size_t start = 0; start < n; start += c.batch_size) {
      const std::size_t end = std::min(n, start + c.batch_size);
      const std::size_t b = end - start;
      images.assign(b, Tensor());
      targets.resize(b * data::kNumFindings);
      const auto sb = static_cast<std::ptrdiff_t>(b);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t k = 0; k < sb; ++k) {
        const std::size_t src = order[start + k];
        if (augment) {
          Rng rng(c.seed, Stream::kAugment, e, start + k);
          images[k] = data::to_tensor(
              data::augment(data::from_tensor_channel0(train.images[src]), rng,
                            true),
              c.model.in_channels);
        } else {
          images[k] = train.images[src];
        }
      }
      for (std::size_t k = 0; k < b; ++k)
        std::copy_n(train.targets.begin() + order[start + k] * data::kNumFindings,
                    data::kNumFindings,
                    targets.begin() + k * data::kNumFindings);
      const nn::LabeledView view{images, targets, data::kNumFindings};
      const auto batch = iota_indices(b);
      dp::non_private_training_step(out.model, opt, view, batch,
                                    out.pos_weights);
      ++out.steps;
    }
  }
}

nn::Model initial_model(const ExperimentConfig& c) {
  if (c.init_checkpoint) return nn::load_checkpoint(*c.init_checkpoint, c.model);
  nn::Model m(c.model);
  m.init(c.seed);
  return m;
}

struct Evaluation {
  eval::PredictionSet predictions;
  eval::MetricReport metrics;
  eval::FairnessReport age, sex;
};

Evaluation evaluate(const ExperimentConfig& c, const nn::Model& model,
                    const Splits& splits) {
  Evaluation ev;
  ev.predictions = predict(model, splits.test);
  const std::uint64_t boot_seed = derive_seed(c.seed, Stream::kBootstrap);
  if (c.threshold_split == ThresholdSplit::kTrain) {
    const auto fit = predict(model, splits.train);
    const auto rows = fit.all_rows();
    std::vector<double> thresholds;
    for (std::size_t l = 0; l < fit.num_labels; ++l)
      thresholds.push_back(
          eval::youden_threshold(fit.label_scores(l, rows),
                                 fit.label_targets(l, rows))
              .threshold);
    ev.metrics = eval::evaluate_predictions(ev.predictions, thresholds,
                                            c.bootstrap_redraws, boot_seed);
  } else {
    ev.metrics = eval::evaluate_predictions(ev.predictions,
                                            c.bootstrap_redraws, boot_seed);
  }
  const auto thresholds = ev.metrics.thresholds();
  ev.age = eval::subgroup_report(ev.predictions, eval::Grouping::kAge,
                                 thresholds);
  ev.sex = eval::subgroup_report(ev.predictions, eval::Grouping::kSex,
                                 thresholds);
  return ev;
}

std::vector<SexTrendRow> sex_rows(const std::string& eps,
                                  const eval::PredictionSet& p,
                                  std::span<const double> thresholds) {
  std::vector<SexTrendRow> rows;
  for (auto sex : {data::Sex::kFemale, data::Sex::kMale}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p.subgroups[i].sex == sex) idx.push_back(i);
    if (idx.empty()) continue;
    try {
      rows.push_back({eps, sex == data::Sex::kFemale ? "Female" : "Male",
                      eval::group_averages(p, idx, thresholds)});
    } catch (const UndefinedMetric&) {
    }
  }
  return rows;
}

std::vector<std::string> label_codes() {
  std::vector<std::string> out;
  for (auto c : data::kFindingCodes) out.emplace_back(c);
  return out;
}

// Writes every run artefact; returns the manifest hash.
std::string emit_run(const std::filesystem::path& dir, nlohmann::json manifest,
                     const Evaluation& ev, std::span<const double> sample_sizes,
                     double achieved_epsilon) {
  manifest["code_version"] = code_version();
  manifest["reports"] = {"predictions.csv", "metrics.csv",
                         "subgroups.csv",      "sex_metrics.csv",
                         "sample_size_auroc.csv", "report.json"};
  const std::string hash = hex64(fnv1a64(manifest.dump()));
  manifest["manifest_hash"] = hash;
  write_json(dir / "manifest.json", manifest);

  write_predictions(dir / "predictions.csv", ev.predictions, hash);
  write_text(dir / "metrics.csv", metric_table_csv(ev.metrics, hash));
  const std::string eps = epsilon_label(achieved_epsilon);
  const SubgroupBlock block{eps, &ev.age, &ev.sex};
  write_text(dir / "subgroups.csv", subgroups_csv({&block, 1}, hash));
  const auto thresholds = ev.metrics.thresholds();
  write_text(dir / "sex_metrics.csv",
             sex_trend_csv(sex_rows(eps, ev.predictions, thresholds), hash));
  std::vector<double> aurocs;
  for (const auto& l : ev.metrics.labels) aurocs.push_back(l.auroc.mean);
  const auto codes = label_codes();
  write_text(dir / "sample_size_auroc.csv",
             sample_size_csv(codes, sample_sizes, aurocs, hash));
  nlohmann::json report = {
      {"manifest_hash", hash},
      {"achieved_epsilon",
       std::isinf(achieved_epsilon) ? nlohmann::json("inf")
                                    : nlohmann::json(achieved_epsilon)},
      {"metrics", to_json(ev.metrics)},
      {"fairness", {{"age", to_json(ev.age)}, {"sex", to_json(ev.sex)}}}};
  write_json(dir / "report.json", report);
  return hash;
}

RunResult make_result(const std::filesystem::path& dir, nlohmann::json manifest,
                      std::string hash, Evaluation ev, double eps,
                      double sigma) {
  RunResult r;
  r.output_dir = dir;
  r.manifest = std::move(manifest);
  r.manifest_hash = std::move(hash);
  r.predictions = std::move(ev.predictions);
  r.metrics = std::move(ev.metrics);
  r.age = std::move(ev.age);
  r.sex = std::move(ev.sex);
  r.achieved_epsilon = eps;
  r.noise_multiplier = sigma;
  return r;
}

}  // namespace

std::string_view code_version() { return DPCXR_VERSION; }

Splits load_splits(const ExperimentConfig& c) {
  std::vector<data::Study> studies;
  Splits s;
  if (c.dataset) {
    studies = data::read_dataset(*c.dataset);
    s.fingerprint = hex64(fnv1a64(read_text(*c.dataset / "metadata.csv")));
  } else {
    studies = data::generate_cohort(c.cohort);
    s.fingerprint = hex64(fnv1a64(c.cohort.to_json().dump()));
  }
  const auto parts =
      data::split_patientwise(studies, c.cohort.split_fractions, c.cohort.seed);
  if (parts.size() < 2 || parts[0].empty() || parts[1].empty())
    throw ConfigError("patient-wise split left the train or test set empty");
  const auto all = data::prepare(studies, c.model.in_channels, c.model.height,
                                 c.model.width);
  s.train = all.subset(parts[0]);
  s.test = all.subset(parts[1]);
  return s;
}

TrainingOutcome train_model(const ExperimentConfig& c,
                            const data::PreparedDataset& train) {
  c.validate();
  if (train.size() == 0) throw ConfigError("empty training set");
  TrainingOutcome out(initial_model(c));
  out.pos_weights =
      nn::inverse_frequency_weights(train.targets, data::kNumFindings);
  out.learning_rate = c.resolved_learning_rate();
  nn::NAdamState opt(out.model.param_count(), out.learning_rate);
  if (c.mode == Mode::kPrivate)
    run_private(c, train, out, opt);
  else
    run_non_private(c, train, out, opt);
  return out;
}

eval::PredictionSet predict(const nn::Model& model,
                            const data::PreparedDataset& d) {
  const Tensor probs = nn::predict_probabilities(model, d.images);
  eval::PredictionSet p;
  p.num_labels = data::kNumFindings;
  p.scores.assign(probs.data(), probs.data() + probs.size());
  p.targets = d.targets;
  p.subgroups = d.subgroups;
  return p;
}

RunResult run_experiment(const ExperimentConfig& c) {
  const auto start = Clock::now();
  c.validate();
  const auto dir = resolve_output(c.output_dir);
  std::filesystem::create_directories(dir);
  const Splits splits = load_splits(c);
  TrainingOutcome trained = train_model(c, splits.train);

  const auto ckpt = nn::save_checkpoint(trained.model, dir / "checkpoint",
                                        seed_lineage(c));
  const auto train_pos = label_positives(splits.train);
  nlohmann::json manifest = {
      {"format", "dpcxr-run-v1"},
      {"kind", "train"},
      {"config", c.to_json()},
      {"seed_lineage", seed_lineage(c)},
      {"data",
       {{"fingerprint", splits.fingerprint},
        {"train_samples", splits.train.size()},
        {"test_samples", splits.test.size()},
        {"train_positives", train_pos}}},
      {"training",
       {{"steps", trained.steps},
        {"steps_per_epoch", trained.steps_per_epoch},
        {"learning_rate", trained.learning_rate},
        {"param_count", trained.model.param_count()}}},
      {"checkpoint",
       {{"weights", ckpt.weights.filename().string()},
        {"manifest", ckpt.manifest.filename().string()}}}};
  if (c.mode == Mode::kPrivate) {
    manifest["privacy"] = {{"target_epsilon", c.target_epsilon
                                                  ? nlohmann::json(*c.target_epsilon)
                                                  : nlohmann::json()},
                           {"achieved_epsilon", trained.achieved_epsilon},
                           {"epsilon_order", trained.epsilon_order},
                           {"delta", c.delta},
                           {"noise_multiplier", trained.noise_multiplier},
                           {"sampling_rate", trained.sampling_rate},
                           {"expected_batch_size", trained.expected_batch_size},
                           {"clip_norm", c.clip_norm},
                           {"steps", trained.steps}};
  } else {
    manifest["privacy"] = nullptr;
  }

  Evaluation ev = evaluate(c, trained.model, splits);
  const std::string hash =
      emit_run(dir, manifest, ev, train_pos, trained.achieved_epsilon);
  manifest["manifest_hash"] = hash;
  RunResult r = make_result(dir, std::move(manifest), hash, std::move(ev),
                            trained.achieved_epsilon,
                            trained.noise_multiplier);
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  write_json(dir / "timing.json", {{"manifest_hash", hash},
                                   {"wall_seconds", r.wall_seconds}});
  return r;
}

RunResult evaluate_checkpoint(const ExperimentConfig& c,
                              const std::filesystem::path& stem) {
  const auto start = Clock::now();
  const nlohmann::json ckpt_manifest = nn::read_checkpoint_manifest(stem);
  ExperimentConfig cfg = c;
  cfg.model = nn::ModelConfig::from_json(ckpt_manifest.at("config"));
  const nn::Model model = nn::load_checkpoint(stem, cfg.model);
  const auto dir = resolve_output(cfg.output_dir);
  std::filesystem::create_directories(dir);
  const Splits splits = load_splits(cfg);
  const auto train_pos = label_positives(splits.train);
  nlohmann::json manifest = {
      {"format", "dpcxr-run-v1"},
      {"kind", "evaluate"},
      {"config", cfg.to_json()},
      {"seed_lineage", seed_lineage(cfg)},
      {"data",
       {{"fingerprint", splits.fingerprint},
        {"train_samples", splits.train.size()},
        {"test_samples", splits.test.size()},
        {"train_positives", train_pos}}},
      {"checkpoint",
       {{"source", stem.generic_string()},
        {"weights_fnv1a64", ckpt_manifest.at("weights_fnv1a64")}}}};
  Evaluation ev = evaluate(cfg, model, splits);
  const std::string hash = emit_run(dir, manifest, ev, train_pos, kInf);
  manifest["manifest_hash"] = hash;
  RunResult r = make_result(dir, std::move(manifest), hash, std::move(ev),
                            kInf, 0.0);
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  write_json(dir / "timing.json", {{"manifest_hash", hash},
                                   {"wall_seconds", r.wall_seconds}});
  return r;
}

SweepResult sweep_epsilon(const ExperimentConfig& base,
                          std::vector<double> targets,
                          bool include_non_private) {
  if (targets.empty() && !include_non_private)
    throw ConfigError("sweep: no epsilon targets");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] > 0.0) || !std::isfinite(targets[i]))
      throw ConfigError("sweep: epsilon targets must be positive and finite");
    if (i > 0 && !(targets[i] > targets[i - 1]))
      throw ConfigError("sweep: epsilon targets must be strictly ascending");
  }
  const auto root = resolve_output(base.output_dir);
  std::filesystem::create_directories(root);

  SweepResult sweep;
  std::vector<ExperimentConfig> runs;
  for (double t : targets) {
    ExperimentConfig c = base;
    c.mode = Mode::kPrivate;
    c.target_epsilon = t;
    c.noise_multiplier.reset();
    c.augment = false;
    c.output_dir = root / ("eps_" + epsilon_label(t));
    runs.push_back(std::move(c));
    sweep.entries.push_back({t, std::nullopt, {}});
  }
  if (include_non_private) {
    ExperimentConfig c = base;
    c.mode = Mode::kNonPrivate;
    c.target_epsilon.reset();
    c.noise_multiplier.reset();
    c.output_dir = root / "eps_inf";
    runs.push_back(std::move(c));
    sweep.entries.push_back({kInf, std::nullopt, {}});
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    try {
      sweep.entries[i].result = run_experiment(runs[i]);
    } catch (const std::exception& e) {
      sweep.entries[i].error = e.what();
    }
  }

  nlohmann::json manifest = {{"format", "dpcxr-sweep-v1"},
                             {"code_version", code_version()},
                             {"base_config", base.to_json()}};
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& e : sweep.entries) {
    nlohmann::json j = {{"target_epsilon", epsilon_label(e.target_epsilon)}};
    if (e.result) {
      j["run_dir"] = e.result->output_dir.filename().string();
      j["manifest_hash"] = e.result->manifest_hash;
    } else {
      j["error"] = e.error;
    }
    runs_json.push_back(j);
  }
  manifest["runs"] = runs_json;
  manifest["reports"] = {"trend.csv", "summary.csv", "subgroups.csv",
                         "sex_trend.csv"};
  sweep.manifest_hash = hex64(fnv1a64(manifest.dump()));
  manifest["manifest_hash"] = sweep.manifest_hash;
  write_json(root / "sweep_manifest.json", manifest);

  std::vector<TrendRow> trend;
  std::vector<SummaryColumn> summary_cols;
  std::vector<SubgroupBlock> subgroup_blocks;
  std::vector<SexTrendRow> sex;
  for (const auto& e : sweep.entries) {
    TrendRow row;
    row.target_epsilon = e.target_epsilon;
    if (!e.result) {
      row.status = "failed: " + e.error;
      row.achieved_epsilon = std::nan("");
      row.noise_multiplier = std::nan("");
      row.average = {std::nan(""), 0, std::nan(""), 0,
                     std::nan(""), 0, std::nan(""), 0};
      trend.push_back(row);
      continue;
    }
    const auto& r = *e.result;
    row.achieved_epsilon = r.achieved_epsilon;
    row.noise_multiplier = r.noise_multiplier;
    row.average = r.metrics.average;
    trend.push_back(row);
    const std::string eps = epsilon_label(r.achieved_epsilon);
    summary_cols.push_back({eps, &r.metrics});
    subgroup_blocks.push_back({eps, &r.age, &r.sex});
    for (auto& s : sex_rows(eps, r.predictions, r.metrics.thresholds()))
      sex.push_back(std::move(s));
  }
  write_text(root / "trend.csv", trend_csv(trend, sweep.manifest_hash));
  write_text(root / "summary.csv", summary_csv(summary_cols, sweep.manifest_hash));
  write_text(root / "subgroups.csv", subgroups_csv(subgroup_blocks, sweep.manifest_hash));
  write_text(root / "sex_trend.csv", sex_trend_csv(sex, sweep.manifest_hash));
  return sweep;
}

AuditResult audit(const std::filesystem::path& source,
                  const std::filesystem::path& output_dir, bool by_age,
                  bool by_sex) {
  if (!by_age && !by_sex) throw ConfigError("audit: no grouping selected");
  std::filesystem::path pred_path = source;
  std::optional<nlohmann::json> manifest;
  if (std::filesystem::is_directory(source)) {
    pred_path = source / "predictions.csv";
    if (std::filesystem::exists(source / "manifest.json"))
      manifest = read_json(source / "manifest.json");
  }
  const LoadedPredictions loaded = read_predictions(pred_path);
  if (loaded.manifest_hash.empty())
    throw FormatError(pred_path.string() + ": missing manifest_hash header");
  const auto& p = loaded.predictions;

  AuditResult result;
  result.manifest_hash = loaded.manifest_hash;
  const auto& hash = loaded.manifest_hash;
  const auto metrics = eval::evaluate_predictions(p, 1, derive_seed(0, Stream::kBootstrap));
  const auto thresholds = metrics.thresholds();

  double eps = kInf;
  std::vector<double> sizes;
  if (manifest) {
    const auto& priv = manifest->at("privacy");
    if (!priv.is_null()) eps = priv.at("achieved_epsilon").get<double>();
    sizes = manifest->at("data").at("train_positives").get<std::vector<double>>();
  } else {
    for (const auto& l : metrics.labels)
      sizes.push_back(static_cast<double>(l.positives));
  }
  const std::string eps_label = epsilon_label(eps);
  const auto out = resolve_output(output_dir);
  std::filesystem::create_directories(out);

  nlohmann::json j = {{"manifest_hash", hash}, {"source", pred_path.generic_string()}};
  if (by_age) {
    result.age = eval::subgroup_report(p, eval::Grouping::kAge, thresholds);
    j["age"] = to_json(*result.age);
  }
  if (by_sex) {
    result.sex = eval::subgroup_report(p, eval::Grouping::kSex, thresholds);
    j["sex"] = to_json(*result.sex);
    write_text(out / "audit_sex_metrics.csv",
               sex_trend_csv(sex_rows(eps_label, p, thresholds), hash));
  }
  if (by_age && by_sex) {
    const SubgroupBlock block{eps_label, &*result.age, &*result.sex};
    write_text(out / "audit_subgroups.csv", subgroups_csv({&block, 1}, hash));
  }
  std::vector<double> aurocs;
  for (const auto& l : metrics.labels) aurocs.push_back(l.auroc.point);
  const auto codes = label_codes();
  write_text(out / "audit_sample_size_auroc.csv",
             sample_size_csv(codes, sizes, aurocs, hash));
  write_json(out / "audit.json", j);
  return result;
}

}  // namespace dpcxr::run
