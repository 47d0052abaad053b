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

#include "dpcxr/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>

#include "dpcxr/errors.hpp"
#include "dpcxr/rng.hpp"

namespace dpcxr::data {
namespace {

constexpr std::array<double, kNumAgeBins> kAgeMean = {21, 51, 65, 75, 84};
constexpr std::array<double, kNumAgeBins> kAgeStd = {8, 8, 3, 3, 3};

std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

std::size_t draw_poisson(double lambda, Rng& rng) {
  const double limit = std::exp(-lambda);
  std::size_t k = 0;
  double p = rng.uniform();
  while (p > limit) {
    ++k;
    p *= rng.uniform();
  }
  return k;
}

double gauss2(double du, double dv, double su, double sv) {
  return std::exp(-0.5 * (du * du / (su * su) + dv * dv / (sv * sv)));
}

struct PatientDraw {
  Sex sex;
  int age;
};

PatientDraw draw_patient(const CohortSpec& spec, Rng& rng) {
  PatientDraw p;
  p.sex = rng.bernoulli(spec.female_fraction) ? Sex::kFemale : Sex::kMale;
  const std::size_t bin = draw_categorical(spec.age_fractions, rng);
  const double lo = kAgeBinEdges[bin];
  const double hi = kAgeBinEdges[bin + 1] - 1;
  const double a = std::round(rng.normal(kAgeMean[bin], kAgeStd[bin]));
  p.age = static_cast<int>(std::clamp(a, lo, hi));
  return p;
}

// Background anatomy, nuisance blobs and the planted finding patterns, on a
// unit-square coordinate frame.
RawImage synthesize(const CohortSpec& spec, std::size_t bin,
                    const BinaryLabelVector& labels,
                    const std::array<int, kNumFindings>& grade_index,
                    Rng& rng) {
  const std::size_t S = spec.image_size;
  const double scale = spec.separability * spec.age_signal_scale[bin];
  std::array<double, kNumFindings> amp{};
  std::array<double, kNumFindings> ju{}, jv{};
  for (std::size_t f = 0; f < kNumFindings; ++f) {
    // Severity grades 2..4 -> 0.8, 1.0, 1.2.
    const double severity = labels[f] ? 0.8 + 0.2 * (grade_index[f] - 2) : 0.0;
    amp[f] = 0.35 * scale * severity * (0.85 + 0.3 * rng.uniform());
    ju[f] = rng.uniform(-0.04, 0.04);
    jv[f] = rng.uniform(-0.04, 0.04);
  }
  struct Blob {
    double u, v, s, a;
  };
  std::array<Blob, 3> nuisance;
  for (auto& b : nuisance)
    b = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.06, 0.14),
         rng.normal(0.0, 0.08)};
  const double heart_r = 0.12 * (1.0 + 0.6 * amp[0]) * rng.uniform(0.95, 1.05);
  const double noise_sd = 0.035 / spec.age_signal_scale[bin];
  const double offset = rng.uniform(5.0, 50.0);
  const double gain = rng.uniform(140.0, 200.0);
  const double two_pi = 2.0 * std::numbers::pi;

  RawImage out(S, S, std::uint16_t{0});
  for (std::size_t y = 0; y < S; ++y) {
    const double v = S > 1 ? static_cast<double>(y) / (S - 1) : 0.5;
    for (std::size_t x = 0; x < S; ++x) {
      const double u = S > 1 ? static_cast<double>(x) / (S - 1) : 0.5;
      double f = 0.55;
      const double lung_r = std::exp(-std::pow((u - 0.3) / 0.15, 4) -
                                     std::pow((v - 0.45) / 0.28, 4));
      const double lung_l = std::exp(-std::pow((u - 0.7) / 0.15, 4) -
                                     std::pow((v - 0.45) / 0.28, 4));
      f -= 0.25 * (lung_r + lung_l);
      const double dh = std::hypot(u - 0.5, v - 0.62);
      f += 0.2 / (1.0 + std::exp((dh - heart_r) / 0.015));
      for (const auto& b : nuisance) f += b.a * gauss2(u - b.u, v - b.v, b.s, b.s);

      // CNG: fine horizontal striping over both lungs.
      f += amp[1] * 0.6 * std::cos(two_pi * v * (S - 1) / 4.0) *
           (lung_r + lung_l);
      // PER: horizontal bar, lower right field.
      f += amp[2] * gauss2(u - 0.3 - ju[2], v - 0.78 - jv[2], 0.1, 0.035);
      // PEL: vertical bar, lower left field.
      f += amp[3] * gauss2(u - 0.7 - ju[3], v - 0.7 - jv[3], 0.035, 0.1);
      // PIR: ring, upper right field.
      {
        const double r = std::hypot(u - 0.28 - ju[4], v - 0.33 - jv[4]);
        f += amp[4] * std::exp(-0.5 * std::pow((r - 0.08) / 0.025, 2));
      }
      // PIL: checker texture in a window, upper left field.
      f += amp[5] * 0.8 * std::cos(two_pi * u * (S - 1) / 3.0) *
           std::cos(two_pi * v * (S - 1) / 3.0) *
           gauss2(u - 0.72 - ju[5], v - 0.33 - jv[5], 0.08, 0.08);
      // ALR: plus sign, mid right field.
      {
        const double du = u - 0.3 - ju[6];
        const double dv = v - 0.58 - jv[6];
        f += amp[6] * std::max(gauss2(du, dv, 0.1, 0.025),
                               gauss2(du, dv, 0.025, 0.1));
      }
      // ALL: dark spot, mid left field.
      f -= amp[7] * gauss2(u - 0.72 - ju[7], v - 0.58 - jv[7], 0.06, 0.06);

      f += rng.normal(0.0, noise_sd);
      const double raw = std::round(offset + gain * f);
      out.at(y, x) = static_cast<std::uint16_t>(std::clamp(raw, 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace

void CohortSpec::validate() const {
  if (num_studies == 0) throw ConfigError("cohort: num_studies must be > 0");
  if (!(female_fraction >= 0.0 && female_fraction <= 1.0))
    throw ConfigError("cohort: female_fraction must lie in [0, 1]");
  const double age_sum =
      std::accumulate(age_fractions.begin(), age_fractions.end(), 0.0);
  if (std::abs(age_sum - 1.0) > 1e-9)
    throw ConfigError("cohort: age fractions sum to " + std::to_string(age_sum) +
                      ", expected 1");
  for (double a : age_fractions)
    if (a < 0.0) throw ConfigError("cohort: negative age fraction");
  for (double p : prevalences)
    if (!(p > 0.0 && p < 1.0))
      throw ConfigError("cohort: prevalences must lie in (0, 1)");
  if (!(separability >= 0.0))
    throw ConfigError("cohort: separability must be >= 0");
  for (double s : age_signal_scale)
    if (!(s > 0.0)) throw ConfigError("cohort: age_signal_scale must be > 0");
  if (image_size < 4) throw ConfigError("cohort: image_size must be >= 4");
  if (!(mean_studies_per_patient >= 1.0))
    throw ConfigError("cohort: mean_studies_per_patient must be >= 1");
  if (split_fractions.empty())
    throw ConfigError("cohort: split_fractions must not be empty");
  const double split_sum =
      std::accumulate(split_fractions.begin(), split_fractions.end(), 0.0);
  if (std::abs(split_sum - 1.0) > 1e-9)
    throw ConfigError("cohort: split fractions sum to " +
                      std::to_string(split_sum) + ", expected 1");
}

nlohmann::json CohortSpec::to_json() const {
  return {{"num_studies", num_studies},
          {"female_fraction", female_fraction},
          {"age_fractions", age_fractions},
          {"prevalences", prevalences},
          {"separability", separability},
          {"age_signal_scale", age_signal_scale},
          {"image_size", image_size},
          {"mean_studies_per_patient", mean_studies_per_patient},
          {"split_fractions", split_fractions},
          {"seed", seed}};
}

CohortSpec CohortSpec::from_json(const nlohmann::json& j) {
  CohortSpec s;
  try {
    s.num_studies = j.value("num_studies", s.num_studies);
    s.female_fraction = j.value("female_fraction", s.female_fraction);
    s.age_fractions = j.value("age_fractions", s.age_fractions);
    s.prevalences = j.value("prevalences", s.prevalences);
    s.separability = j.value("separability", s.separability);
    s.age_signal_scale = j.value("age_signal_scale", s.age_signal_scale);
    s.image_size = j.value("image_size", s.image_size);
    s.mean_studies_per_patient =
        j.value("mean_studies_per_patient", s.mean_studies_per_patient);
    s.split_fractions = j.value("split_fractions", s.split_fractions);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cohort spec: ") + e.what());
  }
  return s;
}

std::vector<Study> generate_cohort(const CohortSpec& spec) {
  spec.validate();
  // Serial pass: studies per patient.
  struct Slot {
    std::size_t patient;
    std::size_t visit;
  };
  std::vector<Slot> slots;
  slots.reserve(spec.num_studies);
  Rng layout(spec.seed, Stream::kCohort, 0);
  for (std::size_t p = 0; slots.size() < spec.num_studies; ++p) {
    const std::size_t k =
        1 + draw_poisson(spec.mean_studies_per_patient - 1.0, layout);
    for (std::size_t v = 0; v < k && slots.size() < spec.num_studies; ++v)
      slots.push_back({p, v});
  }

  std::vector<Study> studies(spec.num_studies);
  const auto n = static_cast<std::ptrdiff_t>(studies.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Slot slot = slots[i];
    Rng patient_rng(spec.seed, Stream::kCohort, slot.patient + 1, 0);
    const PatientDraw patient = draw_patient(spec, patient_rng);
    Rng rng(spec.seed, Stream::kCohort, slot.patient + 1, slot.visit + 1);

    Study& s = studies[i];
    char id[32];
    std::snprintf(id, sizeof(id), "P%07zu", slot.patient);
    s.patient_id = id;
    s.filename = s.patient_id + "_" + std::to_string(slot.visit) + ".pgm";
    s.age = patient.age;
    s.sex = patient.sex;
    BinaryLabelVector labels{};
    std::array<int, kNumFindings> grade_index{};
    for (std::size_t f = 0; f < kNumFindings; ++f) {
      labels[f] = rng.bernoulli(spec.prevalences[f]) ? 1 : 0;
      const double u = rng.uniform();
      if (labels[f]) {
        grade_index[f] = u < 0.5 ? 2 : (u < 0.8 ? 3 : 4);
      } else {
        grade_index[f] = u < 0.85 ? 0 : 1;
      }
      s.grades[f] = std::string(grade_scale(f)[grade_index[f]]);
    }
    s.pixels = synthesize(spec, age_bin(s.age), labels, grade_index, rng);
  }
  return studies;
}

std::vector<std::vector<std::size_t>> split_patientwise(
    std::span<const Study> studies, std::span<const double> fractions,
    std::uint64_t seed) {
  if (fractions.empty()) throw ConfigError("split: no fractions given");
  const double sum = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split: fractions must sum to 1");

  std::vector<std::string> patients;
  std::map<std::string, std::vector<std::size_t>> by_patient;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    auto [it, inserted] = by_patient.try_emplace(studies[i].patient_id);
    if (inserted) patients.push_back(studies[i].patient_id);
    it->second.push_back(i);
  }
  Rng rng(seed, Stream::kSplit);
  for (std::size_t i = patients.size(); i > 1; --i)
    std::swap(patients[i - 1], patients[rng.below(i)]);

  std::vector<std::vector<std::size_t>> out(fractions.size());
  std::size_t split = 0;
  std::size_t assigned = 0;
  double boundary = fractions[0] * static_cast<double>(studies.size());
  for (const auto& pid : patients) {
    while (split + 1 < fractions.size() &&
           static_cast<double>(assigned) >= boundary - 1e-9) {
      ++split;
      boundary += fractions[split] * static_cast<double>(studies.size());
    }
    const auto& idx = by_patient[pid];
    out[split].insert(out[split].end(), idx.begin(), idx.end());
    assigned += idx.size();
  }
  for (auto& s : out) std::sort(s.begin(), s.end());
  return out;
}

}  // namespace dpcxr::data
