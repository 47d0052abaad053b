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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unistd.h>

#include <gtest/gtest.h>

#include "dpcxr/cohort.hpp"
#include "dpcxr/dataset.hpp"
#include "dpcxr/errors.hpp"
#include "dpcxr/image.hpp"
#include "dpcxr/labels.hpp"
#include "dpcxr/metrics.hpp"

namespace dpcxr::data {
namespace {

ByteImage random_byte_image(Rng& rng, std::size_t h, std::size_t w) {
  ByteImage img(h, w);
  const int kind = static_cast<int>(rng.below(4));
  const double k = std::exp(rng.uniform(-2.0, 2.0));
  const double lo = rng.uniform(0.0, 0.5), hi = rng.uniform(0.5, 1.0);
  for (auto& p : img.pixels) {
    double u = rng.uniform();
    switch (kind) {
      case 0: break;                                   // uniform
      case 1: u = std::pow(u, k); break;               // skewed
      case 2: u = lo + (hi - lo) * u; break;           // narrow band
      default: u = std::clamp(0.5 + 0.1 * rng.normal(), 0.0, 0.999);
    }
    p = static_cast<std::uint8_t>(std::floor(256.0 * u));
  }
  return img;
}

TEST(Normalize, HandExample) {
  const RawImage raw(2, 2, std::vector<std::uint16_t>{50, 100, 150, 250});
  const ByteImage out = normalize_image(raw);
  EXPECT_EQ(out.pixels, (std::vector<std::uint8_t>{0, 63, 127, 255}));
}

TEST(Normalize, ConstantAndFullRange) {
  EXPECT_EQ(normalize_image(RawImage(3, 3, 777)).pixels,
            std::vector<std::uint8_t>(9, 0));
  const RawImage full(1, 3, std::vector<std::uint16_t>{0, 128, 255});
  EXPECT_EQ(normalize_image(full).pixels,
            (std::vector<std::uint8_t>{0, 128, 255}));
}

TEST(Equalize, TwoLevelImage) {
  ByteImage img(2, 2, std::vector<std::uint8_t>{0, 255, 0, 255});
  const auto map = equalization_map(img);
  // CDF(0) = 0.5 -> 127.5 rounds half up; CDF(255) = 1.
  EXPECT_EQ(map[0], 128);
  EXPECT_EQ(map[255], 255);
  const auto out = equalize_histogram(img);
  EXPECT_EQ(std::count(out.pixels.begin(), out.pixels.end(), 128), 2);
  EXPECT_EQ(std::count(out.pixels.begin(), out.pixels.end(), 255), 2);
}

TEST(Equalize, UniformHistogramIsNearIdentity) {
  ByteImage img(16, 16);
  for (int v = 0; v < 256; ++v) img.pixels[v] = static_cast<std::uint8_t>(v);
  const auto map = equalization_map(img);
  for (int v = 0; v < 256; ++v) EXPECT_LE(std::abs(map[v] - v), 1) << v;
}

TEST(Equalize, MapIsMonotone) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto map = equalization_map(random_byte_image(rng, 8, 8));
    for (int v = 1; v < 256; ++v) ASSERT_LE(map[v - 1], map[v]);
  }
}

TEST(Equalize, NeverIncreasesKsDistance) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto img = random_byte_image(rng, 16, 16);
    const double before = ks_distance_to_uniform(img);
    const double after = ks_distance_to_uniform(equalize_histogram(img));
    ASSERT_LE(after, before + 1e-12) << "image " << t;
  }
}

TEST(Resize, IdentityAndConstant) {
  Rng rng(3);
  FloatImage img(5, 7);
  for (auto& p : img.pixels) p = rng.uniform();
  EXPECT_EQ(resize(img, 5, 7), img);
  const FloatImage c(6, 6, 42.5);
  for (auto [h, w] : {std::pair{3, 3}, {12, 9}, {1, 1}}) {
    const auto out = resize(c, h, w);
    for (double v : out.pixels) EXPECT_DOUBLE_EQ(v, 42.5);
  }
  EXPECT_THROW(resize(c, 0, 3), ConfigError);
}

TEST(Resize, CheckerboardHalvesToBlockMeans) {
  // Half-pixel centres: each output sample sits at the centre of a 2x2
  // source block, so bilinear weights are 1/4 each.
  FloatImage board(4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) board.at(y, x) = (x + y) % 2;
  for (double v : resize(board, 2, 2).pixels) EXPECT_DOUBLE_EQ(v, 0.5);
  FloatImage ramp(4, 4);
  for (std::size_t i = 0; i < 16; ++i) ramp.pixels[i] = static_cast<double>(i);
  EXPECT_EQ(resize(ramp, 2, 2).pixels,
            (std::vector<double>{2.5, 4.5, 10.5, 12.5}));
}

TEST(Preprocess, ChainOrderIsFixed) {
  Rng rng(4);
  RawImage raw(9, 9);
  for (auto& p : raw.pixels) p = static_cast<std::uint16_t>(rng.below(4096));
  const auto expected =
      resize(to_float(equalize_histogram(normalize_image(raw))), 4, 4);
  EXPECT_EQ(preprocess(raw, 4, 4), expected);
}

TEST(Binarize, ExhaustiveGradeGrid) {
  int cases = 0;
  for (std::size_t f = 0; f < kNumFindings; ++f) {
    for (std::size_t g = 0; g < 5; ++g) {
      Grades grades;
      for (std::size_t k = 0; k < kNumFindings; ++k)
        grades[k] = std::string(grade_scale(k)[0]);
      grades[f] = std::string(grade_scale(f)[g]);
      const auto out = binarize_labels(grades);
      for (std::size_t k = 0; k < kNumFindings; ++k)
        ASSERT_EQ(out[k], k == f && g >= 2 ? 1 : 0)
            << kFindingCodes[f] << " grade '" << grades[f] << "'";
      ++cases;
    }
  }
  EXPECT_EQ(cases, 40);
}

TEST(Binarize, NamedExamplesAndErrors) {
  Grades g;
  for (std::size_t k = 0; k < kNumFindings; ++k)
    g[k] = std::string(grade_scale(k)[0]);
  EXPECT_EQ(binarize_labels(g), BinaryLabelVector{});
  g[0] = "borderline";
  EXPECT_EQ(binarize_labels(g)[0], 1);
  g[1] = "uncertain";
  EXPECT_EQ(binarize_labels(g)[1], 0);
  g[2] = "enlarged";  // cardiomegaly grade on a severity scale
  try {
    binarize_labels(g);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("enlarged"), std::string::npos) << msg;
    EXPECT_NE(msg.find("PER"), std::string::npos) << msg;
  }
}

TEST(Augment, IdentityAndInvolution) {
  Rng rng(5);
  FloatImage img(8, 8);
  for (auto& p : img.pixels) p = rng.uniform(0.0, 255.0);
  EXPECT_EQ(augment(img, rng, false), img);
  EXPECT_EQ(apply_augmentation(img, {0.0, false}), img);
  const auto once = apply_augmentation(img, {0.0, true});
  EXPECT_NE(once, img);
  EXPECT_EQ(once.at(2, 0), img.at(2, 7));
  EXPECT_EQ(apply_augmentation(once, {0.0, true}), img);
}

TEST(Augment, RotationKeepsCentreAndPadsWithZero) {
  FloatImage img(9, 9, 1.0);
  const auto rot = apply_augmentation(img, {10.0, false});
  EXPECT_DOUBLE_EQ(rot.at(4, 4), 1.0);
  const auto corner = apply_augmentation(img, {45.0, false});
  EXPECT_DOUBLE_EQ(corner.at(0, 0), 0.0);
}

CohortSpec small_spec(std::size_t n, std::uint64_t seed) {
  CohortSpec s;
  s.num_studies = n;
  s.image_size = 4;
  s.seed = seed;
  return s;
}

TEST(Cohort, RealizedFractionsWithinTwoPercent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = small_spec(10000, seed);
    const auto studies = generate_cohort(spec);
    ASSERT_EQ(studies.size(), spec.num_studies);
    const double n = static_cast<double>(studies.size());
    double female = 0.0;
    std::array<double, kNumAgeBins> ages{};
    std::array<double, kNumFindings> prev{};
    for (const auto& s : studies) {
      female += s.sex == Sex::kFemale;
      ages[age_bin(s.age)] += 1.0;
      const auto y = binarize_labels(s.grades);
      for (std::size_t f = 0; f < kNumFindings; ++f) prev[f] += y[f];
    }
    EXPECT_NEAR(female / n, spec.female_fraction, 0.02) << "seed " << seed;
    for (std::size_t b = 0; b < kNumAgeBins; ++b)
      EXPECT_NEAR(ages[b] / n, spec.age_fractions[b], 0.02)
          << "seed " << seed << " bin " << b;
    for (std::size_t f = 0; f < kNumFindings; ++f)
      EXPECT_NEAR(prev[f] / n, spec.prevalences[f], 0.02)
          << "seed " << seed << " " << kFindingCodes[f];
  }
}

TEST(Cohort, DeterministicPerSeed) {
  const auto a = generate_cohort(small_spec(300, 7));
  const auto b = generate_cohort(small_spec(300, 7));
  const auto c = generate_cohort(small_spec(300, 8));
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].patient_id, b[i].patient_id);
    EXPECT_EQ(a[i].age, b[i].age);
    EXPECT_EQ(a[i].grades, b[i].grades);
    EXPECT_EQ(a[i].pixels, b[i].pixels);
    differs = differs || a[i].pixels != c[i].pixels;
  }
  EXPECT_TRUE(differs);
}

TEST(Cohort, RejectsInfeasibleSpecs) {
  auto s = small_spec(100, 0);
  s.age_fractions[0] += 0.1;
  EXPECT_THROW(generate_cohort(s), ConfigError);
  s = small_spec(100, 0);
  s.prevalences[3] = 1.0;
  EXPECT_THROW(generate_cohort(s), ConfigError);
  s = small_spec(100, 0);
  s.female_fraction = -0.1;
  EXPECT_THROW(generate_cohort(s), ConfigError);
}

// Held-out AUROC of a per-label class-mean template fitted on half the data.
std::vector<double> template_aurocs(const PreparedDataset& d) {
  const std::size_t n = d.size(), half = n / 2;
  const std::size_t p = d.images[0].size();
  std::vector<double> out;
  for (std::size_t f = 0; f < kNumFindings; ++f) {
    std::vector<double> pos(p, 0.0), neg(p, 0.0);
    double np = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      const bool y = d.targets[i * kNumFindings + f];
      auto& acc = y ? pos : neg;
      (y ? np : nn) += 1.0;
      for (std::size_t k = 0; k < p; ++k) acc[k] += d.images[i][k];
    }
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t i = half; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k)
        s += (pos[k] / np - neg[k] / nn) * d.images[i][k];
      scores.push_back(s);
      labels.push_back(d.targets[i * kNumFindings + f]);
    }
    out.push_back(eval::auroc(scores, labels));
  }
  return out;
}

TEST(Cohort, SeparabilityControlsSignal) {
  auto spec = small_spec(4000, 11);
  spec.image_size = 16;
  spec.separability = 0.0;
  const auto null_data = prepare(generate_cohort(spec), 1, 16, 16);
  for (double a : template_aurocs(null_data)) EXPECT_NEAR(a, 0.5, 0.05);
  spec.separability = 1.0;
  const auto signal = prepare(generate_cohort(spec), 1, 16, 16);
  double mean = 0.0;
  for (double a : template_aurocs(signal)) mean += a / kNumFindings;
  EXPECT_GT(mean, 0.6);
}

TEST(Split, PatientsNeverShared) {
  const auto studies = generate_cohort(small_spec(2000, 1));
  const std::vector<double> fr = {0.794, 0.206};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto parts = split_patientwise(studies, fr, seed);
    ASSERT_EQ(parts.size(), 2u);
    ASSERT_EQ(parts[0].size() + parts[1].size(), studies.size());
    std::set<std::string> train;
    for (auto i : parts[0]) train.insert(studies[i].patient_id);
    for (auto i : parts[1])
      ASSERT_FALSE(train.contains(studies[i].patient_id)) << "seed " << seed;
  }
}

TEST(Split, PrevalenceAndSizesTrackFullSet) {
  const auto studies = generate_cohort(small_spec(50000, 2));
  const CohortSpec defaults;
  const auto parts =
      split_patientwise(studies, defaults.split_fractions, 3);
  const double n = static_cast<double>(studies.size());
  EXPECT_NEAR(parts[0].size() / n, defaults.split_fractions[0], 0.005);
  std::array<double, kNumFindings> full{};
  for (const auto& s : studies) {
    const auto y = binarize_labels(s.grades);
    for (std::size_t f = 0; f < kNumFindings; ++f) full[f] += y[f] / n;
  }
  for (const auto& part : parts) {
    std::array<double, kNumFindings> prev{};
    for (auto i : part) {
      const auto y = binarize_labels(studies[i].grades);
      for (std::size_t f = 0; f < kNumFindings; ++f)
        prev[f] += y[f] / static_cast<double>(part.size());
    }
    for (std::size_t f = 0; f < kNumFindings; ++f)
      EXPECT_NEAR(prev[f], full[f], 0.02) << kFindingCodes[f];
  }
}

TEST(Split, SinglePatientIsAtomic) {
  auto studies = generate_cohort(small_spec(5, 0));
  for (auto& s : studies) s.patient_id = "P0";
  const std::vector<double> fr = {0.5, 0.5};
  const auto parts = split_patientwise(studies, fr, 9);
  EXPECT_TRUE((parts[0].size() == 5 && parts[1].empty()) ||
              (parts[1].size() == 5 && parts[0].empty()));
  const std::vector<double> bad = {0.5, 0.6};
  EXPECT_THROW(split_patientwise(studies, bad, 0), ConfigError);
}

class DatasetIo : public testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("dpcxr_data_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(DatasetIo, PgmRoundTrip) {
  const RawImage small(2, 3, std::vector<std::uint16_t>{0, 1, 2, 3, 254, 255});
  write_pgm(dir_ / "a.pgm", small);
  EXPECT_EQ(read_pgm(dir_ / "a.pgm"), small);
  const RawImage wide(1, 3, std::vector<std::uint16_t>{0, 300, 65535});
  write_pgm(dir_ / "b.pgm", wide);
  EXPECT_EQ(read_pgm(dir_ / "b.pgm"), wide);
  std::ofstream(dir_ / "c.pgm") << "P2\n1 1\n255\n0\n";
  EXPECT_THROW(read_pgm(dir_ / "c.pgm"), FormatError);
}

TEST_F(DatasetIo, MetadataRoundTripAndValidation) {
  const auto studies = generate_cohort(small_spec(40, 3));
  write_dataset(dir_ / "ds", studies);
  const auto back = read_dataset(dir_ / "ds");
  ASSERT_EQ(back.size(), studies.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].patient_id, studies[i].patient_id);
    EXPECT_EQ(back[i].age, studies[i].age);
    EXPECT_EQ(back[i].sex, studies[i].sex);
    EXPECT_EQ(back[i].grades, studies[i].grades);
    EXPECT_EQ(back[i].pixels, studies[i].pixels);
  }
  std::ofstream(dir_ / "ds" / "metadata.csv") << "patient_id,age\n";
  EXPECT_THROW(read_dataset(dir_ / "ds"), FormatError);

  write_dataset(dir_ / "ds2", studies);
  {
    std::ofstream out(dir_ / "ds2" / "metadata.csv", std::ios::app);
    out << "P9,x.pgm,40,female,normal,negative,negative,negative,negative,"
           "negative,negative,bogus\n";
  }
  try {
    read_dataset(dir_ / "ds2");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":42"), std::string::npos)
        << e.what();
  }
}

TEST(Prepare, TargetsAndSubgroupsMatchStudies) {
  const auto studies = generate_cohort(small_spec(50, 4));
  const auto d = prepare(studies, 3, 6, 6);
  ASSERT_EQ(d.size(), 50u);
  EXPECT_EQ(d.images[0].shape(), (std::vector<std::size_t>{3, 6, 6}));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto y = binarize_labels(studies[i].grades);
    for (std::size_t f = 0; f < kNumFindings; ++f)
      EXPECT_EQ(d.targets[i * kNumFindings + f], y[f]);
    EXPECT_EQ(d.subgroups[i], subgroup_key(studies[i].age, studies[i].sex, y));
    for (double v : d.images[i].values()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  const std::vector<std::size_t> pick = {3, 1};
  const auto sub = d.subset(pick);
  EXPECT_EQ(sub.patient_ids[0], d.patient_ids[3]);
  EXPECT_EQ(sub.images[1].values(), d.images[1].values());
}

}  // namespace
}  // namespace dpcxr::data
