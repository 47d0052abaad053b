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

#include "dpcxr/dataset.hpp"

#include <fstream>
#include <sstream>

#include "dpcxr/errors.hpp"
#include "dpcxr/image.hpp"

namespace dpcxr::data {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void check_csv_safe(const std::string& s, const char* what) {
  if (s.find_first_of(",\"\n\r") != std::string::npos)
    throw ConfigError(std::string(what) + " '" + s +
                      "' contains a CSV delimiter");
}

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

PreparedDataset PreparedDataset::subset(
    std::span<const std::size_t> indices) const {
  PreparedDataset out;
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    out.targets.insert(out.targets.end(),
                       targets.begin() + i * kNumFindings,
                       targets.begin() + (i + 1) * kNumFindings);
    out.subgroups.push_back(subgroups[i]);
    out.patient_ids.push_back(patient_ids[i]);
    out.ages.push_back(ages[i]);
  }
  return out;
}

PreparedDataset prepare(std::span<const Study> studies, std::size_t channels,
                        std::size_t height, std::size_t width) {
  PreparedDataset out;
  const std::size_t n = studies.size();
  out.images.resize(n);
  out.targets.resize(n * kNumFindings);
  out.subgroups.resize(n);
  out.patient_ids.resize(n);
  out.ages.resize(n);
  // Binarize serially so grade errors surface deterministically.
  for (std::size_t i = 0; i < n; ++i) {
    const BinaryLabelVector labels = binarize_labels(studies[i].grades);
    std::copy(labels.begin(), labels.end(),
              out.targets.begin() + i * kNumFindings);
    out.subgroups[i] = subgroup_key(studies[i].age, studies[i].sex, labels);
    out.patient_ids[i] = studies[i].patient_id;
    out.ages[i] = studies[i].age;
  }
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < sn; ++i)
    out.images[i] =
        to_tensor(preprocess(studies[i].pixels, height, width), channels);
  return out;
}

RawImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  if (pgm_token(in) != "P5")
    throw FormatError(path.string() + ": not a binary PGM (P5)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(pgm_token(in));
    h = std::stoul(pgm_token(in));
    maxval = std::stoul(pgm_token(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
    throw FormatError(path.string() + ": invalid PGM dimensions or maxval");
  RawImage img(h, w, std::uint16_t{0});
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> buf(w * h * bpp);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw FormatError(path.string() + ": truncated PGM data");
  for (std::size_t i = 0; i < w * h; ++i)
    img.pixels[i] = bpp == 1 ? buf[i]
                             : static_cast<std::uint16_t>(buf[2 * i] << 8 |
                                                          buf[2 * i + 1]);
  return img;
}

void write_pgm(const std::filesystem::path& path, const RawImage& image) {
  std::uint16_t maxval = 0;
  for (auto v : image.pixels) maxval = std::max(maxval, v);
  const bool wide = maxval > 255;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n"
      << (wide ? 65535 : 255) << "\n";
  for (auto v : image.pixels) {
    if (wide) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
}

void write_dataset(const std::filesystem::path& dir,
                   std::span<const Study> studies) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream csv(dir / "metadata.csv", std::ios::trunc);
  if (!csv) throw FormatError("cannot write " + (dir / "metadata.csv").string());
  csv << kMetadataHeader << "\n";
  for (const Study& s : studies) {
    check_csv_safe(s.patient_id, "patient_id");
    check_csv_safe(s.filename, "filename");
    csv << s.patient_id << "," << s.filename << "," << s.age << ","
        << to_string(s.sex);
    for (const auto& g : s.grades) csv << "," << g;
    csv << "\n";
    write_pgm(dir / "images" / s.filename, s.pixels);
  }
}

std::vector<Study> read_dataset(const std::filesystem::path& dir) {
  const auto meta = dir / "metadata.csv";
  std::ifstream csv(meta);
  if (!csv) throw FormatError("cannot open " + meta.string());
  std::string line;
  if (!std::getline(csv, line)) throw FormatError(meta.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetadataHeader)
    throw FormatError(meta.string() + ": header must be exactly '" +
                      std::string(kMetadataHeader) + "'");
  std::vector<Study> out;
  std::size_t lineno = 1;
  while (std::getline(csv, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4 + kNumFindings)
      throw FormatError(meta.string() + ":" + std::to_string(lineno) +
                        ": expected 12 columns, got " +
                        std::to_string(cells.size()));
    Study s;
    s.patient_id = cells[0];
    s.filename = cells[1];
    try {
      s.age = std::stoi(cells[2]);
      s.sex = parse_sex(cells[3]);
      for (std::size_t f = 0; f < kNumFindings; ++f) s.grades[f] = cells[4 + f];
      binarize_labels(s.grades);
      age_bin(s.age);
    } catch (const std::exception& e) {
      throw FormatError(meta.string() + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
    s.pixels = read_pgm(dir / "images" / s.filename);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dpcxr::data
