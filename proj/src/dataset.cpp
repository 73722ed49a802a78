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

#include "sfsvd/dataset.hpp"

#include "sfsvd/errors.hpp"

#include <sstream>

namespace sfsvd {
namespace {

// SplitMix64 step; decorrelates per-sample seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void Dataset::validate() const {
  if (tags.empty()) throw ContractViolation("dataset: empty tag table");
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const Sample& s = samples[n];
    if (!(s.input.shape == grid) || !(s.target.shape == grid)) {
      std::ostringstream os;
      os << "dataset: sample " << n << " does not match the dataset grid";
      throw ContractViolation(os.str());
    }
    if (s.tag >= tags.size()) {
      std::ostringstream os;
      os << "dataset: sample " << n << " has tag index " << s.tag << " outside the tag table";
      throw ContractViolation(os.str());
    }
  }
}

std::vector<Vector> Dataset::inputs() const {
  std::vector<Vector> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.input.data);
  return out;
}

std::vector<Vector> Dataset::targets() const {
  std::vector<Vector> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.target.data);
  return out;
}

Dataset Dataset::subset(std::size_t tag) const {
  Dataset out;
  out.grid = grid;
  out.tags = tags;
  for (const Sample& s : samples) {
    if (s.tag == tag) out.samples.push_back(s);
  }
  return out;
}

TeacherOperator teacher_for_tag(const std::string& tag, const GridShape& grid) {
  if (tag == "heat") return default_heat_step(grid);
  if (tag == "advect") {
    // Quarter-cell shift per step along x, an eighth along y.
    const double period = static_cast<double>(grid.width) * grid.spacing;
    return AdvectStep{period, 0.5 * period, 0.25 * grid.spacing / period};
  }
  throw ConfigError("tags", "unknown teacher operator '" + tag + "' (expected heat or advect)");
}

Dataset generate_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.tags.empty()) throw ConfigError("tags", "at least one tag is required");
  if (!spec.tag_scales.empty() && spec.tag_scales.size() != spec.tags.size()) {
    throw ConfigError("tag_scales", "must list one scale per tag");
  }
  if (spec.kind == FieldKind::divfree && spec.grid.channels != 2) {
    throw ConfigError("grid_channels", "divergence-free fields need exactly 2 channels");
  }
  std::vector<TeacherOperator> teachers;
  for (const std::string& t : spec.tags) teachers.push_back(teacher_for_tag(t, spec.grid));

  Dataset out;
  out.grid = spec.grid;
  out.tags = spec.tags;
  out.samples.reserve(spec.num_samples);
  for (std::size_t n = 0; n < spec.num_samples; ++n) {
    const std::size_t tag = n % spec.tags.size();
    const std::uint64_t sample_seed = mix(seed ^ mix(static_cast<std::uint64_t>(n)));
    Sample s;
    s.tag = tag;
    s.input = spec.kind == FieldKind::divfree
                  ? gen_divfree(sample_seed, spec.grid, spec.num_modes, spec.decay)
                  : gen_grf(sample_seed, spec.grid, spec.num_modes, spec.decay);
    if (!spec.tag_scales.empty()) s.input.data *= spec.tag_scales[tag];
    s.target = apply_operator(s.input, teachers[tag]);
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace sfsvd
