// Copyright 2026 The VolSeg Authors. All Rights Reserved.
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
//
// Training-window sampling. Every draw is a pure function of a (seed,
// draw_index) pair, so workers shard draw indices instead of sharing RNG
// state and results never depend on scheduling.

#ifndef VOLSEG_SAMPLING_HPP_
#define VOLSEG_SAMPLING_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "volseg/rng.hpp"
#include "volseg/volume.hpp"

namespace volseg {

namespace detail {

inline void check_window_fits(const Vec3& shape, const Vec3& extent) {
  for (int a = 0; a < 3; ++a) {
    if (extent[a] < 1 || extent[a] > shape[a]) {
      throw std::invalid_argument(
          std::string("sample window extent along axis ") + axis_name(a) +
          " (" + std::to_string(extent[a]) + ") must be in [1, " +
          std::to_string(shape[a]) + "]");
    }
  }
}

inline BoundingBox draw_box(CounterRng& rng, const Vec3& shape,
                            const Vec3& extent) {
  BoundingBox box{{0, 0, 0}, extent};
  for (int a = 0; a < 3; ++a) {
    box.origin[a] = static_cast<std::int64_t>(
        rng.next_index(static_cast<std::uint64_t>(shape[a] - extent[a] + 1)));
  }
  return box;
}

}  // namespace detail

// Uniform window origin per axis over [0, shape - extent]. The same
// (seed, draw_index) always yields the same box.
inline BoundingBox random_position(std::uint64_t seed, std::uint64_t draw_index,
                                   const Vec3& volume_shape,
                                   const Vec3& window_extent) {
  detail::check_window_fits(volume_shape, window_extent);
  CounterRng rng(seed, draw_index);
  return detail::draw_box(rng, volume_shape, window_extent);
}

// One accepted training window together with how it was produced.
struct SampleDraw {
  BoundingBox position;
  int attempts = 1;
  std::uint64_t seed = 0;
  std::uint64_t draw_index = 0;
};

namespace detail {

template <typename T>
bool window_has_foreground(const Volume<T>& labels, const BoundingBox& box,
                           std::int64_t min_count) {
  std::int64_t found = 0;
  for (std::int64_t z = box.origin.z; z < box.end().z; ++z) {
    for (std::int64_t y = box.origin.y; y < box.end().y; ++y) {
      for (std::int64_t x = box.origin.x; x < box.end().x; ++x) {
        if (labels.at(z, y, x) != T{0} && ++found >= min_count) return true;
      }
    }
  }
  return min_count <= 0;
}

}  // namespace detail

// Draws windows until one containing foreground is found; windows without
// foreground are rejected with probability reject_prob and redrawn. After
// max_attempts the last draw is accepted regardless, so empty volumes still
// terminate; the attempt count makes the fall-through observable.
inline SampleDraw rejection_sample(std::uint64_t seed, std::uint64_t draw_index,
                                   const LabelVolume& labels,
                                   const Vec3& window_extent,
                                   double reject_prob, int max_attempts = 100,
                                   std::int64_t min_foreground = 1) {
  if (!(reject_prob >= 0.0 && reject_prob < 1.0)) {
    throw std::invalid_argument("reject_prob must be in [0, 1)");
  }
  if (max_attempts < 1) {
    throw std::invalid_argument("max_attempts must be >= 1");
  }
  detail::check_window_fits(labels.shape(), window_extent);
  CounterRng rng(seed, draw_index);
  SampleDraw draw{{}, 0, seed, draw_index};
  while (true) {
    draw.position = detail::draw_box(rng, labels.shape(), window_extent);
    ++draw.attempts;
    if (detail::window_has_foreground(labels, draw.position, min_foreground)) {
      return draw;
    }
    if (draw.attempts >= max_attempts) return draw;
    if (!rng.bernoulli(reject_prob)) return draw;
  }
}

// Consecutive z-axis ranges covering the volume, one per fraction.
struct DatasetSplit {
  std::vector<double> fractions;
  std::vector<BoundingBox> boxes;
};

inline DatasetSplit split_dataset(const Vec3& volume_shape,
                                  const std::vector<double>& fractions) {
  if (fractions.empty()) {
    throw std::invalid_argument("split fractions must be nonempty");
  }
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) {
      throw std::invalid_argument("split fractions must be positive");
    }
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1, got " +
                                std::to_string(sum));
  }
  DatasetSplit split{fractions, {}};
  double cumulative = 0.0;
  std::int64_t previous = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    cumulative += fractions[i];
    const std::int64_t boundary =
        i + 1 == fractions.size()
            ? volume_shape.z
            : std::llround(cumulative * static_cast<double>(volume_shape.z));
    split.boxes.push_back(BoundingBox{
        {previous, 0, 0},
        {boundary - previous, volume_shape.y, volume_shape.x}});
    previous = boundary;
  }
  return split;
}

// One image/label pair available for sampling, tagged by label provenance
// so fine-tuning runs can distinguish curated annotations from predictions
// promoted to labels.
struct SampleSource {
  enum class Provenance { kGroundTruth, kPseudo };

  AnyVolume image;
  LabelVolume label;
  Provenance provenance = Provenance::kGroundTruth;
};

// Flattens labeled and pseudo-labeled sources into one list. Order is
// preserved (labeled first), and pick_source below weights entries by voxel
// count so a merged pool behaves like one concatenated volume under uniform
// spatial sampling.
inline std::vector<SampleSource> merge_pseudo_labeled(
    std::vector<SampleSource> labeled, std::vector<SampleSource> pseudo) {
  std::vector<SampleSource> merged = std::move(labeled);
  for (auto& source : merged) {
    source.provenance = SampleSource::Provenance::kGroundTruth;
  }
  for (auto& source : pseudo) {
    source.provenance = SampleSource::Provenance::kPseudo;
    merged.push_back(std::move(source));
  }
  if (merged.empty()) return merged;
  const Dtype dtype = dtype_of_any(merged.front().image);
  const Vec3d resolution = resolution_of_any(merged.front().image);
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const auto& source = merged[i];
    if (dtype_of_any(source.image) != dtype) {
      throw std::invalid_argument(
          "merged sample sources must share image dtype; source " +
          std::to_string(i) + " is " +
          dtype_name(dtype_of_any(source.image)) + ", expected " +
          dtype_name(dtype));
    }
    if (resolution_of_any(source.image) != resolution) {
      throw std::invalid_argument(
          "merged sample sources must share resolution; source " +
          std::to_string(i) + " differs");
    }
    if (shape_of_any(source.image) != source.label.shape()) {
      throw std::invalid_argument("sample source " + std::to_string(i) +
                                  " image and label shapes differ");
    }
  }
  return merged;
}

// Picks a source index with probability proportional to its voxel count.
inline std::size_t pick_source(std::uint64_t seed, std::uint64_t draw_index,
                               const std::vector<SampleSource>& sources) {
  if (sources.empty()) {
    throw std::invalid_argument("cannot sample from an empty source list");
  }
  std::uint64_t total = 0;
  for (const auto& source : sources) {
    total += static_cast<std::uint64_t>(shape_of_any(source.image).voxels());
  }
  CounterRng rng(seed, draw_index);
  std::uint64_t r = rng.next_index(total);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto voxels =
        static_cast<std::uint64_t>(shape_of_any(sources[i].image).voxels());
    if (r < voxels) return i;
    r -= voxels;
  }
  return sources.size() - 1;
}

}  // namespace volseg

#endif  // VOLSEG_SAMPLING_HPP_
