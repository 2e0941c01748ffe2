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
// Deterministic test-time augmentation: sixteen orientation variants built
// from axis flips and an xy transpose. apply_variant transposes first and
// flips second; invert_variant undoes the flips first and the transpose
// second, so invert_variant(apply_variant(v)) == v holds exactly for every
// variant. Note that apply_variant applied twice is the identity only for
// the twelve variants whose transpose flag is off or whose in-plane flips
// match; transpose plus exactly one in-plane flip composes to a quarter
// turn, which has order four. Each variant is therefore self-describing for
// inversion through invert_variant, not through reapplication.

#ifndef VOLSEG_TTA_HPP_
#define VOLSEG_TTA_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "volseg/geometry.hpp"
#include "volseg/volume.hpp"

namespace volseg {

struct TTAVariant {
  bool flip_z = false;
  bool flip_y = false;
  bool flip_x = false;
  bool transpose_xy = false;

  friend bool operator==(const TTAVariant&, const TTAVariant&) = default;

  bool is_identity() const {
    return !flip_z && !flip_y && !flip_x && !transpose_xy;
  }

  // True when apply_variant twice reproduces the input. False only for the
  // four quarter-turn variants (transpose with exactly one in-plane flip).
  bool is_involution() const { return !transpose_xy || flip_y == flip_x; }

  bool any_flip() const { return flip_z || flip_y || flip_x; }

  std::string name() const {
    if (is_identity()) return "identity";
    std::string n;
    const auto add = [&n](const char* tag) {
      if (!n.empty()) n += "-";
      n += tag;
    };
    if (flip_z) add("fz");
    if (flip_y) add("fy");
    if (flip_x) add("fx");
    if (transpose_xy) add("t");
    return n;
  }
};

// All sixteen variants in a fixed order: flips enumerate fastest, the eight
// transpose-free variants come first. Slicing the first eight yields the
// non-transposing subset used for rectangular xy planes.
inline std::vector<TTAVariant> all_tta_variants() {
  std::vector<TTAVariant> variants;
  variants.reserve(16);
  for (int i = 0; i < 16; ++i) {
    variants.push_back(TTAVariant{(i & 1) != 0, (i & 2) != 0, (i & 4) != 0,
                                  (i & 8) != 0});
  }
  return variants;
}

// Forward orientation map: transpose xy first, then flip the selected axes.
template <typename T>
Volume<T> apply_variant(const Volume<T>& volume, const TTAVariant& variant) {
  if (variant.is_identity()) return volume;
  Volume<T> out =
      variant.transpose_xy ? transpose_xy(volume) : volume;
  if (variant.any_flip()) {
    out = flip(out, variant.flip_z, variant.flip_y, variant.flip_x);
  }
  return out;
}

// Exact inverse of apply_variant: undo the flips, then the transpose.
template <typename T>
Volume<T> invert_variant(const Volume<T>& volume, const TTAVariant& variant) {
  if (variant.is_identity()) return volume;
  Volume<T> out = variant.any_flip()
                      ? flip(volume, variant.flip_z, variant.flip_y,
                             variant.flip_x)
                      : volume;
  if (variant.transpose_xy) out = transpose_xy(out);
  return out;
}

inline MultichannelVolume apply_variant(const MultichannelVolume& volume,
                                        const TTAVariant& variant) {
  std::vector<ProbVolume> channels;
  channels.reserve(static_cast<std::size_t>(volume.channels()));
  for (std::int64_t c = 0; c < volume.channels(); ++c) {
    channels.push_back(apply_variant(volume.extract_channel(c), variant));
  }
  return MultichannelVolume::from_channels(channels);
}

inline MultichannelVolume invert_variant(const MultichannelVolume& volume,
                                         const TTAVariant& variant) {
  std::vector<ProbVolume> channels;
  channels.reserve(static_cast<std::size_t>(volume.channels()));
  for (std::int64_t c = 0; c < volume.channels(); ++c) {
    channels.push_back(invert_variant(volume.extract_channel(c), variant));
  }
  return MultichannelVolume::from_channels(channels);
}

template <typename T>
struct TTAExpansion {
  std::vector<TTAVariant> variants;
  std::vector<Volume<T>> volumes;
  // True when the xy plane is rectangular and the eight transpose variants
  // were skipped, halving the expansion.
  bool transpose_skipped = false;
};

// Enumerates every orientation variant of the input. Square xy planes yield
// sixteen volumes; rectangular planes yield the eight transpose-free ones
// and set the skip flag, since transposing would change the window shape.
template <typename T>
TTAExpansion<T> tta_expand(const Volume<T>& volume) {
  TTAExpansion<T> out;
  const bool square = volume.shape().y == volume.shape().x;
  out.transpose_skipped = !square;
  for (const TTAVariant& variant : all_tta_variants()) {
    if (variant.transpose_xy && !square) continue;
    out.variants.push_back(variant);
    out.volumes.push_back(apply_variant(volume, variant));
  }
  return out;
}

// Reverts each prediction to the original orientation and averages them
// voxel-wise in double precision. With a count that is a power of two and
// identical inputs the mean is exact, so an identity predictor collapses
// back to its input bit for bit.
inline MultichannelVolume tta_collapse(
    const std::vector<TTAVariant>& variants,
    const std::vector<MultichannelVolume>& predictions) {
  if (variants.empty() || variants.size() != predictions.size()) {
    throw std::invalid_argument(
        "tta_collapse requires one variant per prediction, got " +
        std::to_string(variants.size()) + " variants and " +
        std::to_string(predictions.size()) + " predictions");
  }
  MultichannelVolume first = invert_variant(predictions[0], variants[0]);
  std::vector<double> acc(first.data().begin(), first.data().end());
  for (std::size_t i = 1; i < predictions.size(); ++i) {
    const MultichannelVolume inv = invert_variant(predictions[i], variants[i]);
    if (inv.channels() != first.channels() || inv.shape() != first.shape()) {
      throw std::invalid_argument(
          "prediction " + std::to_string(i) + " inverts to shape " +
          inv.shape().str() + " with " + std::to_string(inv.channels()) +
          " channels, expected " + first.shape().str() + " with " +
          std::to_string(first.channels()));
    }
    auto data = inv.data();
    for (std::size_t j = 0; j < data.size(); ++j) acc[j] += data[j];
  }
  const double inv_count = 1.0 / static_cast<double>(predictions.size());
  MultichannelVolume out(first.channels(), first.shape(), first.resolution());
  auto dst = out.data();
  for (std::size_t j = 0; j < acc.size(); ++j) {
    dst[j] = static_cast<float>(acc[j] * inv_count);
  }
  return out;
}

// Single-channel convenience overload.
inline ProbVolume tta_collapse(const std::vector<TTAVariant>& variants,
                               const std::vector<ProbVolume>& predictions) {
  std::vector<MultichannelVolume> wrapped;
  wrapped.reserve(predictions.size());
  for (const ProbVolume& p : predictions) {
    wrapped.push_back(MultichannelVolume::from_channels({p}));
  }
  return tta_collapse(variants, wrapped).extract_channel(0);
}

}  // namespace volseg

#endif  // VOLSEG_TTA_HPP_
