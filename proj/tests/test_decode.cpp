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

#include "volseg/decode.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "volseg/targets.hpp"
#include "volseg/volume.hpp"

namespace volseg {
namespace {

using testutil::random_volume;
using testutil::sphere_labels;

// Independent neighbor table for the oracle below. Kept separate from the
// library's own offset helper so the two cannot share a bug.
std::vector<Vec3> oracle_offsets(int connectivity) {
  std::vector<Vec3> offsets;
  for (std::int64_t dz = -1; dz <= 1; ++dz) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const std::int64_t manhattan =
            std::abs(dz) + std::abs(dy) + std::abs(dx);
        if (manhattan == 0) continue;
        if (connectivity == 6 && manhattan != 1) continue;
        offsets.push_back({dz, dy, dx});
      }
    }
  }
  return offsets;
}

// Reference flood: repeatedly scan the whole volume for the unclaimed region
// voxel with a claimed neighbor that carries the highest priority (ties to
// the smallest raster index), then claim it with the smallest neighbor label.
// Quadratic, but transparently correct on small volumes.
LabelVolume naive_flood(const LabelVolume& seeds, const LabelVolume& region,
                        const ProbVolume& priority, int connectivity) {
  const Vec3& shape = seeds.shape();
  LabelVolume out = seeds;
  const std::vector<Vec3> offsets = oracle_offsets(connectivity);
  while (true) {
    std::int64_t best_index = -1;
    float best_value = 0.0f;
    std::uint32_t best_label = 0;
    for (std::int64_t z = 0; z < shape.z; ++z) {
      for (std::int64_t y = 0; y < shape.y; ++y) {
        for (std::int64_t x = 0; x < shape.x; ++x) {
          const std::size_t i = out.index(z, y, x);
          if (out.data()[i] != 0 || region.data()[i] == 0) continue;
          std::uint32_t min_label = 0;
          for (const Vec3& o : offsets) {
            const std::int64_t nz = z + o.z;
            const std::int64_t ny = y + o.y;
            const std::int64_t nx = x + o.x;
            if (nz < 0 || nz >= shape.z || ny < 0 || ny >= shape.y ||
                nx < 0 || nx >= shape.x) {
              continue;
            }
            const std::uint32_t lab = out.at(nz, ny, nx);
            if (lab != 0 && (min_label == 0 || lab < min_label)) {
              min_label = lab;
            }
          }
          if (min_label == 0) continue;
          // Strict inequality keeps the first (raster-smallest) voxel among
          // equal values, matching the documented tie-break.
          if (best_index < 0 || priority.data()[i] > best_value) {
            best_index = static_cast<std::int64_t>(i);
            best_value = priority.data()[i];
            best_label = min_label;
          }
        }
      }
    }
    if (best_index < 0) break;
    out.data()[static_cast<std::size_t>(best_index)] = best_label;
  }
  return out;
}

ProbVolume prob_from(std::vector<float> values, Vec3 shape,
                     Vec3d res = {1, 1, 1}) {
  ProbVolume out(shape, res);
  std::copy(values.begin(), values.end(), out.data().begin());
  return out;
}

LabelVolume labels_from(std::vector<std::uint32_t> values, Vec3 shape,
                        Vec3d res = {1, 1, 1}) {
  LabelVolume out(shape, res);
  std::copy(values.begin(), values.end(), out.data().begin());
  return out;
}

LabelVolume uniform_mask(Vec3 shape, std::uint32_t value) {
  LabelVolume out(shape, {1, 1, 1});
  std::fill(out.data().begin(), out.data().end(), value);
  return out;
}

// Two spheres whose surfaces touch at a single voxel gap, forming one
// foreground blob with a one-voxel-thick neck.
LabelVolume touching_spheres() {
  return sphere_labels({15, 15, 27}, {{{7, 7, 7}, 6.0}, {{7, 7, 19}, 6.0}},
                       {1, 1, 1});
}

LabelVolume separated_spheres() {
  return sphere_labels({15, 15, 28}, {{{7, 7, 7}, 5.0}, {{7, 7, 20}, 5.0}},
                       {1, 1, 1});
}

ProbVolume zeros_like(const LabelVolume& labels) {
  return ProbVolume(labels.shape(), labels.resolution());
}

double instance_iou(const LabelVolume& a, std::uint32_t id_a,
                    const LabelVolume& b, std::uint32_t id_b) {
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  for (std::size_t i = 0; i < a.voxels(); ++i) {
    const bool in_a = a.data()[i] == id_a;
    const bool in_b = b.data()[i] == id_b;
    if (in_a && in_b) ++inter;
    if (in_a || in_b) ++uni;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Decoded id with the largest overlap against ground-truth instance gt_id.
std::uint32_t best_match(const LabelVolume& gt, std::uint32_t gt_id,
                         const LabelVolume& decoded) {
  std::uint32_t max_id = 0;
  for (std::uint32_t v : decoded.data()) max_id = std::max(max_id, v);
  std::vector<std::int64_t> overlap(static_cast<std::size_t>(max_id) + 1, 0);
  for (std::size_t i = 0; i < gt.voxels(); ++i) {
    if (gt.data()[i] == gt_id) ++overlap[decoded.data()[i]];
  }
  std::uint32_t best = 0;
  std::int64_t best_count = -1;
  for (std::uint32_t id = 1; id <= max_id; ++id) {
    if (overlap[id] > best_count) {
      best_count = overlap[id];
      best = id;
    }
  }
  return best;
}

TEST(DecodeParamsValidation, DefaultsValid) {
  EXPECT_NO_THROW(validate_decode_params(DecodeParams{}));
}

TEST(DecodeParamsValidation, RejectsThresholdOutsideUnitInterval) {
  DecodeParams p;
  p.seed_threshold = 1.2f;
  EXPECT_THROW(validate_decode_params(p), std::invalid_argument);
  p = DecodeParams{};
  p.foreground_threshold = -0.1f;
  EXPECT_THROW(validate_decode_params(p), std::invalid_argument);
  p = DecodeParams{};
  p.contour_threshold = 2.0f;
  EXPECT_THROW(validate_decode_params(p), std::invalid_argument);
}

TEST(DecodeParamsValidation, DistanceThresholdMayBeNegative) {
  DecodeParams p;
  p.distance_seed_threshold = -0.5f;
  EXPECT_NO_THROW(validate_decode_params(p));
  p.distance_seed_threshold = -1.5f;
  EXPECT_THROW(validate_decode_params(p), std::invalid_argument);
}

TEST(DecodeParamsValidation, RejectsBadConnectivityAndNegativeMinSize) {
  DecodeParams p;
  p.connectivity = 18;
  EXPECT_THROW(validate_decode_params(p), std::invalid_argument);
  p = DecodeParams{};
  p.min_instance_voxels = -1;
  EXPECT_THROW(validate_decode_params(p), std::invalid_argument);
}

TEST(MedianFilter, ConstantVolumeUnchanged) {
  ProbVolume volume({4, 5, 6}, {30, 6, 6});
  std::fill(volume.data().begin(), volume.data().end(), 0.37f);
  const ProbVolume filtered = median_filter(volume, {3, 3, 3});
  EXPECT_EQ(filtered.shape(), volume.shape());
  EXPECT_EQ(filtered.resolution(), volume.resolution());
  for (float v : filtered.data()) EXPECT_EQ(v, 0.37f);
}

TEST(MedianFilter, SingleOutlierRemoved) {
  ImageVolume volume({5, 5, 5}, {1, 1, 1});
  volume.at(2, 2, 2) = 255;
  const ImageVolume filtered = median_filter(volume, {3, 3, 3});
  for (std::uint8_t v : filtered.data()) EXPECT_EQ(v, 0);
}

TEST(MedianFilter, SevenCubedKernelAccepted) {
  std::mt19937 rng(41);
  const ProbVolume volume = random_volume<float>(rng, {9, 8, 10});
  const ProbVolume filtered = median_filter(volume, {7, 7, 7});
  EXPECT_EQ(filtered.shape(), volume.shape());
  // A median is always one of the windowed samples.
  for (float v : filtered.data()) {
    EXPECT_TRUE(std::find(volume.data().begin(), volume.data().end(), v) !=
                volume.data().end());
  }
}

TEST(MedianFilter, EvenKernelThrows) {
  const ProbVolume volume({4, 4, 4}, {1, 1, 1});
  EXPECT_THROW(median_filter(volume, {2, 3, 3}), std::invalid_argument);
  EXPECT_THROW(median_filter(volume, {3, 4, 3}), std::invalid_argument);
  EXPECT_THROW(median_filter(volume, {3, 3, 0}), std::invalid_argument);
}

TEST(MedianFilter, ReflectsAtBorders) {
  // Line [9, 1, 2, 3] with a length-3 window along x. At x=0 the window
  // mirrors to [1, 9, 1], at x=3 to [2, 3, 2].
  const ProbVolume line = prob_from({9, 1, 2, 3}, {1, 1, 4});
  const ProbVolume filtered = median_filter(line, {1, 1, 3});
  EXPECT_EQ(filtered.at(0, 0, 0), 1.0f);
  EXPECT_EQ(filtered.at(0, 0, 1), 2.0f);
  EXPECT_EQ(filtered.at(0, 0, 2), 2.0f);
  EXPECT_EQ(filtered.at(0, 0, 3), 2.0f);
}

TEST(MedianFilter, KernelLargerThanVolumeStillReflects) {
  const ProbVolume line = prob_from({1, 2, 5}, {1, 1, 3});
  // Window of 7 over 3 voxels bounces more than once; it must not read out
  // of bounds and the result stays within the input value set.
  const ProbVolume filtered = median_filter(line, {1, 1, 7});
  for (float v : filtered.data()) {
    EXPECT_TRUE(v == 1.0f || v == 2.0f || v == 5.0f);
  }
}

TEST(Threshold, ZeroThetaMarksEverything) {
  const ProbVolume prob = prob_from({0.0f, 0.4f, 1.0f}, {1, 1, 3});
  const LabelVolume mask = threshold(prob, 0.0f);
  for (std::uint32_t v : mask.data()) EXPECT_EQ(v, 1u);
}

TEST(Threshold, OneThetaKeepsOnlyExactOnes) {
  const ProbVolume prob = prob_from({0.3f, 1.0f, 0.9999f}, {1, 1, 3});
  const LabelVolume mask = threshold(prob, 1.0f);
  EXPECT_EQ(mask.at(0, 0, 0), 0u);
  EXPECT_EQ(mask.at(0, 0, 1), 1u);
  EXPECT_EQ(mask.at(0, 0, 2), 0u);
}

TEST(Threshold, MidpointExample) {
  const ProbVolume prob = prob_from({0.2f, 0.5f, 0.8f}, {1, 1, 3}, {40, 4, 4});
  const LabelVolume mask = threshold(prob, 0.5f);
  EXPECT_EQ(mask.at(0, 0, 0), 0u);
  EXPECT_EQ(mask.at(0, 0, 1), 1u);
  EXPECT_EQ(mask.at(0, 0, 2), 1u);
  EXPECT_EQ(mask.resolution(), prob.resolution());
}

TEST(Threshold, RejectsThetaOutsideUnitInterval) {
  const ProbVolume prob({1, 1, 1}, {1, 1, 1});
  EXPECT_THROW(threshold(prob, -0.01f), std::invalid_argument);
  EXPECT_THROW(threshold(prob, 1.01f), std::invalid_argument);
}

TEST(ConnectedComponents, EmptyMaskHasZeroCount) {
  const LabelVolume mask({3, 3, 3}, {1, 1, 1});
  const ComponentResult result = connected_components(mask, 6);
  EXPECT_EQ(result.count, 0);
  for (std::uint32_t v : result.labels.data()) EXPECT_EQ(v, 0u);
}

TEST(ConnectedComponents, CornerTouchJoinsUnder26Connectivity) {
  LabelVolume mask({2, 2, 2}, {1, 1, 1});
  mask.at(0, 0, 0) = 1;
  mask.at(1, 1, 1) = 1;
  EXPECT_EQ(connected_components(mask, 26).count, 1);
  EXPECT_EQ(connected_components(mask, 6).count, 2);
}

TEST(ConnectedComponents, FullMaskIsOneComponent) {
  const LabelVolume mask = uniform_mask({3, 4, 5}, 1);
  const ComponentResult result = connected_components(mask, 6);
  EXPECT_EQ(result.count, 1);
  for (std::uint32_t v : result.labels.data()) EXPECT_EQ(v, 1u);
}

TEST(ConnectedComponents, IdsFollowRasterOrderOfFirstVoxel) {
  // A lone voxel early in raster order must take id 1 even though a larger
  // component begins later in the scan.
  LabelVolume mask({2, 2, 4}, {1, 1, 1});
  mask.at(0, 0, 2) = 1;
  mask.at(1, 0, 0) = 1;
  mask.at(1, 0, 1) = 1;
  mask.at(1, 1, 0) = 1;
  const ComponentResult result = connected_components(mask, 6);
  EXPECT_EQ(result.count, 2);
  EXPECT_EQ(result.labels.at(0, 0, 2), 1u);
  EXPECT_EQ(result.labels.at(1, 0, 0), 2u);
  EXPECT_EQ(result.labels.at(1, 0, 1), 2u);
  EXPECT_EQ(result.labels.at(1, 1, 0), 2u);
}

TEST(ConnectedComponents, DiagonalInPlaneSeparatedUnder6) {
  LabelVolume mask({1, 2, 2}, {1, 1, 1});
  mask.at(0, 0, 0) = 1;
  mask.at(0, 1, 1) = 1;
  EXPECT_EQ(connected_components(mask, 6).count, 2);
  EXPECT_EQ(connected_components(mask, 26).count, 1);
}

TEST(ConnectedComponents, RejectsUnknownConnectivity) {
  const LabelVolume mask({1, 1, 1}, {1, 1, 1});
  EXPECT_THROW(connected_components(mask, 18), std::invalid_argument);
}

TEST(PriorityFlood, ClaimsByDescendingPriority) {
  // Seeds at both ends of a line; interior claimed highest-value first, each
  // voxel taking the label of the claimed side it touches.
  const LabelVolume seeds = labels_from({1, 0, 0, 0, 2}, {1, 1, 5});
  const LabelVolume region = uniform_mask({1, 1, 5}, 1);
  const ProbVolume priority = prob_from({1.0f, 0.9f, 0.5f, 0.8f, 1.0f},
                                        {1, 1, 5});
  const LabelVolume out = priority_flood(seeds, region, priority, 6);
  const std::vector<std::uint32_t> expected = {1, 1, 1, 2, 2};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(out.data()[i], expected[i]) << "voxel " << i;
  }
}

TEST(PriorityFlood, EqualValuesClaimRasterFirst) {
  const LabelVolume seeds = labels_from({1, 0, 0, 2}, {1, 1, 4});
  const LabelVolume region = uniform_mask({1, 1, 4}, 1);
  ProbVolume priority({1, 1, 4}, {1, 1, 1});
  std::fill(priority.data().begin(), priority.data().end(), 0.7f);
  const LabelVolume out = priority_flood(seeds, region, priority, 6);
  // Voxel 1 is claimed before voxel 2; voxel 2 then borders labels 1 and 2
  // and takes the smaller.
  EXPECT_EQ(out.data()[1], 1u);
  EXPECT_EQ(out.data()[2], 1u);
  EXPECT_EQ(out.data()[3], 2u);
}

TEST(PriorityFlood, SmallestAdjacentLabelWinsTies) {
  // The center voxel borders both seeds with identical priority everywhere.
  const LabelVolume seeds = labels_from({2, 0, 1}, {1, 1, 3});
  const LabelVolume region = uniform_mask({1, 1, 3}, 1);
  ProbVolume priority({1, 1, 3}, {1, 1, 1});
  std::fill(priority.data().begin(), priority.data().end(), 0.5f);
  const LabelVolume out = priority_flood(seeds, region, priority, 6);
  EXPECT_EQ(out.data()[1], 1u);
}

TEST(PriorityFlood, RegionDisconnectedFromSeedsStaysBackground) {
  const LabelVolume seeds = labels_from({1, 0, 0, 0, 0}, {1, 1, 5});
  const LabelVolume region = labels_from({1, 1, 0, 1, 1}, {1, 1, 5});
  ProbVolume priority({1, 1, 5}, {1, 1, 1});
  std::fill(priority.data().begin(), priority.data().end(), 0.9f);
  const LabelVolume out = priority_flood(seeds, region, priority, 6);
  EXPECT_EQ(out.data()[0], 1u);
  EXPECT_EQ(out.data()[1], 1u);
  EXPECT_EQ(out.data()[2], 0u);
  EXPECT_EQ(out.data()[3], 0u);
  EXPECT_EQ(out.data()[4], 0u);
}

TEST(PriorityFlood, RejectsMismatchedShapes) {
  const LabelVolume seeds({1, 1, 2}, {1, 1, 1});
  const LabelVolume region({1, 1, 3}, {1, 1, 1});
  const ProbVolume priority({1, 1, 2}, {1, 1, 1});
  EXPECT_THROW(priority_flood(seeds, region, priority, 6),
               std::invalid_argument);
}

TEST(PriorityFlood, MatchesNaiveOracleOnRandomVolumes) {
  std::mt19937 rng(2026);
  const std::vector<Vec3> shapes = {{10, 10, 10}, {4, 7, 9}, {1, 10, 10},
                                    {6, 1, 8},    {3, 3, 3}, {2, 9, 5}};
  for (int trial = 0; trial < 12; ++trial) {
    const Vec3 shape = shapes[static_cast<std::size_t>(trial) % shapes.size()];
    const int connectivity = trial % 2 == 0 ? 6 : 26;
    ProbVolume priority = random_volume<float>(rng, shape);
    const LabelVolume region = threshold(priority, 0.25f);
    const LabelVolume seed_mask = threshold(priority, 0.85f);
    const ComponentResult seeds = connected_components(seed_mask, connectivity);
    const LabelVolume fast =
        priority_flood(seeds.labels, region, priority, connectivity);
    const LabelVolume slow =
        naive_flood(seeds.labels, region, priority, connectivity);
    for (std::size_t i = 0; i < fast.voxels(); ++i) {
      ASSERT_EQ(fast.data()[i], slow.data()[i])
          << "trial " << trial << " voxel " << i;
    }
  }
}

TEST(PriorityFlood, MatchesNaiveOracleUnderHeavyTies) {
  // Quantizing priorities to four levels forces constant tie-breaking.
  std::mt19937 rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    const Vec3 shape{5, 6, 7};
    const int connectivity = trial % 2 == 0 ? 6 : 26;
    ProbVolume priority = random_volume<float>(rng, shape);
    for (float& v : priority.data()) {
      v = std::floor(v * 4.0f) / 4.0f;
    }
    const LabelVolume region = threshold(priority, 0.25f);
    const LabelVolume seed_mask = threshold(priority, 0.75f);
    const ComponentResult seeds = connected_components(seed_mask, connectivity);
    const LabelVolume fast =
        priority_flood(seeds.labels, region, priority, connectivity);
    const LabelVolume slow =
        naive_flood(seeds.labels, region, priority, connectivity);
    for (std::size_t i = 0; i < fast.voxels(); ++i) {
      ASSERT_EQ(fast.data()[i], slow.data()[i])
          << "trial " << trial << " voxel " << i;
    }
  }
}

TEST(RemoveSmall, MinZeroIsIdentity) {
  const LabelVolume labels = labels_from({0, 1, 1, 2, 0, 2}, {1, 1, 6});
  const LabelVolume out = remove_small(labels, 0);
  for (std::size_t i = 0; i < labels.voxels(); ++i) {
    EXPECT_EQ(out.data()[i], labels.data()[i]);
  }
}

TEST(RemoveSmall, FiltersBelowThresholdAndCompacts) {
  // Instance 1 has 3 voxels, instance 2 has 10; with min 5 only the larger
  // survives and is relabeled to 1.
  LabelVolume labels({1, 2, 13}, {1, 1, 1});
  for (int i = 0; i < 3; ++i) labels.at(0, 0, i) = 1;
  for (int i = 0; i < 10; ++i) labels.at(0, 1, i) = 2;
  const LabelVolume out = remove_small(labels, 5);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(out.at(0, 0, i), 0u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(out.at(0, 1, i), 1u);
}

TEST(RemoveSmall, SurvivorsKeepRelativeOrder) {
  // Sizes 2, 5, 3 with min 3: ids 2 and 3 survive and compact to 1 and 2.
  const LabelVolume labels =
      labels_from({1, 1, 2, 2, 2, 2, 2, 3, 3, 3}, {1, 1, 10});
  const LabelVolume out = remove_small(labels, 3);
  EXPECT_EQ(out.data()[0], 0u);
  EXPECT_EQ(out.data()[2], 1u);
  EXPECT_EQ(out.data()[7], 2u);
}

TEST(RemoveSmall, ThresholdAboveEverySizeEmptiesVolume) {
  const LabelVolume labels = labels_from({1, 2, 3}, {1, 1, 3});
  const LabelVolume out = remove_small(labels, 100);
  for (std::uint32_t v : out.data()) EXPECT_EQ(v, 0u);
}

TEST(BcWatershed, SeparatedSpheresDecodeToTwoInstances) {
  const LabelVolume gt = separated_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = encode_contour(gt);
  const DecodeResult result = bc_watershed(mask, contour, DecodeParams{});
  EXPECT_FALSE(result.no_seeds);
  ASSERT_EQ(result.num_instances, 2);
  for (std::uint32_t gt_id : {1u, 2u}) {
    const std::uint32_t match = best_match(gt, gt_id, result.labels);
    EXPECT_GE(instance_iou(gt, gt_id, result.labels, match), 0.9)
        << "sphere " << gt_id;
  }
  EXPECT_NE(best_match(gt, 1, result.labels), best_match(gt, 2, result.labels));
}

TEST(BcWatershed, OutputIsPartitionOfForegroundRegion) {
  const LabelVolume gt = separated_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = encode_contour(gt);
  const DecodeParams params;
  const DecodeResult result = bc_watershed(mask, contour, params);
  std::vector<bool> seen(static_cast<std::size_t>(result.num_instances) + 1,
                         false);
  for (std::size_t i = 0; i < result.labels.voxels(); ++i) {
    const std::uint32_t lab = result.labels.data()[i];
    ASSERT_LE(lab, static_cast<std::uint32_t>(result.num_instances));
    seen[lab] = true;
    if (lab != 0) {
      EXPECT_GE(mask.data()[i], params.foreground_threshold);
    }
  }
  for (std::int64_t id = 1; id <= result.num_instances; ++id) {
    EXPECT_TRUE(seen[static_cast<std::size_t>(id)]) << "missing id " << id;
  }
}

TEST(BcWatershed, ContourChannelSeparatesTouchingSpheres) {
  const LabelVolume gt = touching_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = encode_contour(gt);
  const DecodeResult result = bc_watershed(mask, contour, DecodeParams{});
  EXPECT_EQ(result.num_instances, 2);
}

TEST(BcWatershed, LooseSeedsWithoutContourMergeTouchingSpheres) {
  const LabelVolume gt = touching_spheres();
  const ProbVolume mask = encode_binary(gt);
  DecodeParams params;
  params.seed_threshold = 0.5f;
  const DecodeResult result = bc_watershed(mask, zeros_like(gt), params);
  EXPECT_EQ(result.num_instances, 1);
}

TEST(BcWatershed, MinSizeFilterCanEmptyTheLabeling) {
  const LabelVolume gt = separated_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = encode_contour(gt);
  DecodeParams params;
  params.min_instance_voxels = 1000000;
  const DecodeResult result = bc_watershed(mask, contour, params);
  EXPECT_FALSE(result.no_seeds);
  EXPECT_EQ(result.num_instances, 0);
  for (std::uint32_t v : result.labels.data()) EXPECT_EQ(v, 0u);
}

TEST(BcWatershed, NoSeedsSetsFlagInsteadOfThrowing) {
  ProbVolume mask({4, 4, 4}, {1, 1, 1});
  std::fill(mask.data().begin(), mask.data().end(), 0.3f);
  const ProbVolume contour({4, 4, 4}, {1, 1, 1});
  const DecodeResult result = bc_watershed(mask, contour, DecodeParams{});
  EXPECT_TRUE(result.no_seeds);
  EXPECT_EQ(result.num_instances, 0);
  for (std::uint32_t v : result.labels.data()) EXPECT_EQ(v, 0u);
}

TEST(BcWatershed, RejectsMismatchedShapes) {
  const ProbVolume mask({2, 2, 2}, {1, 1, 1});
  const ProbVolume contour({2, 2, 3}, {1, 1, 1});
  EXPECT_THROW(bc_watershed(mask, contour, DecodeParams{}),
               std::invalid_argument);
}

TEST(BcWatershed, RejectsInvalidParams) {
  const ProbVolume mask({2, 2, 2}, {1, 1, 1});
  DecodeParams params;
  params.connectivity = 4;
  EXPECT_THROW(bc_watershed(mask, mask, params), std::invalid_argument);
}

TEST(BcdWatershed, SeparatedSpheresDecodeToTwoInstances) {
  const LabelVolume gt = separated_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = encode_contour(gt);
  const ProbVolume distance = encode_signed_distance(gt);
  const DecodeResult result =
      bcd_watershed(mask, contour, distance, DecodeParams{});
  EXPECT_FALSE(result.no_seeds);
  ASSERT_EQ(result.num_instances, 2);
  for (std::uint32_t gt_id : {1u, 2u}) {
    const std::uint32_t match = best_match(gt, gt_id, result.labels);
    EXPECT_GE(instance_iou(gt, gt_id, result.labels, match), 0.9)
        << "sphere " << gt_id;
  }
}

TEST(BcdWatershed, DistanceChannelSplitsWhereLooseMaskSeedsMerge) {
  // With no contour signal and a permissive seed threshold, mask seeding
  // produces a single seed spanning the touching pair. The distance channel
  // dips at the one-voxel neck, so distance seeding recovers both cores.
  const LabelVolume gt = touching_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = zeros_like(gt);
  const ProbVolume distance = encode_signed_distance(gt);

  DecodeParams loose;
  loose.seed_threshold = 0.5f;
  const DecodeResult merged = bc_watershed(mask, contour, loose);
  EXPECT_EQ(merged.num_instances, 1);

  DecodeParams params;
  params.seed_threshold = 0.5f;
  const DecodeResult split = bcd_watershed(mask, contour, distance, params);
  ASSERT_EQ(split.num_instances, 2);
  for (std::uint32_t gt_id : {1u, 2u}) {
    const std::uint32_t match = best_match(gt, gt_id, split.labels);
    EXPECT_GE(instance_iou(gt, gt_id, split.labels, match), 0.8)
        << "sphere " << gt_id;
  }
}

TEST(BcdWatershed, AllNegativeDistanceYieldsNoSeeds) {
  const LabelVolume gt = separated_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = encode_contour(gt);
  ProbVolume distance(gt.shape(), gt.resolution());
  std::fill(distance.data().begin(), distance.data().end(), -1.0f);
  const DecodeResult result =
      bcd_watershed(mask, contour, distance, DecodeParams{});
  EXPECT_TRUE(result.no_seeds);
  EXPECT_EQ(result.num_instances, 0);
}

TEST(BcdWatershed, RejectsMismatchedShapes) {
  const ProbVolume mask({2, 2, 2}, {1, 1, 1});
  const ProbVolume distance({2, 3, 2}, {1, 1, 1});
  EXPECT_THROW(bcd_watershed(mask, mask, distance, DecodeParams{}),
               std::invalid_argument);
}

TEST(SeedMonotonicity, RaisingSeedThresholdShrinksSeedMask) {
  std::mt19937 rng(11);
  const ProbVolume mask = random_volume<float>(rng, {8, 8, 8});
  const ProbVolume contour = random_volume<float>(rng, {8, 8, 8});
  const float contour_threshold = 0.8f;
  const auto seed_mask = [&](float theta) {
    LabelVolume out(mask.shape(), mask.resolution());
    for (std::size_t i = 0; i < out.voxels(); ++i) {
      out.data()[i] = mask.data()[i] >= theta &&
                              contour.data()[i] <= contour_threshold
                          ? 1u
                          : 0u;
    }
    return out;
  };
  const LabelVolume loose = seed_mask(0.6f);
  const LabelVolume strict = seed_mask(0.8f);
  for (std::size_t i = 0; i < loose.voxels(); ++i) {
    if (strict.data()[i] != 0) {
      EXPECT_NE(loose.data()[i], 0u) << "voxel " << i;
    }
  }
}

TEST(Determinism, RepeatedDecodesAreBitIdentical) {
  const LabelVolume gt = touching_spheres();
  const ProbVolume mask = encode_binary(gt);
  const ProbVolume contour = encode_contour(gt);
  const ProbVolume distance = encode_signed_distance(gt);
  const DecodeResult first =
      bcd_watershed(mask, contour, distance, DecodeParams{});
  const DecodeResult second =
      bcd_watershed(mask, contour, distance, DecodeParams{});
  ASSERT_EQ(first.num_instances, second.num_instances);
  for (std::size_t i = 0; i < first.labels.voxels(); ++i) {
    ASSERT_EQ(first.labels.data()[i], second.labels.data()[i]);
  }
}

}  // namespace
}  // namespace volseg
