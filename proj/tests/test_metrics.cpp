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

#include "volseg/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "volseg/volume.hpp"

namespace volseg {
namespace {

using testutil::random_volume;
using testutil::sphere_labels;
using testutil::Sphere;

LabelVolume labels_from(Vec3 shape, const std::vector<std::uint32_t>& values,
                        Vec3d res = {1, 1, 1}) {
  return LabelVolume(shape, res, std::vector<std::uint32_t>(values));
}

// Random sparse binary mask with a guaranteed nonzero voxel.
LabelVolume random_mask(std::mt19937& rng, Vec3 shape, double fill,
                        Vec3d res = {1, 1, 1}) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  LabelVolume mask(shape, res);
  for (std::size_t i = 0; i < mask.voxels(); ++i) {
    mask.data()[i] = uniform(rng) < fill ? 1u : 0u;
  }
  mask.data()[0] = 1u;
  return mask;
}

// All-pairs reference for the distance transform: for every voxel, the
// minimum physical distance to any nonzero voxel of the mask.
std::vector<double> brute_force_distances(const LabelVolume& mask, Vec3d res) {
  const Vec3 shape = mask.shape();
  std::vector<Vec3> sites;
  for (std::int64_t z = 0; z < shape.z; ++z) {
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x) {
        if (mask.at(z, y, x) != 0) sites.push_back({z, y, x});
      }
    }
  }
  std::vector<double> out(mask.voxels());
  std::size_t i = 0;
  for (std::int64_t z = 0; z < shape.z; ++z) {
    for (std::int64_t y = 0; y < shape.y; ++y) {
      for (std::int64_t x = 0; x < shape.x; ++x, ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& s : sites) {
          const double dz = static_cast<double>(z - s.z) * res.z;
          const double dy = static_cast<double>(y - s.y) * res.y;
          const double dx = static_cast<double>(x - s.x) * res.x;
          best = std::min(best, std::sqrt(dz * dz + dy * dy + dx * dx));
        }
        out[i] = best;
      }
    }
  }
  return out;
}

TEST(SemanticIou, IdenticalNonemptyMasksScorePerfectly) {
  const LabelVolume mask =
      labels_from({1, 2, 3}, {1, 0, 1, 0, 0, 1});
  const SemanticIou result = iou_semantic(mask, mask);
  EXPECT_EQ(result.fg_iou, 1.0);
  EXPECT_EQ(result.overall_iou, 1.0);
  EXPECT_FALSE(result.degenerate);
}

TEST(SemanticIou, DisjointMasksOnHandFixture) {
  const LabelVolume pred = labels_from({1, 1, 4}, {1, 0, 0, 0});
  const LabelVolume gt = labels_from({1, 1, 4}, {0, 1, 0, 0});
  const SemanticIou result = iou_semantic(pred, gt);
  EXPECT_EQ(result.fg_iou, 0.0);
  // Background agreement is 2 of 4 voxels, so the overall score averages
  // 0.0 foreground with 0.5 background.
  EXPECT_DOUBLE_EQ(result.overall_iou, 0.25);
  EXPECT_FALSE(result.degenerate);
}

TEST(SemanticIou, BothEmptyIsPerfectByConvention) {
  const LabelVolume empty({2, 2, 2}, {1, 1, 1});
  const SemanticIou result = iou_semantic(empty, empty);
  EXPECT_EQ(result.fg_iou, 1.0);
  EXPECT_EQ(result.overall_iou, 1.0);
  EXPECT_TRUE(result.degenerate);
}

TEST(SemanticIou, AllForegroundHasDegenerateBackground) {
  const LabelVolume full({2, 2, 2}, {1, 1, 1}, 1u);
  const SemanticIou result = iou_semantic(full, full);
  EXPECT_EQ(result.fg_iou, 1.0);
  EXPECT_EQ(result.overall_iou, 1.0);
  EXPECT_TRUE(result.degenerate);
}

TEST(SemanticIou, IsSymmetricInItsArguments) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const LabelVolume a = random_mask(rng, {4, 5, 6}, 0.3);
    const LabelVolume b = random_mask(rng, {4, 5, 6}, 0.5);
    const SemanticIou ab = iou_semantic(a, b);
    const SemanticIou ba = iou_semantic(b, a);
    EXPECT_EQ(ab.fg_iou, ba.fg_iou);
    EXPECT_EQ(ab.overall_iou, ba.overall_iou);
  }
}

TEST(SemanticIou, RejectsShapeMismatch) {
  const LabelVolume a({2, 2, 2}, {1, 1, 1});
  const LabelVolume b({2, 2, 3}, {1, 1, 1});
  EXPECT_THROW(iou_semantic(a, b), std::invalid_argument);
}

TEST(InstanceAp, PermutedLabelsScorePerfectly) {
  const LabelVolume gt = sphere_labels(
      {12, 16, 16},
      {{{6, 4, 4}, 3.0}, {{6, 11, 5}, 3.5}, {{5, 8, 12}, 2.5}});
  LabelVolume pred = gt;
  for (std::uint32_t& v : pred.data()) {
    if (v != 0) v = v * 17 + 3;
  }
  const InstanceApResult result =
      instance_ap(pred, gt, {0.25, 0.5, 0.75, 0.9});
  for (const auto& entry : result.ap) {
    EXPECT_EQ(entry.second, 1.0) << "threshold " << entry.first;
  }
  EXPECT_EQ(result.table.matches.size(), 3u);
  EXPECT_TRUE(result.table.unmatched_gt.empty());
  EXPECT_TRUE(result.table.unmatched_pred.empty());
}

TEST(InstanceAp, IndependentRelabelingsLeaveScoresUnchanged) {
  std::mt19937 rng(13);
  const LabelVolume gt = sphere_labels(
      {10, 12, 12}, {{{5, 4, 4}, 2.5}, {{5, 8, 8}, 3.0}});
  LabelVolume pred = gt;
  // Degrade the prediction so scores are nontrivial.
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::uint32_t& v : pred.data()) {
    if (v != 0 && uniform(rng) < 0.2) v = 0;
  }
  const std::vector<double> thresholds{0.5, 0.75};
  const InstanceApResult base = instance_ap(pred, gt, thresholds);

  LabelVolume pred2 = pred;
  for (std::uint32_t& v : pred2.data()) {
    if (v != 0) v = v + 40;
  }
  LabelVolume gt2 = gt;
  for (std::uint32_t& v : gt2.data()) {
    if (v != 0) v = v * 9 + 1;
  }
  const InstanceApResult relabeled = instance_ap(pred2, gt2, thresholds);
  for (double t : thresholds) {
    EXPECT_EQ(base.ap.at(t), relabeled.ap.at(t)) << "threshold " << t;
  }
}

TEST(InstanceAp, MissedInstanceHalvesTheScore) {
  // Reference has instances of 5 and 4 voxels; the single predicted
  // instance covers 4 of the first instance's 5 voxels (IoU 0.8).
  const LabelVolume gt =
      labels_from({1, 1, 10}, {1, 1, 1, 1, 1, 0, 2, 2, 2, 2});
  const LabelVolume pred =
      labels_from({1, 1, 10}, {7, 7, 7, 7, 0, 0, 0, 0, 0, 0});
  const InstanceApResult result = instance_ap(pred, gt, {0.75});
  ASSERT_EQ(result.table.matches.size(), 1u);
  EXPECT_EQ(result.table.matches[0].gt_id, 1u);
  EXPECT_EQ(result.table.matches[0].pred_id, 7u);
  EXPECT_DOUBLE_EQ(result.table.matches[0].iou, 0.8);
  EXPECT_EQ(result.table.unmatched_gt, std::vector<std::uint32_t>{2});
  EXPECT_TRUE(result.table.unmatched_pred.empty());
  EXPECT_DOUBLE_EQ(result.ap.at(0.75), 0.5);
}

TEST(InstanceAp, MatchBelowThresholdCountsAsBothErrors) {
  // One pair with IoU 0.6: a true positive at 0.5, but at 0.75 the pair
  // dissolves into one false positive plus one false negative.
  const LabelVolume gt =
      labels_from({1, 1, 10}, {1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
  const LabelVolume pred =
      labels_from({1, 1, 10}, {4, 4, 4, 0, 0, 0, 0, 0, 0, 0});
  const InstanceApResult result = instance_ap(pred, gt, {0.5, 0.75});
  EXPECT_DOUBLE_EQ(result.ap.at(0.5), 1.0);
  EXPECT_DOUBLE_EQ(result.ap.at(0.75), 0.0);
}

TEST(InstanceAp, GreedyMatchingPrefersHigherIou) {
  const LabelVolume gt =
      labels_from({1, 1, 8}, {1, 1, 1, 1, 2, 2, 2, 2});
  const LabelVolume pred =
      labels_from({1, 1, 8}, {5, 5, 5, 6, 6, 6, 0, 0});
  const InstanceApResult result = instance_ap(pred, gt, {0.5});
  // Candidates: (1,5) IoU 3/4, (1,6) IoU 1/6, (2,6) IoU 2/5. Greedy takes
  // (1,5) then (2,6).
  ASSERT_EQ(result.table.matches.size(), 2u);
  EXPECT_EQ(result.table.matches[0].gt_id, 1u);
  EXPECT_EQ(result.table.matches[0].pred_id, 5u);
  EXPECT_DOUBLE_EQ(result.table.matches[0].iou, 0.75);
  EXPECT_EQ(result.table.matches[1].gt_id, 2u);
  EXPECT_EQ(result.table.matches[1].pred_id, 6u);
  EXPECT_DOUBLE_EQ(result.table.matches[1].iou, 0.4);
}

TEST(InstanceAp, EqualIouTiesBreakByIdPair) {
  // One predicted instance spans two single-voxel references with equal
  // IoU; the lower reference id wins the match.
  const LabelVolume gt = labels_from({1, 1, 2}, {1, 2});
  const LabelVolume pred = labels_from({1, 1, 2}, {5, 5});
  const InstanceApResult result = instance_ap(pred, gt, {0.5});
  ASSERT_EQ(result.table.matches.size(), 1u);
  EXPECT_EQ(result.table.matches[0].gt_id, 1u);
  EXPECT_EQ(result.table.matches[0].pred_id, 5u);
  EXPECT_EQ(result.table.unmatched_gt, std::vector<std::uint32_t>{2});
}

TEST(InstanceAp, MatchingIsOneToOne) {
  std::mt19937 rng(19);
  const LabelVolume gt = sphere_labels(
      {10, 14, 14}, {{{5, 4, 4}, 3.0}, {{5, 9, 9}, 3.0}, {{4, 4, 10}, 2.0}});
  LabelVolume pred = gt;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::uint32_t& v : pred.data()) {
    if (v != 0 && uniform(rng) < 0.3) v = 0;
  }
  const InstanceApResult result = instance_ap(pred, gt, {0.25});
  std::unordered_set<std::uint32_t> seen_gt;
  std::unordered_set<std::uint32_t> seen_pred;
  for (const InstanceMatch& m : result.table.matches) {
    EXPECT_TRUE(seen_gt.insert(m.gt_id).second);
    EXPECT_TRUE(seen_pred.insert(m.pred_id).second);
    EXPECT_GT(m.iou, 0.0);
  }
}

TEST(InstanceAp, BothEmptyIsPerfectByConvention) {
  const LabelVolume empty({3, 3, 3}, {1, 1, 1});
  const InstanceApResult result = instance_ap(empty, empty, {0.5, 0.75});
  EXPECT_TRUE(result.degenerate);
  EXPECT_EQ(result.ap.at(0.5), 1.0);
  EXPECT_EQ(result.ap.at(0.75), 1.0);
}

TEST(InstanceAp, EmptyPredictionAgainstRealInstancesScoresZero) {
  const LabelVolume gt = labels_from({1, 1, 4}, {1, 1, 2, 2});
  const LabelVolume pred({1, 1, 4}, {1, 1, 1});
  const InstanceApResult result = instance_ap(pred, gt, {0.5});
  EXPECT_FALSE(result.degenerate);
  EXPECT_EQ(result.ap.at(0.5), 0.0);
  EXPECT_EQ(result.table.unmatched_gt.size(), 2u);
}

TEST(InstanceAp, ScoreIsMonotoneNonIncreasingInThreshold) {
  std::mt19937 rng(23);
  const std::vector<double> thresholds{0.1, 0.25, 0.5, 0.75, 0.9};
  for (int trial = 0; trial < 8; ++trial) {
    const LabelVolume gt = sphere_labels(
        {10, 12, 12},
        {{{5, 4, 4}, 2.5}, {{5, 8, 8}, 3.0}, {{4, 9, 3}, 2.0}});
    LabelVolume pred = gt;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double drop = 0.1 + 0.08 * trial;
    for (std::uint32_t& v : pred.data()) {
      if (v != 0 && uniform(rng) < drop) v = 0;
    }
    // A spurious instance in a background corner.
    pred.at(0, 0, 0) = 99;
    pred.at(0, 0, 1) = 99;
    const InstanceApResult result = instance_ap(pred, gt, thresholds);
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
      EXPECT_LE(result.ap.at(thresholds[i]), result.ap.at(thresholds[i - 1]))
          << "trial " << trial << " between thresholds " << thresholds[i - 1]
          << " and " << thresholds[i];
    }
  }
}

TEST(InstanceAp, RejectsBadInputs) {
  const LabelVolume a({2, 2, 2}, {1, 1, 1});
  const LabelVolume b({2, 2, 3}, {1, 1, 1});
  EXPECT_THROW(instance_ap(a, b, {0.5}), std::invalid_argument);
  EXPECT_THROW(
      instance_ap(a, a, {std::numeric_limits<double>::quiet_NaN()}),
      std::invalid_argument);
}

TEST(DistanceTransform, ZeroAtMaskVoxels) {
  std::mt19937 rng(29);
  const LabelVolume mask = random_mask(rng, {5, 6, 7}, 0.2);
  const Volume<float> dist = distance_transform(mask);
  for (std::size_t i = 0; i < mask.voxels(); ++i) {
    if (mask.data()[i] != 0) {
      EXPECT_EQ(dist.data()[i], 0.0f);
    }
  }
}

TEST(DistanceTransform, AnisotropicHandFixture) {
  const LabelVolume mask({1, 1, 3}, {40, 4, 4},
                         std::vector<std::uint32_t>{0, 1, 0});
  const Volume<float> dist = distance_transform(mask);
  EXPECT_FLOAT_EQ(dist.data()[0], 4.0f);
  EXPECT_FLOAT_EQ(dist.data()[1], 0.0f);
  EXPECT_FLOAT_EQ(dist.data()[2], 4.0f);
}

TEST(DistanceTransform, MatchesBruteForceOnRandomMasks) {
  std::mt19937 rng(31);
  const std::vector<Vec3d> resolutions{
      {1, 1, 1}, {40, 4, 4}, {2.5, 1.5, 3.0}};
  for (int trial = 0; trial < 12; ++trial) {
    const Vec3 shape{2 + static_cast<std::int64_t>(rng() % 5),
                     2 + static_cast<std::int64_t>(rng() % 5),
                     2 + static_cast<std::int64_t>(rng() % 5)};
    const Vec3d res = resolutions[trial % resolutions.size()];
    const LabelVolume mask = random_mask(rng, shape, 0.15, res);
    const Volume<float> dist = distance_transform(mask);
    const std::vector<double> expected = brute_force_distances(mask, res);
    for (std::size_t i = 0; i < mask.voxels(); ++i) {
      EXPECT_NEAR(dist.data()[i], expected[i], 1e-3)
          << "trial " << trial << " voxel " << i;
    }
  }
}

TEST(DistanceTransform, EmptyMaskThrows) {
  const LabelVolume empty({2, 2, 2}, {1, 1, 1});
  EXPECT_THROW(distance_transform(empty), std::invalid_argument);
}

TEST(CremiScores, IdenticalMasksScoreZero) {
  std::mt19937 rng(37);
  const LabelVolume mask = random_mask(rng, {4, 5, 6}, 0.2);
  const CremiScores result = cremi_scores(mask, mask);
  EXPECT_EQ(result.adgt, 0.0);
  EXPECT_EQ(result.adf, 0.0);
  EXPECT_EQ(result.score, 0.0);
  EXPECT_FALSE(result.degenerate);
}

TEST(CremiScores, SingleVoxelOffsetAtUnitResolution) {
  LabelVolume gt({1, 1, 3}, {1, 1, 1});
  gt.at(0, 0, 0) = 1;
  LabelVolume pred({1, 1, 3}, {1, 1, 1});
  pred.at(0, 0, 1) = 1;
  const CremiScores result = cremi_scores(pred, gt);
  EXPECT_DOUBLE_EQ(result.adgt, 1.0);
  EXPECT_DOUBLE_EQ(result.adf, 1.0);
  EXPECT_DOUBLE_EQ(result.score, 1.0);
}

TEST(CremiScores, DistancesUseThePhysicalResolution) {
  LabelVolume gt({1, 1, 3}, {40, 4, 4});
  gt.at(0, 0, 1) = 1;
  LabelVolume pred({1, 1, 3}, {40, 4, 4});
  pred.at(0, 0, 0) = 1;
  const CremiScores result = cremi_scores(pred, gt);
  EXPECT_DOUBLE_EQ(result.adgt, 4.0);
  EXPECT_DOUBLE_EQ(result.adf, 4.0);
  EXPECT_DOUBLE_EQ(result.score, 4.0);
}

TEST(CremiScores, SwappingArgumentsSwapsTheDirectionalScores) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const LabelVolume a = random_mask(rng, {4, 6, 6}, 0.15);
    const LabelVolume b = random_mask(rng, {4, 6, 6}, 0.25);
    const CremiScores ab = cremi_scores(a, b);
    const CremiScores ba = cremi_scores(b, a);
    EXPECT_EQ(ab.adgt, ba.adf);
    EXPECT_EQ(ab.adf, ba.adgt);
    EXPECT_EQ(ab.score, ba.score);
  }
}

TEST(CremiScores, EmptyPredictionIsCappedAndFlagged) {
  const LabelVolume pred({2, 3, 4}, {40, 4, 4});
  LabelVolume gt({2, 3, 4}, {40, 4, 4});
  gt.at(1, 1, 1) = 1;
  const CremiScores result = cremi_scores(pred, gt);
  EXPECT_EQ(result.adgt, 0.0);
  EXPECT_DOUBLE_EQ(result.adf, volume_diagonal_nm({2, 3, 4}, {40, 4, 4}));
  EXPECT_TRUE(result.degenerate);
}

TEST(CremiScores, BothEmptyScoresZeroFlagged) {
  const LabelVolume empty({2, 2, 2}, {1, 1, 1});
  const CremiScores result = cremi_scores(empty, empty);
  EXPECT_EQ(result.adgt, 0.0);
  EXPECT_EQ(result.adf, 0.0);
  EXPECT_EQ(result.score, 0.0);
  EXPECT_TRUE(result.degenerate);
}

TEST(CremiScores, RejectsMismatchedGeometry) {
  const LabelVolume a({2, 2, 2}, {1, 1, 1});
  const LabelVolume b({2, 2, 3}, {1, 1, 1});
  const LabelVolume c({2, 2, 2}, {40, 4, 4});
  EXPECT_THROW(cremi_scores(a, b), std::invalid_argument);
  EXPECT_THROW(cremi_scores(a, c), std::invalid_argument);
}

TEST(VolumeDiagonal, MatchesHandComputation) {
  // Physical extents are 80 x 12 x 16 nm.
  const double d = volume_diagonal_nm({2, 3, 4}, {40, 4, 4});
  EXPECT_DOUBLE_EQ(d, std::sqrt(80.0 * 80.0 + 12.0 * 12.0 + 16.0 * 16.0));
}

VolumeMetrics with_cremi(const std::string& name, double value) {
  VolumeMetrics m;
  m.name = name;
  m.cremi = value;
  return m;
}

TEST(Aggregate, SingleVolumeIsItsOwnAggregate) {
  VolumeMetrics m = with_cremi("v0", 12.5);
  m.fg_iou = 0.9;
  m.ap[0.75] = 0.8;
  const VolumeMetrics overall = aggregate({m});
  EXPECT_DOUBLE_EQ(*overall.cremi, 12.5);
  EXPECT_DOUBLE_EQ(*overall.fg_iou, 0.9);
  EXPECT_DOUBLE_EQ(overall.ap.at(0.75), 0.8);
  EXPECT_FALSE(overall.iou.has_value());
}

TEST(Aggregate, CremiMeanOverThreeVolumes) {
  const VolumeMetrics overall =
      aggregate({with_cremi("a", 64.53), with_cremi("b", 73.51),
                 with_cremi("c", 24.66)});
  EXPECT_NEAR(*overall.cremi, 54.23, 0.01);
}

TEST(Aggregate, ApMeanOverTwoVolumes) {
  VolumeMetrics a;
  a.ap[0.75] = 0.816;
  VolumeMetrics b;
  b.ap[0.75] = 0.804;
  const VolumeMetrics overall = aggregate({a, b});
  EXPECT_NEAR(overall.ap.at(0.75), 0.810, 0.001);
}

TEST(Aggregate, PartiallyPresentMetricIsAnError) {
  VolumeMetrics a = with_cremi("a", 1.0);
  VolumeMetrics b;
  b.fg_iou = 0.5;
  EXPECT_THROW(aggregate({a, b}), std::invalid_argument);
}

TEST(Aggregate, MismatchedApThresholdSetsAreAnError) {
  VolumeMetrics a;
  a.ap[0.5] = 0.9;
  VolumeMetrics b;
  b.ap[0.75] = 0.8;
  EXPECT_THROW(aggregate({a, b}), std::invalid_argument);
  VolumeMetrics c;
  c.ap[0.5] = 0.7;
  c.ap[0.75] = 0.6;
  EXPECT_THROW(aggregate({a, c}), std::invalid_argument);
}

TEST(Aggregate, EmptyReportListIsAnError) {
  EXPECT_THROW(aggregate({}), std::invalid_argument);
}

TEST(Aggregate, DegenerateFlagPropagates) {
  VolumeMetrics a = with_cremi("a", 0.0);
  VolumeMetrics b = with_cremi("b", 1.0);
  b.degenerate = true;
  EXPECT_TRUE(aggregate({a, b}).degenerate);
  EXPECT_FALSE(aggregate({a, a}).degenerate);
}

TEST(MetricReport, JsonCarriesVolumesAndOverall) {
  VolumeMetrics a = with_cremi("vol-a", 2.0);
  a.fg_iou = 0.75;
  a.ap[0.75] = 1.0;
  VolumeMetrics b = with_cremi("vol-b", 4.0);
  b.fg_iou = 0.85;
  b.ap[0.75] = 0.5;
  const MetricReport report = make_metric_report({a, b});
  const nlohmann::json j = metric_report_to_json(report);
  ASSERT_EQ(j.at("volumes").size(), 2u);
  EXPECT_EQ(j.at("volumes")[0].at("name"), "vol-a");
  EXPECT_DOUBLE_EQ(j.at("overall").at("cremi").get<double>(), 3.0);
  EXPECT_DOUBLE_EQ(j.at("overall").at("fg_iou").get<double>(), 0.8);
  EXPECT_DOUBLE_EQ(j.at("overall").at("ap").at("0.75").get<double>(), 0.75);
  EXPECT_FALSE(j.at("overall").contains("iou"));
}

TEST(MetricReport, TableListsEveryRowAndColumn) {
  VolumeMetrics a = with_cremi("vol-a", 2.0);
  a.ap[0.75] = 1.0;
  VolumeMetrics b = with_cremi("vol-b", 4.0);
  b.ap[0.75] = 0.5;
  b.degenerate = true;
  const MetricReport report = make_metric_report({a, b});
  const std::string table = format_metric_table(report);
  EXPECT_NE(table.find("volume"), std::string::npos);
  EXPECT_NE(table.find("ap@0.75"), std::string::npos);
  EXPECT_NE(table.find("cremi"), std::string::npos);
  EXPECT_NE(table.find("vol-a"), std::string::npos);
  EXPECT_NE(table.find("vol-b*"), std::string::npos);
  EXPECT_NE(table.find("overall"), std::string::npos);
}

}  // namespace
}  // namespace volseg
