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
// Loss evaluation for prediction/target pairs: weighted binary cross entropy
// and Dice, composed by hybrid_loss into a weighted sum over every (target,
// loss) pair with a full per-term breakdown. There is no gradient machinery;
// these score externally produced predictions and pseudo-labels.

#ifndef VOLSEG_LOSSES_HPP_
#define VOLSEG_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "volseg/targets.hpp"
#include "volseg/volume.hpp"

namespace volseg {

// Predictions are clamped into [kBceEps, 1 - kBceEps] before the logs so
// saturated outputs produce large finite penalties instead of infinities.
inline constexpr double kBceEps = 1e-7;
inline constexpr double kDiceEps = 1e-6;

namespace detail {

inline double weighted_bce_span(std::span<const float> pred,
                                std::span<const float> target,
                                std::span<const float> weight) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p =
        std::clamp(static_cast<double>(pred[i]), kBceEps, 1.0 - kBceEps);
    const double t = target[i];
    const double w = weight.empty() ? 1.0 : weight[i];
    sum -= w * (t * std::log(p) + (1.0 - t) * std::log1p(-p));
  }
  return sum / static_cast<double>(pred.size());
}

inline double dice_span(std::span<const float> pred,
                        std::span<const float> target) {
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_t = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += static_cast<double>(pred[i]) * static_cast<double>(target[i]);
    sum_p += pred[i];
    sum_t += target[i];
  }
  return 1.0 - (2.0 * inter + kDiceEps) / (sum_p + sum_t + kDiceEps);
}

inline void check_same_shape(const ProbVolume& a, const ProbVolume& b,
                             const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": prediction shape " +
                                a.shape().str() + " does not match target " +
                                b.shape().str());
  }
}

}  // namespace detail

// Mean over voxels of -w * (t log p + (1 - t) log(1 - p)). The weight map
// may be empty, meaning all ones; it is linear in the weights.
inline double weighted_bce(const ProbVolume& pred, const ProbVolume& target,
                           const ProbVolume* weight_map = nullptr) {
  detail::check_same_shape(pred, target, "weighted_bce");
  if (weight_map != nullptr) {
    detail::check_same_shape(pred, *weight_map, "weighted_bce weight map");
  }
  return detail::weighted_bce_span(
      pred.data(), target.data(),
      weight_map != nullptr ? weight_map->data() : std::span<const float>{});
}

// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps).
inline double dice_loss(const ProbVolume& pred, const ProbVolume& target) {
  detail::check_same_shape(pred, target, "dice_loss");
  return detail::dice_span(pred.data(), target.data());
}

// Inverse-class-frequency weight map for a binary target: voxels of class c
// weigh total / (2 * count_c), so each class contributes half the total
// weight. A class with no voxels contributes weight 1 so the map stays
// finite on degenerate windows.
inline ProbVolume balance_weights(const ProbVolume& target) {
  std::size_t fg = 0;
  for (float t : target.data()) {
    if (t > 0.5f) ++fg;
  }
  const std::size_t total = target.voxels();
  const std::size_t bg = total - fg;
  const double w_fg =
      fg == 0 ? 1.0 : static_cast<double>(total) / (2.0 * static_cast<double>(fg));
  const double w_bg =
      bg == 0 ? 1.0 : static_cast<double>(total) / (2.0 * static_cast<double>(bg));
  ProbVolume out(target.shape(), target.resolution());
  for (std::size_t i = 0; i < total; ++i) {
    out.data()[i] = static_cast<float>(target.data()[i] > 0.5f ? w_fg : w_bg);
  }
  return out;
}

enum class WeightOpt { kNone, kBalance };

// One scored (target, loss) pair inside a hybrid loss.
struct LossTerm {
  std::size_t target_index = 0;
  TargetKind target_kind = TargetKind::kBinary;
  LossKind loss_kind = LossKind::kWeightedBce;
  double loss_weight = 1.0;
  double target_weight = 1.0;
  // Unweighted loss value and its contribution to the total.
  double value = 0.0;
  double weighted_value = 0.0;
};

struct HybridLossResult {
  double total = 0.0;
  std::vector<LossTerm> terms;
};

// total = sum over targets of target_weight * sum over losses of
// loss_weight * loss(pred channels, target channels). Multi-channel targets
// (affinity) are scored across all their channels jointly. The breakdown
// lists every term; summing weighted_value reproduces total exactly.
inline HybridLossResult hybrid_loss(const MultichannelVolume& pred,
                                    const TargetStack& targets,
                                    const std::vector<TargetSpec>& specs,
                                    WeightOpt weight_opt = WeightOpt::kNone) {
  if (specs.empty()) {
    throw std::invalid_argument("hybrid_loss requires at least one spec");
  }
  if (pred.channels() != targets.channels.channels() ||
      pred.shape() != targets.channels.shape()) {
    throw std::invalid_argument(
        "prediction stack (" + std::to_string(pred.channels()) +
        " channels, shape " + pred.shape().str() +
        ") is not aligned with the target stack (" +
        std::to_string(targets.channels.channels()) + " channels, shape " +
        targets.channels.shape().str() + ")");
  }
  std::int64_t expected_channels = 0;
  for (const TargetSpec& spec : specs) expected_channels += spec.channel_count();
  if (expected_channels != pred.channels() ||
      targets.spec_index.size() !=
          static_cast<std::size_t>(pred.channels())) {
    throw std::invalid_argument(
        "specs describe " + std::to_string(expected_channels) +
        " channels but the stacks carry " + std::to_string(pred.channels()));
  }

  HybridLossResult result;
  std::int64_t channel = 0;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const TargetSpec& spec = specs[s];
    const std::int64_t count = spec.channel_count();
    for (std::int64_t c = 0; c < count; ++c) {
      if (targets.spec_index[static_cast<std::size_t>(channel + c)] != s) {
        throw std::invalid_argument("target stack channel " +
                                    std::to_string(channel + c) +
                                    " does not belong to target entry " +
                                    std::to_string(s));
      }
    }
    // Channels of one TargetSpec are contiguous in the stack, so its
    // prediction and target tensors are contiguous spans.
    const std::size_t per = pred.voxels_per_channel();
    const std::span<const float> pred_span =
        pred.data().subspan(static_cast<std::size_t>(channel) * per,
                            static_cast<std::size_t>(count) * per);
    const std::span<const float> target_span =
        targets.channels.data().subspan(static_cast<std::size_t>(channel) * per,
                                        static_cast<std::size_t>(count) * per);

    std::vector<float> weights;
    if (weight_opt == WeightOpt::kBalance) {
      weights.reserve(target_span.size());
      for (std::int64_t c = 0; c < count; ++c) {
        const ProbVolume w = balance_weights(
            targets.channels.extract_channel(channel + c));
        weights.insert(weights.end(), w.data().begin(), w.data().end());
      }
    }

    for (const LossSpec& loss : spec.losses) {
      LossTerm term;
      term.target_index = s;
      term.target_kind = spec.kind;
      term.loss_kind = loss.kind;
      term.loss_weight = loss.weight;
      term.target_weight = spec.target_weight;
      term.value = loss.kind == LossKind::kWeightedBce
                       ? detail::weighted_bce_span(pred_span, target_span,
                                                   weights)
                       : detail::dice_span(pred_span, target_span);
      term.weighted_value =
          term.value * static_cast<double>(loss.weight) *
          static_cast<double>(spec.target_weight);
      result.total += term.weighted_value;
      result.terms.push_back(term);
    }
    channel += count;
  }
  return result;
}

}  // namespace volseg

#endif  // VOLSEG_LOSSES_HPP_
