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
// The predictor boundary: anything that maps a normalized window to
// per-channel probabilities can drive inference. Built-in predictors cover
// testing (echo, constant), a self-contained synthetic model
// (blur-threshold), and serving windows from a precomputed volume (file
// oracle). External models attach through the subprocess predictor.

#ifndef VOLSEG_PREDICTOR_HPP_
#define VOLSEG_PREDICTOR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "volseg/geometry.hpp"
#include "volseg/volume.hpp"

namespace volseg {

// Windows arrive as multichannel f32 volumes normalized to [0, 1] (raw
// image intensity divided by 255). `box` is the window's position in global
// volume coordinates; most predictors ignore it, the file oracle needs it.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::int64_t out_channels() const = 0;

  // Whether predict() may be called concurrently from several workers. The
  // inference harness serializes calls when this is false.
  virtual bool thread_safe() const { return false; }

  virtual MultichannelVolume predict(const MultichannelVolume& input,
                                     const BoundingBox& box) = 0;
};

// Returns its input unchanged. Stitching an echo prediction reproduces the
// normalized image, which makes round-trip defects visible immediately.
class EchoPredictor : public Predictor {
 public:
  std::int64_t out_channels() const override { return 1; }
  bool thread_safe() const override { return true; }

  MultichannelVolume predict(const MultichannelVolume& input,
                             const BoundingBox&) override {
    return input;
  }
};

class ConstantPredictor : public Predictor {
 public:
  ConstantPredictor(std::int64_t channels, float value)
      : channels_(channels), value_(value) {
    if (channels < 1) {
      throw std::invalid_argument("constant predictor channel count must be >= 1");
    }
  }

  std::int64_t out_channels() const override { return channels_; }
  bool thread_safe() const override { return true; }

  MultichannelVolume predict(const MultichannelVolume& input,
                             const BoundingBox&) override {
    return MultichannelVolume(channels_, input.shape(), input.resolution(),
                              value_);
  }

 private:
  std::int64_t channels_;
  float value_;
};

// Synthetic stand-in for a trained model: a radius-1 box blur of the
// normalized intensity followed by a soft cut at 0.5. On bright-object
// fixtures the output channel behaves like a foreground probability map.
class BlurThresholdPredictor : public Predictor {
 public:
  std::int64_t out_channels() const override { return 1; }
  bool thread_safe() const override { return true; }

  MultichannelVolume predict(const MultichannelVolume& input,
                             const BoundingBox&) override {
    const Vec3& shape = input.shape();
    MultichannelVolume out(1, shape, input.resolution());
    const auto src = input.channel(0);
    auto dst = out.channel(0);
    for (std::int64_t z = 0; z < shape.z; ++z) {
      for (std::int64_t y = 0; y < shape.y; ++y) {
        for (std::int64_t x = 0; x < shape.x; ++x) {
          double sum = 0.0;
          int count = 0;
          for (std::int64_t dz = -1; dz <= 1; ++dz) {
            const std::int64_t sz = z + dz;
            if (sz < 0 || sz >= shape.z) continue;
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
              const std::int64_t sy = y + dy;
              if (sy < 0 || sy >= shape.y) continue;
              for (std::int64_t dx = -1; dx <= 1; ++dx) {
                const std::int64_t sx = x + dx;
                if (sx < 0 || sx >= shape.x) continue;
                sum += static_cast<double>(
                    src[static_cast<std::size_t>((sz * shape.y + sy) * shape.x + sx)]);
                ++count;
              }
            }
          }
          const double mean = sum / static_cast<double>(count);
          // Piecewise-linear squash: 0 below 0.25, 1 above 0.75, linear
          // between. Sharp enough to act like a classifier, smooth enough
          // that blending has gradients to average.
          const double p = (mean - 0.25) / 0.5;
          dst[static_cast<std::size_t>((z * shape.y + y) * shape.x + x)] =
              static_cast<float>(p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p));
        }
      }
    }
    return out;
  }
};

// Serves windows of a prediction volume computed elsewhere. The input
// window content is ignored; only its global position matters.
class FilePredictor : public Predictor {
 public:
  explicit FilePredictor(MultichannelVolume prediction)
      : prediction_(std::move(prediction)) {}

  std::int64_t out_channels() const override { return prediction_.channels(); }
  bool thread_safe() const override { return true; }

  MultichannelVolume predict(const MultichannelVolume& input,
                             const BoundingBox& box) override {
    const Vec3& shape = prediction_.shape();
    for (int a = 0; a < 3; ++a) {
      if (box.origin[a] < 0 || box.end()[a] > shape[a]) {
        throw std::out_of_range("window " + box.id() +
                                " lies outside the stored prediction " +
                                shape.str());
      }
    }
    if (input.shape() != box.extent) {
      throw std::invalid_argument("window shape " + input.shape().str() +
                                  " does not match its box extent " +
                                  box.extent.str());
    }
    return crop_multichannel(prediction_, box);
  }

 private:
  MultichannelVolume prediction_;
};

}  // namespace volseg

#endif  // VOLSEG_PREDICTOR_HPP_
