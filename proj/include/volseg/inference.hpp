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
// Sliding-window inference orchestration. Prediction runs in two phases:
// windows are predicted (possibly concurrently) into per-window buffers,
// then accumulated serially in grid order. The stitched result is therefore
// bit-identical for every worker count with a deterministic predictor.
//
// Large volumes run chunk by chunk: each chunk is predicted independently
// and written to its own file keyed by global coordinates, so chunks can be
// sharded across processes or machines and merged afterwards. Reruns skip
// chunk files that are already complete.

#ifndef VOLSEG_INFERENCE_HPP_
#define VOLSEG_INFERENCE_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "volseg/blend.hpp"
#include "volseg/geometry.hpp"
#include "volseg/predictor.hpp"
#include "volseg/stitch.hpp"
#include "volseg/tta.hpp"
#include "volseg/volume.hpp"
#include "volseg/volume_io.hpp"

namespace volseg {

struct InferenceOptions {
  Vec3 window_extent{16, 64, 64};
  Vec3 stride{8, 32, 32};
  BlendKind blend = BlendKind::kCosine;
  bool tta = false;
  int num_workers = 1;
};

struct InferenceReport {
  std::int64_t windows = 0;
  // Predictor outputs outside [0, 1] are clamped and counted here.
  std::int64_t clamped_values = 0;
  std::int64_t uncovered_voxels = 0;
  // Set when the volume was smaller than the window and reflect-padded.
  bool padded = false;
  bool tta_transpose_skipped = false;
};

inline void validate_inference_options(const InferenceOptions& opts) {
  for (int a = 0; a < 3; ++a) {
    if (opts.window_extent[a] < 1) {
      throw std::invalid_argument(std::string("window extent along ") +
                                  axis_name(a) + " must be >= 1");
    }
    if (opts.stride[a] < 1) {
      throw std::invalid_argument(std::string("stride along ") + axis_name(a) +
                                  " must be >= 1");
    }
  }
  if (opts.num_workers < 1) {
    throw std::invalid_argument("num_workers must be >= 1");
  }
}

namespace detail {

// Reflect-pads with unlimited margin by bouncing indices, unlike pad(),
// which restricts reflect margins to one axis length. Needed when a volume
// is much smaller than the inference window.
inline ImageVolume pad_after_reflect(const ImageVolume& volume, Vec3 target) {
  const Vec3& shape = volume.shape();
  ImageVolume out(target, volume.resolution());
  for (std::int64_t z = 0; z < target.z; ++z) {
    const std::int64_t sz = reflect_far(z, shape.z);
    for (std::int64_t y = 0; y < target.y; ++y) {
      const std::int64_t sy = reflect_far(y, shape.y);
      for (std::int64_t x = 0; x < target.x; ++x) {
        out.at(z, y, x) = volume.at(sz, sy, reflect_far(x, shape.x));
      }
    }
  }
  return out;
}

inline ProbVolume normalize_window(const ImageVolume& window) {
  ProbVolume out(window.shape(), window.resolution());
  for (std::size_t i = 0; i < window.voxels(); ++i) {
    out.data()[i] = static_cast<float>(window.data()[i]) / 255.0f;
  }
  return out;
}

inline std::int64_t clamp_unit(MultichannelVolume& volume) {
  std::int64_t clamped = 0;
  for (float& v : volume.data()) {
    if (v < 0.0f) {
      v = 0.0f;
      ++clamped;
    } else if (v > 1.0f) {
      v = 1.0f;
      ++clamped;
    }
  }
  return clamped;
}

}  // namespace detail

inline MultichannelVolume run_sliding_inference(const ImageVolume& volume,
                                                Predictor& predictor,
                                                const InferenceOptions& opts,
                                                InferenceReport* report = nullptr) {
  validate_inference_options(opts);
  const Vec3 original_shape = volume.shape();
  Vec3 padded_shape = original_shape;
  bool padded = false;
  for (int a = 0; a < 3; ++a) {
    if (padded_shape[a] < opts.window_extent[a]) {
      padded_shape[a] = opts.window_extent[a];
      padded = true;
    }
  }
  const ImageVolume* source = &volume;
  ImageVolume padded_volume;
  if (padded) {
    padded_volume = detail::pad_after_reflect(volume, padded_shape);
    source = &padded_volume;
  }

  const WindowGrid grid =
      enumerate_windows(padded_shape, opts.window_extent, opts.stride);
  const std::size_t n = grid.windows.size();
  const std::int64_t channels = predictor.out_channels();

  std::vector<MultichannelVolume> results(n);
  std::vector<std::int64_t> clamped(n, 0);
  std::vector<std::string> errors(n);
  std::atomic<bool> tta_skipped{false};
  std::atomic<std::size_t> cursor{0};
  std::mutex predictor_mutex;
  const bool serialize_predict =
      !predictor.thread_safe() && opts.num_workers > 1;

  const auto guarded_predict = [&](const MultichannelVolume& input,
                                   const BoundingBox& box) {
    if (serialize_predict) {
      std::lock_guard<std::mutex> lock(predictor_mutex);
      return predictor.predict(input, box);
    }
    return predictor.predict(input, box);
  };

  const auto predict_window = [&](std::size_t i) {
    const BoundingBox& box = grid.windows[i];
    const ImageVolume window = crop(*source, box);
    const ProbVolume normalized = detail::normalize_window(window);
    MultichannelVolume output;
    if (opts.tta) {
      const TTAExpansion<float> expansion = tta_expand(normalized);
      if (expansion.transpose_skipped) tta_skipped.store(true);
      std::vector<MultichannelVolume> predictions;
      predictions.reserve(expansion.volumes.size());
      for (std::size_t v = 0; v < expansion.volumes.size(); ++v) {
        MultichannelVolume p = guarded_predict(
            MultichannelVolume::from_channels({expansion.volumes[v]}), box);
        if (p.channels() != channels) {
          throw std::invalid_argument(
              "predictor declared " + std::to_string(channels) +
              " channels but produced " + std::to_string(p.channels()));
        }
        predictions.push_back(std::move(p));
      }
      output = tta_collapse(expansion.variants, predictions);
    } else {
      output = guarded_predict(MultichannelVolume::from_channels({normalized}),
                               box);
      if (output.channels() != channels) {
        throw std::invalid_argument(
            "predictor declared " + std::to_string(channels) +
            " channels but produced " + std::to_string(output.channels()));
      }
    }
    if (output.shape() != box.extent) {
      throw std::invalid_argument("prediction shape " + output.shape().str() +
                                  " does not match window extent " +
                                  box.extent.str());
    }
    clamped[i] = detail::clamp_unit(output);
    results[i] = std::move(output);
  };

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) break;
      try {
        predict_window(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  const int thread_count =
      static_cast<int>(std::min<std::size_t>(
          n, static_cast<std::size_t>(opts.num_workers)));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      throw std::runtime_error("prediction failed for window " +
                               grid.windows[i].id() + ": " + errors[i]);
    }
  }

  std::vector<std::pair<BoundingBox, const MultichannelVolume*>> placed;
  placed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    placed.emplace_back(grid.windows[i], &results[i]);
  }
  const BlendWindow blend = make_blend_window(opts.window_extent, opts.blend);
  StitchReport stitch_report;
  MultichannelVolume stitched = stitch(placed, blend, padded_shape, channels,
                                       volume.resolution(), &stitch_report);
  if (padded) {
    stitched = crop_multichannel(stitched, BoundingBox{{0, 0, 0}, original_shape});
  }

  if (report != nullptr) {
    report->windows = static_cast<std::int64_t>(n);
    std::int64_t total_clamped = 0;
    for (std::int64_t c : clamped) total_clamped += c;
    report->clamped_values = total_clamped;
    report->uncovered_voxels = stitch_report.uncovered_voxels;
    report->padded = padded;
    report->tta_transpose_skipped = tta_skipped.load();
  }
  return stitched;
}

// Supplies the image region for a chunk box in global coordinates.
using RegionLoader = std::function<ImageVolume(const BoundingBox&)>;

struct ChunkRunReport {
  std::vector<std::string> completed;
  // Chunks whose output file already existed and was complete.
  std::vector<std::string> skipped;
  // (chunk_id, error message); failed chunks do not stop the others.
  std::vector<std::pair<std::string, std::string>> failures;
};

namespace detail {

inline std::string chunk_base_path(const std::string& output_dir,
                                   const std::string& chunk_id) {
  return (std::filesystem::path(output_dir) / ("pred_" + chunk_id)).string();
}

// A chunk file is complete when its header parses, matches the expected
// geometry, and the payload has exactly the advertised size.
inline bool chunk_file_complete(const std::string& base, Vec3 extent,
                                std::int64_t channels) {
  std::error_code ec;
  if (!std::filesystem::exists(base + ".json", ec) ||
      !std::filesystem::exists(base + ".raw", ec)) {
    return false;
  }
  try {
    const nlohmann::json header = read_volume_header(base);
    if (detail::parse_vec3(header, "shape", base + ".json") != extent) {
      return false;
    }
    if (header.value("channels", std::int64_t{1}) != channels) return false;
    const auto size = std::filesystem::file_size(base + ".raw", ec);
    if (ec) return false;
    const std::uint64_t expected =
        static_cast<std::uint64_t>(channels * extent.voxels()) * sizeof(float);
    return size == expected;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

// Predicts every chunk of the plan into output_dir/pred_{chunk_id}. Chunks
// whose files are already complete are skipped, making reruns resume after
// interruption. A failing chunk is recorded and the remaining chunks still
// run.
inline ChunkRunReport run_chunked_inference(const ChunkPlan& plan,
                                            const RegionLoader& loader,
                                            Predictor& predictor,
                                            const InferenceOptions& opts,
                                            const std::string& output_dir) {
  validate_inference_options(opts);
  std::filesystem::create_directories(output_dir);
  ChunkRunReport report;
  for (const BoundingBox& box : plan.chunks) {
    const std::string id = box.id();
    const std::string base = detail::chunk_base_path(output_dir, id);
    try {
      if (detail::chunk_file_complete(base, box.extent,
                                      predictor.out_channels())) {
        report.skipped.push_back(id);
        continue;
      }
      const ImageVolume region = loader(box);
      if (region.shape() != box.extent) {
        throw std::invalid_argument("loader returned shape " +
                                    region.shape().str() + " for chunk " + id +
                                    " with extent " + box.extent.str());
      }
      const MultichannelVolume prediction =
          run_sliding_inference(region, predictor, opts);
      nlohmann::json extra;
      extra["chunk_id"] = id;
      extra["origin"] = {box.origin.z, box.origin.y, box.origin.x};
      write_multichannel(prediction, base + ".json", extra);
      report.completed.push_back(id);
    } catch (const std::exception& e) {
      report.failures.emplace_back(id, e.what());
    }
  }
  return report;
}

// Reassembles a full-volume prediction from chunk files, blending chunk
// overlaps with the same weighted normalization used for windows.
inline MultichannelVolume merge_chunks(const ChunkPlan& plan,
                                       const std::string& output_dir,
                                       BlendKind blend_kind,
                                       StitchReport* report = nullptr) {
  std::vector<std::string> missing;
  for (const BoundingBox& box : plan.chunks) {
    const std::string base = detail::chunk_base_path(output_dir, box.id());
    std::error_code ec;
    if (!std::filesystem::exists(base + ".json", ec) ||
        !std::filesystem::exists(base + ".raw", ec)) {
      missing.push_back(box.id());
    }
  }
  if (!missing.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i > 0) joined += ", ";
      joined += missing[i];
    }
    throw IoError("cannot merge: missing prediction chunks: " + joined);
  }

  std::vector<MultichannelVolume> chunks;
  chunks.reserve(plan.chunks.size());
  std::int64_t channels = 0;
  Vec3d resolution{1, 1, 1};
  for (const BoundingBox& box : plan.chunks) {
    const std::string base = detail::chunk_base_path(output_dir, box.id());
    MultichannelVolume chunk = read_multichannel(base);
    if (chunk.shape() != box.extent) {
      throw FormatError("chunk " + box.id() + " has shape " +
                        chunk.shape().str() + ", plan expects " +
                        box.extent.str());
    }
    if (channels == 0) {
      channels = chunk.channels();
      resolution = chunk.resolution();
    } else if (chunk.channels() != channels) {
      throw FormatError("chunk " + box.id() + " has " +
                        std::to_string(chunk.channels()) +
                        " channels, expected " + std::to_string(channels));
    }
    chunks.push_back(std::move(chunk));
  }

  std::vector<std::pair<BoundingBox, const MultichannelVolume*>> placed;
  placed.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    placed.emplace_back(plan.chunks[i], &chunks[i]);
  }
  const BlendWindow blend = make_blend_window(plan.chunk_extent, blend_kind);
  return stitch(placed, blend, plan.volume_shape, channels, resolution, report);
}

}  // namespace volseg

#endif  // VOLSEG_INFERENCE_HPP_
