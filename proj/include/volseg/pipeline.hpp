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

#ifndef VOLSEG_PIPELINE_HPP_
#define VOLSEG_PIPELINE_HPP_

// Configuration-driven pipeline stages behind the command line tool. Each
// cmd_* function is a pure function of its configuration and input files:
// it reads inputs, writes outputs under OUTPUT_PATH, and reports everything
// it touched in a StageResult the caller folds into a run manifest.
//
// Error mapping convention: violations caused by configuration values raise
// ConfigError, violations caused by file contents raise FormatError or the
// standard argument errors, and filesystem failures raise IoError. The
// command line tool turns these into distinct exit codes.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "volseg/augment.hpp"
#include "volseg/config.hpp"
#include "volseg/decode.hpp"
#include "volseg/errors.hpp"
#include "volseg/geometry.hpp"
#include "volseg/inference.hpp"
#include "volseg/metrics.hpp"
#include "volseg/predictor.hpp"
#include "volseg/rng.hpp"
#include "volseg/sampling.hpp"
#include "volseg/subprocess_predictor.hpp"
#include "volseg/targets.hpp"
#include "volseg/tiles.hpp"
#include "volseg/version.hpp"
#include "volseg/volume.hpp"
#include "volseg/volume_io.hpp"

namespace volseg {

// What one pipeline stage read, wrote, and wants the user to see. The input
// list names every file whose bytes influenced the outputs, so digesting it
// pins down the run for reproduction.
struct StageResult {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json details = nlohmann::json::object();
  std::string text;
};

namespace detail {

inline Vec3 config_vec3(const PipelineConfig& config, const std::string& key) {
  const std::vector<std::int64_t> v = config.int_list_at(key);
  if (v.size() != 3) {
    throw ConfigError(key + " must have exactly 3 entries (z, y, x), got " +
                      std::to_string(v.size()));
  }
  return {v[0], v[1], v[2]};
}

inline std::array<double, 2> config_range(const PipelineConfig& config,
                                          const std::string& key) {
  const std::vector<double> v = config.float_list_at(key);
  if (v.size() != 2) {
    throw ConfigError(key + " must have exactly 2 entries (low, high), got " +
                      std::to_string(v.size()));
  }
  return {v[0], v[1]};
}

// Registers the header/payload pair of a volume file for manifest digesting.
inline void record_volume_files(std::vector<std::string>& list,
                                const std::string& path) {
  const std::string base = strip_json_suffix(path);
  list.push_back(base + ".json");
  list.push_back(base + ".raw");
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline std::string output_dir(const PipelineConfig& config) {
  const std::string dir = config.str_at("OUTPUT_PATH");
  if (dir.empty()) throw ConfigError("OUTPUT_PATH must not be empty");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir + ": " +
                  ec.message());
  }
  return dir;
}

// Splits a comma separated path list. Entries are taken verbatim, so paths
// containing commas cannot be expressed; empty entries are rejected later.
inline std::vector<std::string> split_comma_list(const std::string& text) {
  std::vector<std::string> parts;
  if (text.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(',', start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// --- configuration name lookups ---

inline TargetKind target_kind_from_name(const std::string& name) {
  if (name == "binary") return TargetKind::kBinary;
  if (name == "contour") return TargetKind::kContour;
  if (name == "signed_distance") return TargetKind::kSignedDistance;
  if (name == "affinity") return TargetKind::kAffinity;
  throw ConfigError("unknown target \"" + name +
                    "\", expected binary|contour|signed_distance|affinity");
}

inline LossKind loss_kind_from_name(const std::string& name) {
  if (name == "weighted_bce") return LossKind::kWeightedBce;
  if (name == "dice") return LossKind::kDice;
  throw ConfigError("unknown loss \"" + name +
                    "\", expected weighted_bce|dice");
}

inline FillMode fill_mode_from_name(const std::string& name) {
  if (name == "mean") return FillMode::kMean;
  if (name == "constant") return FillMode::kConstant;
  throw ConfigError("unknown fill mode \"" + name +
                    "\", expected mean|constant");
}

// --- builders from configuration to domain objects ---

// Builds the target list from the MODEL section. TARGET_OPT, TARGET_WEIGHT,
// LOSS_OPTION, and LOSS_WEIGHT are parallel lists with one entry per target;
// encoder parameters (alpha, beta, contour shape, affinity offsets) are
// shared by every target of the matching kind.
inline std::vector<TargetSpec> make_target_specs(const PipelineConfig& config) {
  const std::vector<std::string> names = config.str_list_at("MODEL.TARGET_OPT");
  const std::vector<double> weights = config.float_list_at("MODEL.TARGET_WEIGHT");
  const auto loss_names = config.str_list_list_at("MODEL.LOSS_OPTION");
  const auto loss_weights = config.float_list_list_at("MODEL.LOSS_WEIGHT");
  if (names.empty()) {
    throw ConfigError("MODEL.TARGET_OPT must list at least one target");
  }
  if (weights.size() != names.size() || loss_names.size() != names.size() ||
      loss_weights.size() != names.size()) {
    throw ConfigError(
        "MODEL.TARGET_OPT, TARGET_WEIGHT, LOSS_OPTION, and LOSS_WEIGHT must "
        "have one entry per target");
  }

  std::vector<Vec3> offsets;
  for (const auto& row : config.int_list_list_at("MODEL.AFFINITY_OFFSETS")) {
    if (row.size() != 3) {
      throw ConfigError(
          "MODEL.AFFINITY_OFFSETS entries must have 3 components (z, y, x)");
    }
    offsets.push_back({row[0], row[1], row[2]});
  }

  std::vector<TargetSpec> specs;
  for (std::size_t t = 0; t < names.size(); ++t) {
    if (loss_names[t].size() != loss_weights[t].size()) {
      throw ConfigError("MODEL.LOSS_OPTION and MODEL.LOSS_WEIGHT for target \"" +
                        names[t] + "\" must have matching lengths");
    }
    TargetSpec spec;
    spec.kind = target_kind_from_name(names[t]);
    spec.target_weight = static_cast<float>(weights[t]);
    spec.losses.clear();
    for (std::size_t l = 0; l < loss_names[t].size(); ++l) {
      spec.losses.push_back({loss_kind_from_name(loss_names[t][l]),
                             static_cast<float>(loss_weights[t][l])});
    }
    spec.alpha = config.float_at("MODEL.DISTANCE_ALPHA");
    spec.beta = config.float_at("MODEL.DISTANCE_BETA");
    spec.clamp = config.bool_at("MODEL.DISTANCE_CLAMP");
    spec.contour_radius = config.int_at("MODEL.CONTOUR_RADIUS");
    spec.contour_connectivity =
        static_cast<int>(config.int_at("MODEL.CONTOUR_CONNECTIVITY"));
    spec.affinity_offsets = offsets;
    try {
      validate_target_spec(spec);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("MODEL target \"" + names[t] + "\": " + e.what());
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

// Builds the augmentation list from the AUGMENTOR section. Operations run
// in AUGMENTOR.ORDER; entries whose ENABLED flag is off are dropped here so
// downstream code never sees them.
inline std::vector<AugmentSpec> make_augment_specs(const PipelineConfig& config) {
  std::vector<AugmentSpec> specs;
  for (const std::string& name : config.str_list_at("AUGMENTOR.ORDER")) {
    std::string section;
    AugmentParams params;
    if (name == "grayscale") {
      section = "GRAYSCALE";
      GrayscaleParams p;
      p.brightness_range =
          detail::config_range(config, "AUGMENTOR.GRAYSCALE.BRIGHTNESS");
      p.contrast_range =
          detail::config_range(config, "AUGMENTOR.GRAYSCALE.CONTRAST");
      p.gamma_range = detail::config_range(config, "AUGMENTOR.GRAYSCALE.GAMMA");
      p.invert_prob = config.float_at("AUGMENTOR.GRAYSCALE.INVERT_PROB");
      params = p;
    } else if (name == "missing_part") {
      section = "MISSING_PART";
      MissingPartParams p;
      p.num_regions = config.int_at("AUGMENTOR.MISSING_PART.NUM_REGIONS");
      p.max_extent_fraction =
          config.float_at("AUGMENTOR.MISSING_PART.MAX_EXTENT_FRACTION");
      p.fill_mode = fill_mode_from_name(
          config.str_at("AUGMENTOR.MISSING_PART.FILL_MODE"));
      const std::int64_t fill =
          config.int_at("AUGMENTOR.MISSING_PART.FILL_VALUE");
      if (fill < 0 || fill > 255) {
        throw ConfigError("AUGMENTOR.MISSING_PART.FILL_VALUE must be in "
                          "[0, 255], got " + std::to_string(fill));
      }
      p.fill_value = static_cast<std::uint8_t>(fill);
      params = p;
    } else if (name == "misalignment") {
      section = "MISALIGNMENT";
      MisalignmentParams p;
      p.max_shift_px = config.int_at("AUGMENTOR.MISALIGNMENT.MAX_SHIFT_PX");
      p.rotate = config.bool_at("AUGMENTOR.MISALIGNMENT.ROTATE");
      p.max_rotate_deg =
          config.float_at("AUGMENTOR.MISALIGNMENT.MAX_ROTATE_DEG");
      params = p;
    } else if (name == "rescale") {
      section = "RESCALE";
      RescaleParams p;
      p.scale_range =
          detail::config_range(config, "AUGMENTOR.RESCALE.SCALE_RANGE");
      p.three_d = config.bool_at("AUGMENTOR.RESCALE.THREE_D");
      params = p;
    } else if (name == "flip") {
      section = "FLIP";
      params = FlipParams{};
    } else if (name == "transpose") {
      section = "TRANSPOSE";
      params = TransposeParams{};
    } else {
      throw ConfigError("unknown augmentation \"" + name +
                        "\" in AUGMENTOR.ORDER");
    }
    if (!config.bool_at("AUGMENTOR." + section + ".ENABLED")) continue;
    AugmentSpec spec;
    spec.probability = config.float_at("AUGMENTOR." + section + ".P");
    if (!(spec.probability >= 0.0 && spec.probability <= 1.0)) {
      throw ConfigError("AUGMENTOR." + section + ".P must be in [0, 1]");
    }
    spec.params = params;
    specs.push_back(std::move(spec));
  }
  return specs;
}

inline DecodeParams make_decode_params(const PipelineConfig& config) {
  DecodeParams params;
  params.seed_threshold =
      static_cast<float>(config.float_at("DECODE.SEED_THRESHOLD"));
  params.contour_threshold =
      static_cast<float>(config.float_at("DECODE.CONTOUR_THRESHOLD"));
  params.foreground_threshold =
      static_cast<float>(config.float_at("DECODE.FOREGROUND_THRESHOLD"));
  params.distance_seed_threshold =
      static_cast<float>(config.float_at("DECODE.DISTANCE_THRESHOLD"));
  params.min_instance_voxels = config.int_at("DECODE.MIN_INSTANCE_VOXELS");
  params.connectivity = static_cast<int>(config.int_at("DECODE.CONNECTIVITY"));
  try {
    validate_decode_params(params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("DECODE: ") + e.what());
  }
  return params;
}

inline InferenceOptions make_inference_options(const PipelineConfig& config) {
  InferenceOptions opts;
  opts.window_extent = detail::config_vec3(config, "INFERENCE.WINDOW_SIZE");
  opts.stride = detail::config_vec3(config, "INFERENCE.STRIDE");
  opts.tta = config.bool_at("INFERENCE.TTA");
  opts.num_workers = static_cast<int>(config.int_at("SYSTEM.NUM_WORKERS"));
  try {
    opts.blend = blend_kind_from_name(config.str_at("INFERENCE.BLEND"));
    validate_inference_options(opts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("INFERENCE: ") + e.what());
  }
  return opts;
}

// Instantiates the predictor named by INFERENCE.PREDICTOR. The file
// predictor reads INFERENCE.PREDICTOR_ENDPOINT as a multichannel volume
// path; the subprocess predictor treats it as a child command line split on
// whitespace.
inline std::unique_ptr<Predictor> make_predictor(const PipelineConfig& config) {
  const std::string name = config.str_at("INFERENCE.PREDICTOR");
  const std::string endpoint = config.str_at("INFERENCE.PREDICTOR_ENDPOINT");
  if (name == "echo") return std::make_unique<EchoPredictor>();
  if (name == "blur") return std::make_unique<BlurThresholdPredictor>();
  if (name == "constant") {
    const std::int64_t planes = config.int_at("MODEL.OUT_PLANES");
    if (planes < 1) throw ConfigError("MODEL.OUT_PLANES must be >= 1");
    return std::make_unique<ConstantPredictor>(
        planes, static_cast<float>(config.float_at("INFERENCE.PREDICTOR_CONSTANT")));
  }
  if (name == "file") {
    if (endpoint.empty()) {
      throw ConfigError("INFERENCE.PREDICTOR_ENDPOINT must name the "
                        "prediction volume for the file predictor");
    }
    return std::make_unique<FilePredictor>(read_multichannel(endpoint));
  }
  if (name == "subprocess") {
    std::istringstream stream(endpoint);
    std::vector<std::string> command;
    std::string token;
    while (stream >> token) command.push_back(token);
    if (command.empty()) {
      throw ConfigError("INFERENCE.PREDICTOR_ENDPOINT must hold the child "
                        "command line for the subprocess predictor");
    }
    const std::int64_t planes = config.int_at("MODEL.OUT_PLANES");
    if (planes < 1) throw ConfigError("MODEL.OUT_PLANES must be >= 1");
    const double timeout_s = config.float_at("INFERENCE.PREDICTOR_TIMEOUT_S");
    if (!(timeout_s > 0.0)) {
      throw ConfigError("INFERENCE.PREDICTOR_TIMEOUT_S must be > 0");
    }
    const double timeout_ms = std::min(timeout_s * 1000.0, 2.0e9);
    return std::make_unique<SubprocessPredictor>(
        std::move(command), planes, static_cast<int>(timeout_ms));
  }
  throw ConfigError("unknown predictor \"" + name +
                    "\", expected echo|constant|blur|file|subprocess");
}

// --- run manifest ---

namespace detail {

// FNV-1a 64-bit content digest rendered as 16 hex characters.
inline std::string fnv1a64_hex(const std::vector<char>& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

inline std::string file_digest(const std::string& path) {
  return fnv1a64_hex(read_file_bytes(path));
}

}  // namespace detail

// Everything needed to answer "which run produced these files": the
// resolved configuration, a content digest of every input file, the output
// list, and the tool version.
struct RunManifest {
  std::string command;
  std::string config_text;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  nlohmann::json details = nlohmann::json::object();
  double elapsed_seconds = 0.0;
};

inline RunManifest make_run_manifest(const std::string& command,
                                     const PipelineConfig& config,
                                     const StageResult& result,
                                     double elapsed_seconds) {
  RunManifest manifest;
  manifest.command = command;
  manifest.config_text = dump_config(config);
  for (const std::string& path : result.inputs) {
    manifest.input_digests[path] = detail::file_digest(path);
  }
  manifest.outputs = result.outputs;
  manifest.details = result.details;
  manifest.elapsed_seconds = elapsed_seconds;
  return manifest;
}

inline nlohmann::json run_manifest_to_json(const RunManifest& manifest) {
  nlohmann::json j;
  j["tool"] = "volseg";
  j["version"] = kVersion;
  j["command"] = manifest.command;
  j["elapsed_seconds"] = manifest.elapsed_seconds;
  j["config"] = manifest.config_text;
  j["inputs"] = manifest.input_digests;
  j["outputs"] = manifest.outputs;
  j["details"] = manifest.details;
  return j;
}

// Writes the manifest through a sibling temporary file and renames it into
// place, so a crash mid-write never leaves a truncated manifest behind.
inline void write_run_manifest(const RunManifest& manifest,
                               const std::string& path) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create manifest directory " +
                    target.parent_path().string() + ": " + ec.message());
    }
  }
  const std::string text = run_manifest_to_json(manifest).dump(2) + "\n";
  const std::string tmp = path + ".tmp";
  detail::write_file_bytes(tmp, text.data(), text.size());
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    throw IoError("cannot move manifest into place at " + path + ": " +
                  ec.message());
  }
}

// --- shared stage plumbing ---

namespace detail {

// Where sample and infer read image voxels from: either one volume file or
// a tiled section set. Tile regions are fetched per crop, so large tiled
// datasets never load whole; every tile actually opened is collected in
// `touched` for the manifest.
struct ImageSource {
  Vec3 shape{0, 0, 0};
  Vec3d resolution{1.0, 1.0, 1.0};
  RegionLoader loader;
  std::vector<std::string> inputs;
  std::shared_ptr<std::set<std::string>> touched =
      std::make_shared<std::set<std::string>>();
};

inline ImageSource open_image_source(const PipelineConfig& config) {
  ImageSource source;
  const std::string image_path = config.str_at("DATASET.IMAGE_PATH");
  const std::string tile_path = config.str_at("DATASET.TILE_METADATA_PATH");
  if (!image_path.empty()) {
    auto image = std::make_shared<ImageVolume>(
        read_volume_as<std::uint8_t>(image_path));
    source.shape = image->shape();
    source.resolution = image->resolution();
    record_volume_files(source.inputs, image_path);
    source.loader = [image](const BoundingBox& box) {
      return crop(*image, box);
    };
    return source;
  }
  if (!tile_path.empty()) {
    auto meta =
        std::make_shared<TileSetMetadata>(load_tile_metadata(tile_path));
    if (meta->dtype != Dtype::U8) {
      throw FormatError("tile set " + tile_path +
                        " must have dtype u8 to serve as the image source");
    }
    source.shape = meta->implied_shape();
    source.resolution = meta->resolution;
    source.inputs.push_back(tile_path);
    auto touched = source.touched;
    source.loader = [meta, touched](const BoundingBox& box) {
      AnyVolume any = load_tile_region(
          *meta, box, [touched](const std::string& p) { touched->insert(p); });
      return std::get<ImageVolume>(std::move(any));
    };
    return source;
  }
  throw ConfigError(
      "set DATASET.IMAGE_PATH or DATASET.TILE_METADATA_PATH to name the "
      "image source");
}

// Resolves the dataset volume shape from the image header or the tile
// metadata without reading any voxel payload.
inline Vec3 dataset_volume_shape(const PipelineConfig& config,
                                 std::vector<std::string>& inputs) {
  const std::string image_path = config.str_at("DATASET.IMAGE_PATH");
  const std::string tile_path = config.str_at("DATASET.TILE_METADATA_PATH");
  if (!image_path.empty()) {
    const std::string base = strip_json_suffix(image_path);
    const nlohmann::json header = read_volume_header(base);
    inputs.push_back(base + ".json");
    return parse_vec3(header, "shape", base + ".json");
  }
  if (!tile_path.empty()) {
    inputs.push_back(tile_path);
    return load_tile_metadata(tile_path).implied_shape();
  }
  throw ConfigError(
      "set DATASET.IMAGE_PATH or DATASET.TILE_METADATA_PATH to name the "
      "image source");
}

inline nlohmann::json vec3_to_json(const Vec3& v) {
  return nlohmann::json::array({v.z, v.y, v.x});
}

}  // namespace detail

// --- pipeline stages ---

// Plans how the dataset volume splits into overlapping chunks and records
// the plan both as JSON (consumed by chunked inference and external
// schedulers) and as a human readable table.
inline StageResult cmd_plan(const PipelineConfig& config) {
  StageResult result;
  const std::string out_dir = detail::output_dir(config);
  const Vec3 shape = detail::dataset_volume_shape(config, result.inputs);
  ChunkPlan plan;
  try {
    plan = make_chunk_plan(shape,
                           detail::config_vec3(config, "DATASET.CHUNK_SIZE"),
                           detail::config_vec3(config, "DATASET.CHUNK_OVERLAP"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("DATASET chunk plan: ") + e.what());
  }

  nlohmann::json j;
  j["volume_shape"] = detail::vec3_to_json(plan.volume_shape);
  j["chunk_extent"] = detail::vec3_to_json(plan.chunk_extent);
  j["overlap"] = detail::vec3_to_json(plan.overlap);
  j["chunks"] = nlohmann::json::array();
  for (const BoundingBox& box : plan.chunks) {
    j["chunks"].push_back({{"id", box.id()},
                           {"origin", detail::vec3_to_json(box.origin)},
                           {"extent", detail::vec3_to_json(box.extent)}});
  }
  const std::string plan_path = detail::join_path(out_dir, "plan.json");
  const std::string text = j.dump(2) + "\n";
  detail::write_file_bytes(plan_path, text.data(), text.size());
  result.outputs.push_back(plan_path);

  std::size_t id_width = 2;
  for (const BoundingBox& box : plan.chunks) {
    id_width = std::max(id_width, box.id().size());
  }
  std::ostringstream table;
  table << "volume " << plan.volume_shape.str() << ", chunk extent "
        << plan.chunk_extent.str() << ", overlap " << plan.overlap.str()
        << ", " << plan.chunks.size() << " chunk"
        << (plan.chunks.size() == 1 ? "" : "s") << "\n";
  table << std::left << std::setw(static_cast<int>(id_width) + 2) << "id"
        << std::setw(18) << "origin" << "extent";
  for (const BoundingBox& box : plan.chunks) {
    table << "\n"
          << std::left << std::setw(static_cast<int>(id_width) + 2) << box.id()
          << std::setw(18) << box.origin.str() << box.extent.str();
  }
  result.text = table.str();
  result.details["num_chunks"] = plan.chunks.size();
  result.details["volume_shape"] = detail::vec3_to_json(shape);
  return result;
}

// Draws `count` training windows with rejection sampling, applies the
// configured augmentations, and writes each window as an image/label volume
// pair. Draw i consumes counter streams (seed, 2i) for window selection and
// (seed, 2i + 1) for augmentation coins, so the two never replay each other.
inline StageResult cmd_sample(const PipelineConfig& config, std::int64_t count) {
  if (count < 0) throw ConfigError("sample count must be >= 0");
  StageResult result;
  const std::string out_dir = detail::output_dir(config);
  const std::string label_path = config.str_at("DATASET.LABEL_PATH");
  if (label_path.empty()) {
    throw ConfigError("DATASET.LABEL_PATH must be set for sampling");
  }
  const LabelVolume labels = read_volume_as<std::uint32_t>(label_path);
  detail::record_volume_files(result.inputs, label_path);
  detail::ImageSource source = detail::open_image_source(config);
  for (const std::string& path : source.inputs) result.inputs.push_back(path);
  if (source.shape != labels.shape()) {
    throw FormatError("image shape " + source.shape.str() +
                      " does not match label shape " + labels.shape().str());
  }

  const Vec3 window = detail::config_vec3(config, "DATASET.SAMPLE_SIZE");
  try {
    detail::check_window_fits(labels.shape(), window);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("DATASET.SAMPLE_SIZE: ") + e.what());
  }
  const double reject_prob = config.float_at("DATASET.REJECT_PROB");
  if (!(reject_prob >= 0.0 && reject_prob < 1.0)) {
    throw ConfigError("DATASET.REJECT_PROB must be in [0, 1)");
  }
  const std::int64_t max_attempts = config.int_at("DATASET.REJECT_MAX_ATTEMPTS");
  if (max_attempts < 1) {
    throw ConfigError("DATASET.REJECT_MAX_ATTEMPTS must be >= 1");
  }
  const std::int64_t min_foreground =
      config.int_at("DATASET.REJECT_MIN_FOREGROUND");
  const std::uint64_t seed =
      static_cast<std::uint64_t>(config.int_at("SYSTEM.SEED"));
  const std::vector<AugmentSpec> augments = make_augment_specs(config);

  std::int64_t total_attempts = 0;
  std::int64_t regions_dropped = 0;
  std::int64_t transpose_skips = 0;
  nlohmann::json draws = nlohmann::json::array();
  for (std::int64_t i = 0; i < count; ++i) {
    const SampleDraw draw = rejection_sample(
        seed, static_cast<std::uint64_t>(2 * i), labels, window, reject_prob,
        static_cast<int>(std::min<std::int64_t>(max_attempts, 1000000)),
        min_foreground);
    SamplePair pair{source.loader(draw.position), crop(labels, draw.position)};
    CounterRng rng(seed, static_cast<std::uint64_t>(2 * i + 1));
    AugmentReport aug_report;
    pair = apply_augmentations(rng, std::move(pair), augments, &aug_report);
    regions_dropped += aug_report.missing_part_regions_dropped;
    transpose_skips += aug_report.transpose_skipped_nonsquare ? 1 : 0;

    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%04lld",
                  static_cast<long long>(i));
    const std::string image_base =
        detail::join_path(out_dir, std::string(stem) + "_image");
    const std::string label_base =
        detail::join_path(out_dir, std::string(stem) + "_label");
    write_volume(pair.image, image_base);
    write_volume(pair.label, label_base);
    result.outputs.push_back(image_base + ".json");
    result.outputs.push_back(image_base + ".raw");
    result.outputs.push_back(label_base + ".json");
    result.outputs.push_back(label_base + ".raw");

    total_attempts += draw.attempts;
    draws.push_back({{"index", i},
                     {"origin", detail::vec3_to_json(draw.position.origin)},
                     {"attempts", draw.attempts}});
  }
  for (const std::string& tile : *source.touched) {
    result.inputs.push_back(tile);
  }

  result.details["samples"] = count;
  result.details["total_attempts"] = total_attempts;
  result.details["mean_attempts"] =
      count > 0 ? static_cast<double>(total_attempts) /
                      static_cast<double>(count)
                : 0.0;
  result.details["missing_part_regions_dropped"] = regions_dropped;
  result.details["transpose_skipped_nonsquare"] = transpose_skips;
  result.details["draws"] = draws;
  std::ostringstream text;
  text << "wrote " << count << " sample pair" << (count == 1 ? "" : "s")
       << " to " << out_dir;
  if (count > 0) {
    text << " (mean attempts "
         << static_cast<double>(total_attempts) / static_cast<double>(count)
         << ")";
  }
  result.text = text.str();
  return result;
}

// Encodes the label volume into the configured target stack and writes it
// as one multichannel file whose header names each channel's target kind.
inline StageResult cmd_encode(const PipelineConfig& config) {
  StageResult result;
  const std::string out_dir = detail::output_dir(config);
  const std::string label_path = config.str_at("DATASET.LABEL_PATH");
  if (label_path.empty()) {
    throw ConfigError("DATASET.LABEL_PATH must be set for target encoding");
  }
  const LabelVolume labels = read_volume_as<std::uint32_t>(label_path);
  detail::record_volume_files(result.inputs, label_path);

  const std::vector<TargetSpec> specs = make_target_specs(config);
  const TargetStack stack = encode_targets(labels, specs);

  nlohmann::json kinds = nlohmann::json::array();
  for (TargetKind kind : stack.kinds) kinds.push_back(target_kind_name(kind));
  nlohmann::json extra;
  extra["target_kinds"] = kinds;
  extra["signed_distance_degenerate"] = stack.signed_distance_degenerate;

  const std::string base = detail::join_path(out_dir, "targets");
  write_multichannel(stack.channels, base, extra);
  result.outputs.push_back(base + ".json");
  result.outputs.push_back(base + ".raw");

  result.details["channels"] = stack.channels.channels();
  result.details["target_kinds"] = kinds;
  result.details["signed_distance_degenerate"] =
      stack.signed_distance_degenerate;
  std::ostringstream text;
  text << "encoded " << stack.channels.channels() << " target channel"
       << (stack.channels.channels() == 1 ? "" : "s") << " (";
  for (std::size_t c = 0; c < stack.kinds.size(); ++c) {
    text << (c > 0 ? ", " : "") << target_kind_name(stack.kinds[c]);
  }
  text << ") to " << base << ".json";
  result.text = text.str();
  return result;
}

// Runs sliding window inference over the image source, either in memory or
// chunk by chunk with restart-safe intermediate files, and writes the
// blended prediction volume.
inline StageResult cmd_infer(const PipelineConfig& config) {
  StageResult result;
  const std::string out_dir = detail::output_dir(config);
  detail::ImageSource source = detail::open_image_source(config);
  for (const std::string& path : source.inputs) result.inputs.push_back(path);
  const InferenceOptions opts = make_inference_options(config);
  std::unique_ptr<Predictor> predictor = make_predictor(config);
  if (config.str_at("INFERENCE.PREDICTOR") == "file") {
    detail::record_volume_files(result.inputs,
                                config.str_at("INFERENCE.PREDICTOR_ENDPOINT"));
  }

  const std::string out_base =
      detail::join_path(out_dir, config.str_at("INFERENCE.OUTPUT_NAME"));
  MultichannelVolume prediction;
  if (config.bool_at("INFERENCE.CHUNKED")) {
    ChunkPlan plan;
    try {
      plan = make_chunk_plan(
          source.shape, detail::config_vec3(config, "DATASET.CHUNK_SIZE"),
          detail::config_vec3(config, "DATASET.CHUNK_OVERLAP"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("DATASET chunk plan: ") + e.what());
    }
    const std::string chunk_dir = detail::join_path(out_dir, "chunks");
    const ChunkRunReport run =
        run_chunked_inference(plan, source.loader, *predictor, opts, chunk_dir);
    if (!run.failures.empty()) {
      std::ostringstream msg;
      msg << "chunk inference failed for";
      for (const auto& [id, error] : run.failures) {
        msg << " " << id << " (" << error << ")";
      }
      throw IoError(msg.str());
    }
    StitchReport stitch;
    prediction = merge_chunks(plan, chunk_dir, opts.blend, &stitch);
    for (const BoundingBox& box : plan.chunks) {
      const std::string base = detail::chunk_base_path(chunk_dir, box.id());
      result.outputs.push_back(base + ".json");
      result.outputs.push_back(base + ".raw");
    }
    result.details["chunked"] = true;
    result.details["chunks"] = plan.chunks.size();
    result.details["chunks_computed"] = run.completed.size();
    result.details["chunks_skipped"] = run.skipped.size();
    result.details["uncovered_voxels"] = stitch.uncovered_voxels;
  } else {
    const ImageVolume image =
        source.loader(BoundingBox{{0, 0, 0}, source.shape});
    InferenceReport report;
    prediction = run_sliding_inference(image, *predictor, opts, &report);
    result.details["chunked"] = false;
    result.details["windows"] = report.windows;
    result.details["clamped_values"] = report.clamped_values;
    result.details["uncovered_voxels"] = report.uncovered_voxels;
    result.details["padded"] = report.padded;
    result.details["tta_transpose_skipped"] = report.tta_transpose_skipped;
  }
  write_multichannel(prediction, out_base);
  result.outputs.push_back(out_base + ".json");
  result.outputs.push_back(out_base + ".raw");
  for (const std::string& tile : *source.touched) {
    result.inputs.push_back(tile);
  }

  std::ostringstream text;
  text << "wrote " << prediction.channels() << " channel prediction of shape "
       << prediction.shape().str() << " to " << out_base << ".json";
  result.text = text.str();
  return result;
}

// Decodes a prediction volume into labels: plain thresholding in semantic
// mode, seeded watershed growth in the bc and bcd instance modes.
inline StageResult cmd_decode(const PipelineConfig& config) {
  StageResult result;
  const std::string out_dir = detail::output_dir(config);
  std::string input = config.str_at("DECODE.INPUT_PATH");
  if (input.empty()) {
    input = detail::join_path(out_dir, config.str_at("INFERENCE.OUTPUT_NAME"));
  }
  MultichannelVolume prediction = read_multichannel(input);
  detail::record_volume_files(result.inputs, input);

  if (config.bool_at("DECODE.MEDIAN_ENABLED")) {
    const Vec3 kernel = detail::config_vec3(config, "DECODE.MEDIAN_KERNEL");
    for (int a = 0; a < 3; ++a) {
      if (kernel[a] < 1 || kernel[a] % 2 == 0) {
        throw ConfigError("DECODE.MEDIAN_KERNEL extents must be odd and >= 1");
      }
    }
    std::vector<ProbVolume> filtered;
    for (std::int64_t c = 0; c < prediction.channels(); ++c) {
      filtered.push_back(median_filter(prediction.extract_channel(c), kernel));
    }
    prediction = MultichannelVolume::from_channels(filtered);
  }

  const std::string mode = config.str_at("DECODE.MODE");
  LabelVolume labels;
  if (mode == "semantic") {
    const double theta = config.float_at("DECODE.SEMANTIC_THRESHOLD");
    if (!(theta >= 0.0 && theta <= 1.0)) {
      throw ConfigError("DECODE.SEMANTIC_THRESHOLD must be in [0, 1]");
    }
    labels =
        threshold(prediction.extract_channel(0), static_cast<float>(theta));
    std::int64_t foreground = 0;
    for (std::uint32_t v : labels.data()) foreground += v != 0 ? 1 : 0;
    result.details["mode"] = mode;
    result.details["foreground_voxels"] = foreground;
  } else if (mode == "bc" || mode == "bcd") {
    const std::int64_t needed = mode == "bc" ? 2 : 3;
    if (prediction.channels() < needed) {
      throw std::invalid_argument(
          mode + " decoding needs " + std::to_string(needed) +
          " channels (mask, contour" +
          (mode == "bcd" ? ", distance" : std::string()) + "), got " +
          std::to_string(prediction.channels()));
    }
    const DecodeParams params = make_decode_params(config);
    const DecodeResult decoded =
        mode == "bc"
            ? bc_watershed(prediction.extract_channel(0),
                           prediction.extract_channel(1), params)
            : bcd_watershed(prediction.extract_channel(0),
                            prediction.extract_channel(1),
                            prediction.extract_channel(2), params);
    labels = decoded.labels;
    result.details["mode"] = mode;
    result.details["num_instances"] = decoded.num_instances;
    result.details["no_seeds"] = decoded.no_seeds;
  } else {
    throw ConfigError("unknown DECODE.MODE \"" + mode +
                      "\", expected semantic|bc|bcd");
  }

  const std::string base =
      detail::join_path(out_dir, config.str_at("DECODE.OUTPUT_NAME"));
  write_volume(labels, base);
  result.outputs.push_back(base + ".json");
  result.outputs.push_back(base + ".raw");

  std::ostringstream text;
  text << mode << " decode of " << input << " -> " << base << ".json";
  if (result.details.contains("num_instances")) {
    text << " (" << result.details["num_instances"].get<std::int64_t>()
         << " instances)";
  }
  result.text = text.str();
  return result;
}

// Scores one or more prediction label volumes against ground truth and
// writes the per-volume and aggregate report. EVAL.PRED_PATH and
// EVAL.GT_PATH are comma separated lists of equal length; report rows take
// their names from the prediction file stems.
inline StageResult cmd_eval(const PipelineConfig& config) {
  StageResult result;
  const std::string out_dir = detail::output_dir(config);
  const std::vector<std::string> pred_paths =
      detail::split_comma_list(config.str_at("EVAL.PRED_PATH"));
  const std::vector<std::string> gt_paths =
      detail::split_comma_list(config.str_at("EVAL.GT_PATH"));
  if (pred_paths.empty()) {
    throw ConfigError("EVAL.PRED_PATH must list at least one volume");
  }
  if (pred_paths.size() != gt_paths.size()) {
    throw ConfigError(
        "EVAL.PRED_PATH and EVAL.GT_PATH must list the same number of "
        "volumes, got " + std::to_string(pred_paths.size()) + " and " +
        std::to_string(gt_paths.size()));
  }
  for (const std::string& path : pred_paths) {
    if (path.empty()) throw ConfigError("EVAL.PRED_PATH has an empty entry");
  }
  for (const std::string& path : gt_paths) {
    if (path.empty()) throw ConfigError("EVAL.GT_PATH has an empty entry");
  }

  bool want_iou = false;
  bool want_ap = false;
  bool want_cremi = false;
  const std::vector<std::string> metric_names =
      config.str_list_at("EVAL.METRICS");
  if (metric_names.empty()) {
    throw ConfigError("EVAL.METRICS must list at least one metric");
  }
  for (const std::string& name : metric_names) {
    if (name == "iou") {
      want_iou = true;
    } else if (name == "ap") {
      want_ap = true;
    } else if (name == "cremi") {
      want_cremi = true;
    } else {
      throw ConfigError("unknown metric \"" + name +
                        "\", expected iou|ap|cremi");
    }
  }
  const std::vector<double> thresholds =
      config.float_list_at("EVAL.AP_THRESHOLDS");

  std::vector<VolumeMetrics> volumes;
  for (std::size_t i = 0; i < pred_paths.size(); ++i) {
    const LabelVolume pred = read_volume_as<std::uint32_t>(pred_paths[i]);
    const LabelVolume gt = read_volume_as<std::uint32_t>(gt_paths[i]);
    detail::record_volume_files(result.inputs, pred_paths[i]);
    detail::record_volume_files(result.inputs, gt_paths[i]);

    VolumeMetrics vm;
    vm.name = std::filesystem::path(detail::strip_json_suffix(pred_paths[i]))
                  .filename()
                  .string();
    if (want_iou) {
      const SemanticIou iou = iou_semantic(pred, gt);
      vm.fg_iou = iou.fg_iou;
      vm.iou = iou.overall_iou;
      vm.degenerate = vm.degenerate || iou.degenerate;
    }
    if (want_ap) {
      const InstanceApResult ap = instance_ap(pred, gt, thresholds);
      vm.ap = ap.ap;
      vm.degenerate = vm.degenerate || ap.degenerate;
    }
    if (want_cremi) {
      const CremiScores cremi = cremi_scores(pred, gt);
      vm.adgt = cremi.adgt;
      vm.adf = cremi.adf;
      vm.cremi = cremi.score;
      vm.degenerate = vm.degenerate || cremi.degenerate;
    }
    volumes.push_back(std::move(vm));
  }

  const MetricReport report = make_metric_report(volumes);
  const nlohmann::json j = metric_report_to_json(report);
  const std::string metrics_path = detail::join_path(out_dir, "metrics.json");
  const std::string text = j.dump(2) + "\n";
  detail::write_file_bytes(metrics_path, text.data(), text.size());
  result.outputs.push_back(metrics_path);
  result.details = j;
  result.text = format_metric_table(report);
  return result;
}

// Exports one volume as a stack of PGM slice images for visual inspection.
// Multichannel inputs select EXPORT.CHANNEL first; label volumes are not
// exportable because their ids have no grayscale meaning.
inline StageResult cmd_export(const PipelineConfig& config) {
  StageResult result;
  const std::string input = config.str_at("EXPORT.INPUT_PATH");
  if (input.empty()) throw ConfigError("EXPORT.INPUT_PATH must be set");
  const std::string dir = config.str_at("EXPORT.DIR");
  const std::int64_t axis = config.int_at("EXPORT.AXIS");
  if (axis < 0 || axis > 2) {
    throw ConfigError("EXPORT.AXIS must be 0 (z), 1 (y), or 2 (x), got " +
                      std::to_string(axis));
  }

  const std::string base = detail::strip_json_suffix(input);
  const nlohmann::json header = read_volume_header(base);
  detail::record_volume_files(result.inputs, input);

  std::vector<std::string> files;
  if (header.contains("channels")) {
    const MultichannelVolume volume = read_multichannel(input);
    const std::int64_t channel = config.int_at("EXPORT.CHANNEL");
    if (channel < 0 || channel >= volume.channels()) {
      throw std::out_of_range("EXPORT.CHANNEL " + std::to_string(channel) +
                              " is out of range for " +
                              std::to_string(volume.channels()) +
                              " channel volume " + input);
    }
    files = export_slices(volume.extract_channel(channel), dir,
                          static_cast<int>(axis));
  } else {
    const AnyVolume any = read_volume(input);
    files = std::visit(
        [&](const auto& volume) -> std::vector<std::string> {
          using V = std::decay_t<decltype(volume)>;
          if constexpr (std::is_same_v<V, LabelVolume>) {
            throw std::invalid_argument(
                "slice export supports u8 and f32 volumes; " + input +
                " holds u32 labels");
          } else {
            return export_slices(volume, dir, static_cast<int>(axis));
          }
        },
        any);
  }
  result.outputs = files;
  result.details["slices"] = files.size();
  result.details["directory"] = dir;
  result.details["axis"] = axis;
  std::ostringstream text;
  text << "exported " << files.size() << " slice"
       << (files.size() == 1 ? "" : "s") << " to " << dir;
  result.text = text.str();
  return result;
}

}  // namespace volseg

#endif  // VOLSEG_PIPELINE_HPP_
