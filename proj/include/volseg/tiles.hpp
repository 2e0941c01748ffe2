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
// Tile-backed volumes: a dataset too large for one file is described by a
// metadata record pointing at per-section tile grids, and regions are
// assembled on demand opening only the tiles a request intersects.

#ifndef VOLSEG_TILES_HPP_
#define VOLSEG_TILES_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "volseg/errors.hpp"
#include "volseg/volume.hpp"
#include "volseg/volume_io.hpp"

namespace volseg {

// Description of a tiled dataset: per z-section, a rows x cols grid of tile
// files, each holding one tile_extent slab of that section. The implied
// volume shape is (sections, rows * tile_y, cols * tile_x).
struct TileSetMetadata {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t tile_y = 0;
  std::int64_t tile_x = 0;
  Vec3d resolution{1, 1, 1};
  Dtype dtype = Dtype::U8;
  // sections[z] lists rows * cols tile paths in row-major order.
  std::vector<std::vector<std::string>> sections;
  // Directory of the metadata file; relative tile paths resolve against it.
  std::string base_dir;

  Vec3 implied_shape() const {
    return {static_cast<std::int64_t>(sections.size()), rows * tile_y,
            cols * tile_x};
  }
};

inline TileSetMetadata load_tile_metadata(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("malformed tile metadata " + path + ": " + e.what());
  }
  TileSetMetadata meta;
  try {
    const auto grid = doc.at("grid");
    meta.rows = grid.at(0).get<std::int64_t>();
    meta.cols = grid.at(1).get<std::int64_t>();
    const auto extent = doc.at("tile_extent");
    meta.tile_y = extent.at(0).get<std::int64_t>();
    meta.tile_x = extent.at(1).get<std::int64_t>();
    const auto res = doc.at("resolution_nm");
    meta.resolution = {res.at(0).get<double>(), res.at(1).get<double>(),
                       res.at(2).get<double>()};
    const std::string dtype = doc.at("dtype").get<std::string>();
    if (dtype == "u8") {
      meta.dtype = Dtype::U8;
    } else if (dtype == "u32") {
      meta.dtype = Dtype::U32;
    } else if (dtype == "f32") {
      meta.dtype = Dtype::F32;
    } else {
      throw FormatError("unknown dtype tag '" + dtype + "' in " + path);
    }
    for (const auto& section : doc.at("sections")) {
      meta.sections.push_back(section.get<std::vector<std::string>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed tile metadata " + path + ": " + e.what());
  }
  if (meta.rows < 1 || meta.cols < 1 || meta.tile_y < 1 || meta.tile_x < 1) {
    throw FormatError("tile metadata " + path +
                      ": grid and tile_extent must be positive");
  }
  if (meta.sections.empty()) {
    throw FormatError("tile metadata " + path + ": no sections");
  }
  for (std::size_t z = 0; z < meta.sections.size(); ++z) {
    if (meta.sections[z].size() !=
        static_cast<std::size_t>(meta.rows * meta.cols)) {
      throw FormatError("tile metadata " + path + ": section " +
                        std::to_string(z) + " lists " +
                        std::to_string(meta.sections[z].size()) +
                        " tiles, expected " +
                        std::to_string(meta.rows * meta.cols));
    }
  }
  meta.base_dir = std::filesystem::path(path).parent_path().string();
  return meta;
}

// Observer invoked with each tile path as it is opened. Tests inject a
// recorder to verify that only intersecting tiles are touched.
using TileAccessRecorder = std::function<void(const std::string& path)>;

namespace detail {

inline std::string resolve_tile_path(const TileSetMetadata& meta,
                                     const std::string& tile) {
  std::filesystem::path p(tile);
  if (p.is_absolute() || meta.base_dir.empty()) return tile;
  return (std::filesystem::path(meta.base_dir) / p).string();
}

template <typename T>
Volume<T> read_tile(const TileSetMetadata& meta, const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".pgm") {
    if constexpr (std::is_same_v<T, std::uint8_t>) {
      const PgmImage img = read_pgm(path);
      if (img.height != meta.tile_y || img.width != meta.tile_x) {
        throw FormatError("tile " + path + " is " + std::to_string(img.height) +
                          "x" + std::to_string(img.width) + ", expected " +
                          std::to_string(meta.tile_y) + "x" +
                          std::to_string(meta.tile_x));
      }
      return Volume<T>({1, meta.tile_y, meta.tile_x}, meta.resolution,
                       img.pixels);
    } else {
      throw FormatError("tile " + path + " is PGM (u8) but the tile set "
                        "declares dtype " + dtype_name(dtype_of<T>()));
    }
  }
  Volume<T> tile = read_volume_as<T>(path);
  if (tile.shape() != Vec3{1, meta.tile_y, meta.tile_x}) {
    throw FormatError("tile " + path + " has shape " + tile.shape().str() +
                      ", expected (1, " + std::to_string(meta.tile_y) + ", " +
                      std::to_string(meta.tile_x) + ")");
  }
  return tile;
}

template <typename T>
Volume<T> load_tile_region_t(const TileSetMetadata& meta,
                             const BoundingBox& box,
                             const TileAccessRecorder& recorder) {
  const Vec3 shape = meta.implied_shape();
  for (int a = 0; a < 3; ++a) {
    if (box.origin[a] < 0 || box.extent[a] < 1 ||
        box.origin[a] + box.extent[a] > shape[a]) {
      throw std::out_of_range(std::string("tile region out of range along axis ") +
                              axis_name(a));
    }
  }
  Volume<T> out(box.extent, meta.resolution);
  const std::int64_t r0 = box.origin.y / meta.tile_y;
  const std::int64_t r1 = (box.end().y - 1) / meta.tile_y;
  const std::int64_t c0 = box.origin.x / meta.tile_x;
  const std::int64_t c1 = (box.end().x - 1) / meta.tile_x;
  for (std::int64_t z = box.origin.z; z < box.end().z; ++z) {
    const auto& section = meta.sections[static_cast<std::size_t>(z)];
    for (std::int64_t r = r0; r <= r1; ++r) {
      for (std::int64_t c = c0; c <= c1; ++c) {
        const std::string path = resolve_tile_path(
            meta, section[static_cast<std::size_t>(r * meta.cols + c)]);
        if (recorder) recorder(path);
        const Volume<T> tile = read_tile<T>(meta, path);
        // Intersection of the request with this tile, in global coordinates.
        const std::int64_t y_lo = std::max(box.origin.y, r * meta.tile_y);
        const std::int64_t y_hi = std::min(box.end().y, (r + 1) * meta.tile_y);
        const std::int64_t x_lo = std::max(box.origin.x, c * meta.tile_x);
        const std::int64_t x_hi = std::min(box.end().x, (c + 1) * meta.tile_x);
        for (std::int64_t y = y_lo; y < y_hi; ++y) {
          for (std::int64_t x = x_lo; x < x_hi; ++x) {
            out.at(z - box.origin.z, y - box.origin.y, x - box.origin.x) =
                tile.at(0, y - r * meta.tile_y, x - c * meta.tile_x);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace detail

// Assembles the sub-volume covered by box, opening exactly the tiles that
// intersect it.
inline AnyVolume load_tile_region(const TileSetMetadata& meta,
                                  const BoundingBox& box,
                                  const TileAccessRecorder& recorder = nullptr) {
  switch (meta.dtype) {
    case Dtype::U8:
      return detail::load_tile_region_t<std::uint8_t>(meta, box, recorder);
    case Dtype::U32:
      return detail::load_tile_region_t<std::uint32_t>(meta, box, recorder);
    default:
      return detail::load_tile_region_t<float>(meta, box, recorder);
  }
}

}  // namespace volseg

#endif  // VOLSEG_TILES_HPP_
