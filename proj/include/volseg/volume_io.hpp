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

#ifndef VOLSEG_VOLUME_IO_HPP_
#define VOLSEG_VOLUME_IO_HPP_

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "volseg/errors.hpp"
#include "volseg/volume.hpp"

namespace volseg {

static_assert(std::endian::native == std::endian::little,
              "volume payloads are little-endian; big-endian hosts are unsupported");

// Volume files are a pair: `name.json` header + `name.raw` row-major
// little-endian payload, x fastest. Multichannel stacks add a "channels"
// header field and store channels contiguously, channel-major.

namespace detail {

inline std::string strip_json_suffix(const std::string& path) {
  const std::string suffix = ".json";
  if (path.size() > suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return path.substr(0, path.size() - suffix.size());
  }
  return path;
}

inline std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(bytes.data(), size);
  if (!in) throw IoError("failed reading file: " + path);
  return bytes;
}

inline void write_file_bytes(const std::string& path, const void* data,
                             std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("failed writing file: " + path);
}

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& field,
                       const std::string& path) {
  if (!j.contains(field) || !j[field].is_array() || j[field].size() != 3) {
    throw FormatError("header field \"" + field + "\" must be a 3-element array: " + path);
  }
  return Vec3{j[field][0].get<std::int64_t>(), j[field][1].get<std::int64_t>(),
              j[field][2].get<std::int64_t>()};
}

inline Vec3d parse_vec3d(const nlohmann::json& j, const std::string& field,
                         const std::string& path) {
  if (!j.contains(field) || !j[field].is_array() || j[field].size() != 3) {
    throw FormatError("header field \"" + field + "\" must be a 3-element array: " + path);
  }
  return Vec3d{j[field][0].get<double>(), j[field][1].get<double>(),
               j[field][2].get<double>()};
}

}  // namespace detail

inline nlohmann::json read_volume_header(const std::string& path) {
  const std::string base = detail::strip_json_suffix(path);
  const std::string header_path = base + ".json";
  const auto bytes = detail::read_file_bytes(header_path);
  nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr,
                                           /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw FormatError("header is not valid JSON: " + header_path);
  }
  return j;
}

template <typename T>
void write_volume(const Volume<T>& volume, const std::string& path,
                  const nlohmann::json& extra_fields = nlohmann::json::object()) {
  const std::string base = detail::strip_json_suffix(path);
  nlohmann::json header = extra_fields;
  header["shape"] = {volume.shape().z, volume.shape().y, volume.shape().x};
  header["dtype"] = dtype_name(volume.dtype());
  header["resolution_nm"] = {volume.resolution().z, volume.resolution().y,
                             volume.resolution().x};
  const std::string text = header.dump(2) + "\n";
  detail::write_file_bytes(base + ".json", text.data(), text.size());
  detail::write_file_bytes(base + ".raw", volume.data().data(),
                           volume.voxels() * sizeof(T));
}

inline void write_volume_any(const AnyVolume& volume, const std::string& path,
                             const nlohmann::json& extra = nlohmann::json::object()) {
  std::visit([&](const auto& v) { write_volume(v, path, extra); }, volume);
}

inline AnyVolume read_volume(const std::string& path) {
  const std::string base = detail::strip_json_suffix(path);
  const nlohmann::json header = read_volume_header(base);
  const Vec3 shape = detail::parse_vec3(header, "shape", base + ".json");
  const Vec3d res = detail::parse_vec3d(header, "resolution_nm", base + ".json");
  if (!header.contains("dtype") || !header["dtype"].is_string()) {
    throw FormatError("header missing \"dtype\": " + base + ".json");
  }
  const std::string dtype = header["dtype"].get<std::string>();
  if (header.contains("channels") && header["channels"].get<std::int64_t>() != 1) {
    throw FormatError("multichannel file read with read_volume, use read_multichannel: " +
                      base + ".json");
  }

  const auto payload = detail::read_file_bytes(base + ".raw");
  const auto check_size = [&](std::size_t elem) {
    const std::size_t expected = static_cast<std::size_t>(shape.voxels()) * elem;
    if (payload.size() != expected) {
      throw FormatError("payload size mismatch for " + base + ".raw: expected " +
                        std::to_string(expected) + " bytes, found " +
                        std::to_string(payload.size()) + " bytes");
    }
  };

  if (dtype == "u8") {
    check_size(1);
    std::vector<std::uint8_t> data(payload.begin(), payload.end());
    return ImageVolume(shape, res, std::move(data));
  }
  if (dtype == "u32") {
    check_size(4);
    std::vector<std::uint32_t> data(static_cast<std::size_t>(shape.voxels()));
    std::memcpy(data.data(), payload.data(), payload.size());
    return LabelVolume(shape, res, std::move(data));
  }
  if (dtype == "f32") {
    check_size(4);
    std::vector<float> data(static_cast<std::size_t>(shape.voxels()));
    std::memcpy(data.data(), payload.data(), payload.size());
    return ProbVolume(shape, res, std::move(data));
  }
  throw FormatError("unknown dtype tag \"" + dtype + "\" in " + base + ".json");
}

template <typename T>
Volume<T> read_volume_as(const std::string& path) {
  AnyVolume any = read_volume(path);
  if (auto* v = std::get_if<Volume<T>>(&any)) return std::move(*v);
  throw FormatError("volume " + path + " has dtype " +
                    dtype_name(dtype_of_any(any)) + ", expected " +
                    dtype_name(dtype_of<T>()));
}

inline void write_multichannel(const MultichannelVolume& volume,
                               const std::string& path,
                               const nlohmann::json& extra_fields = nlohmann::json::object()) {
  const std::string base = detail::strip_json_suffix(path);
  nlohmann::json header = extra_fields;
  header["shape"] = {volume.shape().z, volume.shape().y, volume.shape().x};
  header["dtype"] = "f32";
  header["resolution_nm"] = {volume.resolution().z, volume.resolution().y,
                             volume.resolution().x};
  header["channels"] = volume.channels();
  const std::string text = header.dump(2) + "\n";
  detail::write_file_bytes(base + ".json", text.data(), text.size());
  detail::write_file_bytes(base + ".raw", volume.data().data(),
                           volume.data().size() * sizeof(float));
}

inline MultichannelVolume read_multichannel(const std::string& path) {
  const std::string base = detail::strip_json_suffix(path);
  const nlohmann::json header = read_volume_header(base);
  const Vec3 shape = detail::parse_vec3(header, "shape", base + ".json");
  const Vec3d res = detail::parse_vec3d(header, "resolution_nm", base + ".json");
  const std::string dtype = header.value("dtype", "");
  if (dtype != "f32") {
    throw FormatError("multichannel volumes must be f32, got \"" + dtype +
                      "\" in " + base + ".json");
  }
  const std::int64_t channels = header.value("channels", std::int64_t{1});
  if (channels < 1) throw FormatError("invalid channel count in " + base + ".json");

  const auto payload = detail::read_file_bytes(base + ".raw");
  const std::size_t expected =
      static_cast<std::size_t>(channels * shape.voxels()) * sizeof(float);
  if (payload.size() != expected) {
    throw FormatError("payload size mismatch for " + base + ".raw: expected " +
                      std::to_string(expected) + " bytes, found " +
                      std::to_string(payload.size()) + " bytes");
  }
  MultichannelVolume out(channels, shape, res);
  std::memcpy(out.data().data(), payload.data(), payload.size());
  return out;
}

// --- PGM (binary P5, maxval 255) ---

inline void write_pgm(const std::string& path, std::int64_t width,
                      std::int64_t height, std::span<const std::uint8_t> pixels) {
  std::string header = "P5\n" + std::to_string(width) + " " +
                       std::to_string(height) + "\n255\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open PGM for writing: " + path);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("failed writing PGM: " + path);
}

struct PgmImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> pixels;
};

inline PgmImage read_pgm(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  std::size_t pos = 0;
  const auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_token = [&]() -> std::string {
    skip_ws();
    std::string tok;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      tok.push_back(bytes[pos++]);
    }
    return tok;
  };
  if (read_token() != "P5") throw FormatError("not a binary PGM (P5): " + path);
  PgmImage img;
  try {
    img.width = std::stoll(read_token());
    img.height = std::stoll(read_token());
    const long long maxval = std::stoll(read_token());
    if (maxval != 255) throw FormatError("PGM maxval must be 255: " + path);
  } catch (const std::logic_error&) {
    throw FormatError("malformed PGM header: " + path);
  }
  ++pos;  // single whitespace byte after maxval
  const std::size_t expected = static_cast<std::size_t>(img.width * img.height);
  if (bytes.size() - pos != expected) {
    throw FormatError("PGM payload size mismatch for " + path + ": expected " +
                      std::to_string(expected) + " bytes, found " +
                      std::to_string(bytes.size() - pos) + " bytes");
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

// Maps f32 in [0, 1] to u8 with round-half-away-from-zero so exports are
// reproducible: 0.5 -> 128.
inline std::uint8_t quantize_unit_to_u8(float v) {
  const float clamped = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0f + 0.5f));
}

// Writes one binary PGM per slice along `axis` (0=z, 1=y, 2=x), named
// slice_%04d.pgm. u8 volumes export as-is; f32 maps [0,1] -> [0,255].
template <typename T>
std::vector<std::string> export_slices(const Volume<T>& volume,
                                       const std::string& directory, int axis) {
  static_assert(std::is_same_v<T, std::uint8_t> || std::is_same_v<T, float>,
                "export_slices supports u8 and f32 volumes");
  if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1, or 2");
  if (directory.empty()) throw IoError("export directory path is empty");
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create export directory " + directory + ": " + ec.message());

  const Vec3 shape = volume.shape();
  const int a1 = axis == 0 ? 1 : 0;           // slower in-slice axis
  const int a2 = axis == 2 ? 1 : 2;           // faster in-slice axis
  const std::int64_t height = shape[a1];
  const std::int64_t width = shape[a2];

  std::vector<std::string> files;
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(height * width));
  for (std::int64_t s = 0; s < shape[axis]; ++s) {
    for (std::int64_t i = 0; i < height; ++i) {
      for (std::int64_t j = 0; j < width; ++j) {
        Vec3 p;
        p[axis] = s;
        p[a1] = i;
        p[a2] = j;
        const T v = volume.at(p);
        std::uint8_t q;
        if constexpr (std::is_same_v<T, float>) {
          q = quantize_unit_to_u8(v);
        } else {
          q = v;
        }
        pixels[static_cast<std::size_t>(i * width + j)] = q;
      }
    }
    char name[32];
    std::snprintf(name, sizeof(name), "slice_%04lld.pgm",
                  static_cast<long long>(s));
    const std::string path =
        (std::filesystem::path(directory) / name).string();
    write_pgm(path, width, height, pixels);
    files.push_back(path);
  }
  return files;
}

}  // namespace volseg

#endif  // VOLSEG_VOLUME_IO_HPP_
