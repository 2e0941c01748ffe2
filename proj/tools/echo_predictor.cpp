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
// Reference child process for the subprocess predictor protocol. Reads
// framed windows from stdin and echoes them back on stdout unchanged.
//
// Fault-injection flags for harness tests:
//   --truncate  reply with only half of the advertised payload, then exit
//   --hang      read the request, then never reply

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

int main(int argc, char** argv) {
  bool truncate = false;
  bool hang = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--truncate") {
      truncate = true;
    } else if (arg == "--hang") {
      hang = true;
    } else {
      std::cerr << "echo_predictor: unknown flag " << arg << "\n";
      return 64;
    }
  }

  for (;;) {
    std::string line;
    if (!std::getline(std::cin, line)) return 0;
    if (line.empty()) continue;

    nlohmann::json header;
    try {
      header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "echo_predictor: bad header: " << e.what() << "\n";
      return 65;
    }
    if (!header.contains("shape") || !header["shape"].is_array() ||
        header["shape"].size() != 4) {
      std::cerr << "echo_predictor: header lacks a 4-element shape\n";
      return 65;
    }
    std::int64_t voxels = 1;
    bool all_zero = true;
    for (const auto& d : header["shape"]) {
      const std::int64_t v = d.get<std::int64_t>();
      if (v != 0) all_zero = false;
      if (v < 0) {
        std::cerr << "echo_predictor: negative shape entry\n";
        return 65;
      }
      voxels *= v;
    }
    if (all_zero) return 0;

    std::vector<char> payload(static_cast<std::size_t>(voxels) * sizeof(float));
    std::cin.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (std::cin.gcount() != static_cast<std::streamsize>(payload.size())) {
      std::cerr << "echo_predictor: short payload\n";
      return 66;
    }

    if (hang) {
      for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
    }

    nlohmann::json reply;
    reply["shape"] = header["shape"];
    reply["dtype"] = "f32";
    const std::string reply_line = reply.dump() + "\n";
    std::cout.write(reply_line.data(),
                    static_cast<std::streamsize>(reply_line.size()));
    const std::size_t reply_bytes = truncate ? payload.size() / 2 : payload.size();
    std::cout.write(payload.data(), static_cast<std::streamsize>(reply_bytes));
    std::cout.flush();
    if (truncate) return 0;
  }
}
