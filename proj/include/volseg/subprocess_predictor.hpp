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
// Runs an external model as a child process speaking a framed stream
// protocol. For every window the harness writes one header line
// {"shape":[c,z,y,x],"dtype":"f32"} followed by the raw little-endian f32
// payload; the child answers with the same framing. A header with shape
// [0,0,0,0] ends the session. Replies are awaited with a per-window
// timeout; a child that stalls or closes its stream mid-message raises
// SubprocessError rather than hanging the harness.
//
// Constructing a predictor installs a process-wide ignore for SIGPIPE so a
// write into a dead child surfaces as an error instead of killing the
// harness.

#ifndef VOLSEG_SUBPROCESS_PREDICTOR_HPP_
#define VOLSEG_SUBPROCESS_PREDICTOR_HPP_

#include <chrono>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "volseg/errors.hpp"
#include "volseg/predictor.hpp"
#include "volseg/volume.hpp"

namespace volseg {

inline constexpr int kDefaultSubprocessTimeoutMs = 60000;

class SubprocessPredictor : public Predictor {
 public:
  SubprocessPredictor(std::vector<std::string> command,
                      std::int64_t out_channels,
                      int timeout_ms = kDefaultSubprocessTimeoutMs)
      : command_(std::move(command)),
        channels_(out_channels),
        timeout_ms_(timeout_ms) {
    if (command_.empty()) {
      throw std::invalid_argument("subprocess command is empty");
    }
    if (channels_ < 1) {
      throw std::invalid_argument("subprocess channel count must be >= 1");
    }
    if (timeout_ms_ < 1) {
      throw std::invalid_argument("subprocess timeout must be >= 1 ms");
    }
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
    spawn();
  }

  ~SubprocessPredictor() override { shutdown(); }

  SubprocessPredictor(const SubprocessPredictor&) = delete;
  SubprocessPredictor& operator=(const SubprocessPredictor&) = delete;

  std::int64_t out_channels() const override { return channels_; }
  bool thread_safe() const override { return false; }

  MultichannelVolume predict(const MultichannelVolume& input,
                             const BoundingBox& box) override {
    if (pid_ < 0) {
      throw SubprocessError("subprocess is not running (failed earlier?)");
    }
    const Vec3& shape = input.shape();
    nlohmann::json header;
    header["shape"] = {input.channels(), shape.z, shape.y, shape.x};
    header["dtype"] = "f32";
    const std::string line = header.dump() + "\n";
    const char* context = box.id().c_str();
    write_all(line.data(), line.size(), context);
    write_all(input.data().data(), input.data().size() * sizeof(float),
              context);

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(timeout_ms_);
    const std::string reply_line = read_line(deadline, box.id());
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(reply_line);
    } catch (const nlohmann::json::exception& e) {
      fail();
      throw SubprocessError("malformed reply header for window " + box.id() +
                            ": " + e.what());
    }
    if (!reply.contains("shape") || !reply["shape"].is_array() ||
        reply["shape"].size() != 4) {
      fail();
      throw SubprocessError("reply header for window " + box.id() +
                            " lacks a 4-element shape");
    }
    const std::int64_t c = reply["shape"][0].get<std::int64_t>();
    const Vec3 out_shape{reply["shape"][1].get<std::int64_t>(),
                         reply["shape"][2].get<std::int64_t>(),
                         reply["shape"][3].get<std::int64_t>()};
    if (reply.value("dtype", "f32") != "f32") {
      fail();
      throw SubprocessError("reply dtype must be f32 for window " + box.id());
    }
    if (c < 1 || out_shape.z < 1 || out_shape.y < 1 || out_shape.x < 1) {
      fail();
      throw SubprocessError("reply shape is degenerate for window " +
                            box.id());
    }
    MultichannelVolume out(c, out_shape, input.resolution());
    read_exact(out.data().data(), out.data().size() * sizeof(float), deadline,
               box.id());
    return out;
  }

 private:
  void spawn() {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) {
      throw SubprocessError("pipe creation failed: " +
                            std::string(std::strerror(errno)));
    }
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw SubprocessError("pipe creation failed: " +
                            std::string(std::strerror(errno)));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      throw SubprocessError("fork failed: " +
                            std::string(std::strerror(errno)));
    }
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char*> argv;
      argv.reserve(command_.size() + 1);
      for (const std::string& arg : command_) {
        argv.push_back(const_cast<char*>(arg.c_str()));
      }
      argv.push_back(nullptr);
      ::execvp(argv[0], argv.data());
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    pid_ = pid;
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
  }

  void write_all(const void* data, std::size_t size, const std::string& context) {
    const char* p = static_cast<const char*>(data);
    std::size_t remaining = size;
    while (remaining > 0) {
      const ssize_t written = ::write(stdin_fd_, p, remaining);
      if (written < 0) {
        if (errno == EINTR) continue;
        const std::string reason = std::strerror(errno);
        fail();
        throw SubprocessError("write to subprocess failed for window " +
                              context + ": " + reason);
      }
      p += written;
      remaining -= static_cast<std::size_t>(written);
    }
  }

  // Waits until the child's output is readable or the deadline passes.
  void await_readable(std::chrono::steady_clock::time_point deadline,
                      const std::string& context) {
    const auto now = std::chrono::steady_clock::now();
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
            .count();
    if (left <= 0) {
      fail();
      throw SubprocessError("timed out after " + std::to_string(timeout_ms_) +
                            " ms waiting for prediction of window " + context);
    }
    struct pollfd pfd;
    pfd.fd = stdout_fd_;
    pfd.events = POLLIN;
    pfd.revents = 0;
    const int rc = ::poll(&pfd, 1, static_cast<int>(left));
    if (rc == 0) {
      fail();
      throw SubprocessError("timed out after " + std::to_string(timeout_ms_) +
                            " ms waiting for prediction of window " + context);
    }
    if (rc < 0 && errno != EINTR) {
      const std::string reason = std::strerror(errno);
      fail();
      throw SubprocessError("poll on subprocess failed: " + reason);
    }
  }

  std::string read_line(std::chrono::steady_clock::time_point deadline,
                        const std::string& context) {
    std::string line;
    char ch = 0;
    for (;;) {
      await_readable(deadline, context);
      const ssize_t got = ::read(stdout_fd_, &ch, 1);
      if (got < 0) {
        if (errno == EINTR) continue;
        const std::string reason = std::strerror(errno);
        fail();
        throw SubprocessError("read from subprocess failed: " + reason);
      }
      if (got == 0) {
        fail();
        throw SubprocessError(
            "subprocess closed its stream before replying for window " +
            context);
      }
      if (ch == '\n') return line;
      line.push_back(ch);
      if (line.size() > 65536) {
        fail();
        throw SubprocessError("reply header exceeds 64 KiB for window " +
                              context);
      }
    }
  }

  void read_exact(void* data, std::size_t size,
                  std::chrono::steady_clock::time_point deadline,
                  const std::string& context) {
    char* p = static_cast<char*>(data);
    std::size_t remaining = size;
    while (remaining > 0) {
      await_readable(deadline, context);
      const ssize_t got = ::read(stdout_fd_, p, remaining);
      if (got < 0) {
        if (errno == EINTR) continue;
        const std::string reason = std::strerror(errno);
        fail();
        throw SubprocessError("read from subprocess failed: " + reason);
      }
      if (got == 0) {
        fail();
        throw SubprocessError(
            "subprocess closed its stream mid-payload for window " + context +
            " (" + std::to_string(size - remaining) + " of " +
            std::to_string(size) + " bytes received)");
      }
      p += got;
      remaining -= static_cast<std::size_t>(got);
    }
  }

  // Tears down the pipes and reaps the child after a protocol violation;
  // later predict() calls fail fast instead of writing into a broken stream.
  void fail() {
    close_fds();
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void shutdown() {
    if (pid_ > 0 && stdin_fd_ >= 0) {
      const std::string terminator = "{\"shape\":[0,0,0,0],\"dtype\":\"f32\"}\n";
      // Best effort; the child may already be gone.
      (void)!::write(stdin_fd_, terminator.data(), terminator.size());
    }
    close_fds();
    if (pid_ > 0) {
      int status = 0;
      for (int attempt = 0; attempt < 20; ++attempt) {
        const pid_t done = ::waitpid(pid_, &status, WNOHANG);
        if (done == pid_ || done < 0) {
          pid_ = -1;
          return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void close_fds() {
    if (stdin_fd_ >= 0) {
      ::close(stdin_fd_);
      stdin_fd_ = -1;
    }
    if (stdout_fd_ >= 0) {
      ::close(stdout_fd_);
      stdout_fd_ = -1;
    }
  }

  std::vector<std::string> command_;
  std::int64_t channels_;
  int timeout_ms_;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
};

}  // namespace volseg

#endif  // VOLSEG_SUBPROCESS_PREDICTOR_HPP_
