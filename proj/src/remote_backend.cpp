// Copyright 2026 The TILscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "tilscore/error.hpp"
#include "tilscore/inference.hpp"
#include "tilscore/protocol.hpp"

extern char** environ;

namespace tilscore {

namespace {

using protocol::Task;

/// Correlates requests and responses by id over one bidirectional socket
/// wired to the child's stdin and stdout.
class SubprocessBackend final : public Backend {
 public:
  SubprocessBackend(const std::string& command, double timeout_s)
      : timeout_(std::chrono::duration<double>(timeout_s)) {
    int sv[2];
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      Fail(ErrorKind::kBackendUnavailable,
           std::string("socketpair: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDOUT_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr,
                               const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(sv[1]);
    if (rc != 0) {
      close(sv[0]);
      Fail(ErrorKind::kBackendUnavailable,
           "cannot start '" + command + "': " + std::strerror(rc));
    }
    fd_ = sv[0];
    reader_ = std::thread([this] { read_loop(); });
  }

  ~SubprocessBackend() override {
    shutdown(fd_, SHUT_WR);
    // Give the child a moment to drain and exit on EOF.
    bool exited = false;
    for (int i = 0; i < 200 && !exited; ++i) {
      int status = 0;
      exited = waitpid(pid_, &status, WNOHANG) == pid_;
      if (!exited) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!exited) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
    shutdown(fd_, SHUT_RD);
    if (reader_.joinable()) reader_.join();
    close(fd_);
  }

  ClassProbs classify(const PatchRef& ref, const PixelBuffer& patch) override {
    const std::string id = next_id(ref);
    const std::string reply =
        call(id, protocol::EncodeRequest(id, Task::kClassify, patch, ref.mpp));
    return protocol::DecodeClassifyResponse(reply).probs;
  }

  std::vector<CellInstance> quantify(const PatchRef& ref,
                                     const PixelBuffer& patch) override {
    const std::string id = next_id(ref);
    const std::string reply =
        call(id, protocol::EncodeRequest(id, Task::kQuantify, patch, ref.mpp));
    return protocol::DecodeQuantifyResponse(reply).cells;
  }

 private:
  std::string next_id(const PatchRef& ref) {
    return ref.id() + "#" + std::to_string(seq_.fetch_add(1));
  }

  std::string call(const std::string& id, std::string line) {
    std::future<std::string> reply;
    {
      std::lock_guard lock(mu_);
      if (dead_) Fail(ErrorKind::kBackendUnavailable, "backend process exited");
      reply = pending_[id].get_future();
    }
    line += '\n';
    {
      std::lock_guard lock(write_mu_);
      std::size_t off = 0;
      while (off < line.size()) {
        const ssize_t n =
            send(fd_, line.data() + off, line.size() - off, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
          forget(id);
          Fail(ErrorKind::kBackendUnavailable,
               std::string("write to backend failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
      }
    }
    if (reply.wait_for(timeout_) != std::future_status::ready) {
      forget(id);
      Fail(ErrorKind::kBackendUnavailable, "backend timed out on " + id);
    }
    return reply.get();
  }

  void forget(const std::string& id) {
    std::lock_guard lock(mu_);
    pending_.erase(id);
  }

  void fail_all(ErrorKind kind, const std::string& why) {
    std::lock_guard lock(mu_);
    for (auto& [id, promise] : pending_) {
      promise.set_exception(std::make_exception_ptr(Error(kind, why)));
    }
    pending_.clear();
  }

  void dispatch(const std::string& line) {
    std::string id;
    try {
      id = protocol::PeekId(line);
    } catch (const Error& e) {
      // A reply that cannot be routed poisons every outstanding request.
      fail_all(ErrorKind::kProtocol, e.what());
      return;
    }
    std::lock_guard lock(mu_);
    const auto it = pending_.find(id);
    if (it == pending_.end()) return;  // late reply after a timeout
    it->second.set_value(line);
    pending_.erase(it);
  }

  void read_loop() {
    std::string buffer;
    char chunk[65536];
    for (;;) {
      const ssize_t n = recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos;
           start = nl + 1) {
        if (nl > start) dispatch(buffer.substr(start, nl - start));
      }
      buffer.erase(0, start);
    }
    {
      std::lock_guard lock(mu_);
      dead_ = true;
    }
    fail_all(ErrorKind::kBackendUnavailable, "backend process closed its output");
  }

  std::chrono::duration<double> timeout_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::thread reader_;
  std::mutex mu_;
  std::mutex write_mu_;
  std::map<std::string, std::promise<std::string>> pending_;
  bool dead_ = false;
  std::atomic<std::uint64_t> seq_{0};
};

class HttpBackend final : public Backend {
 public:
  HttpBackend(const std::string& url, double timeout_s) : timeout_s_(timeout_s) {
    const auto scheme = url.find("://");
    const auto path_start =
        url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (scheme == std::string::npos || url.substr(0, scheme) != "http") {
      Fail(ErrorKind::kConfig, "http backend url must start with http://");
    }
    host_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  ClassProbs classify(const PatchRef& ref, const PixelBuffer& patch) override {
    const std::string reply = post(
        protocol::EncodeRequest(ref.id(), Task::kClassify, patch, ref.mpp));
    return protocol::DecodeClassifyResponse(reply).probs;
  }

  std::vector<CellInstance> quantify(const PatchRef& ref,
                                     const PixelBuffer& patch) override {
    const std::string reply = post(
        protocol::EncodeRequest(ref.id(), Task::kQuantify, patch, ref.mpp));
    return protocol::DecodeQuantifyResponse(reply).cells;
  }

 private:
  std::string post(const std::string& body) {
    httplib::Client client(host_);
    const auto secs = static_cast<time_t>(timeout_s_);
    const auto usecs = static_cast<time_t>((timeout_s_ - secs) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      Fail(ErrorKind::kBackendUnavailable,
           host_ + path_ + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      Fail(ErrorKind::kProtocol,
           host_ + path_ + " answered HTTP " + std::to_string(res->status));
    }
    return res->body;
  }

  double timeout_s_;
  std::string host_;
  std::string path_;
};

}  // namespace

std::unique_ptr<Backend> MakeSubprocessBackend(const std::string& command,
                                               double timeout_s) {
  return std::make_unique<SubprocessBackend>(command, timeout_s);
}

std::unique_ptr<Backend> MakeHttpBackend(const std::string& url,
                                         double timeout_s) {
  return std::make_unique<HttpBackend>(url, timeout_s);
}

}  // namespace tilscore
