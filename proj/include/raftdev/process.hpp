// Copyright 2026 The raftdev Authors
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

#ifndef RAFTDEV_PROCESS_HPP_
#define RAFTDEV_PROCESS_HPP_

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace raftdev {

/// A supervised child. The destructor always reaps; an abrupt kill models a
/// server failure (no Bye, no flush), `terminate` asks politely first.
class ChildProcess {
 public:
  ChildProcess() = default;

  /// Forks and execs `argv[0]` with stdout/stderr appended to `log_path`
  /// (empty keeps the parent's).
  static ChildProcess spawn(const std::vector<std::string>& argv,
                            const std::string& log_path = "") {
    if (argv.empty()) throw std::invalid_argument("empty argv");
    pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      if (!log_path.empty()) {
        int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (fd >= 0) {
          ::dup2(fd, STDOUT_FILENO);
          ::dup2(fd, STDERR_FILENO);
          ::close(fd);
        }
      }
      std::vector<char*> args;
      for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      ::execv(args[0], args.data());
      ::_exit(127);
    }
    ChildProcess child;
    child.pid_ = pid;
    return child;
  }

  ChildProcess(ChildProcess&& other) noexcept : pid_(other.pid_) {
    other.pid_ = -1;
  }
  ChildProcess& operator=(ChildProcess&& other) noexcept {
    if (this != &other) {
      reap_hard();
      pid_ = other.pid_;
      other.pid_ = -1;
    }
    return *this;
  }
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() { reap_hard(); }

  pid_t pid() const { return pid_; }
  bool running() const {
    if (pid_ < 0) return false;
    return ::waitpid(pid_, nullptr, WNOHANG) == 0;
  }

  /// Abrupt termination (SIGKILL); the process gets no chance to clean up.
  bool kill_abrupt() {
    if (pid_ < 0) return false;
    bool was_running = running();
    ::kill(pid_, SIGKILL);
    reap(2000);
    return was_running;
  }

  /// SIGTERM, then SIGKILL if it lingers.
  void terminate(int grace_ms = 2000) {
    if (pid_ < 0) return;
    ::kill(pid_, SIGTERM);
    if (!reap(grace_ms)) {
      ::kill(pid_, SIGKILL);
      reap(2000);
    }
  }

 private:
  bool reap(int timeout_ms) {
    if (pid_ < 0) return true;
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
      pid_t r = ::waitpid(pid_, nullptr, WNOHANG);
      if (r == pid_ || (r < 0 && errno == ECHILD)) {
        pid_ = -1;
        return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
  }

  void reap_hard() {
    if (pid_ < 0) return;
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }

  pid_t pid_ = -1;
};

}  // namespace raftdev

#endif  // RAFTDEV_PROCESS_HPP_
