// Copyright 2026 The SHED Authors
// SPDX-License-Identifier: Apache-2.0

#include "shed/command.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>

#include "shed/error.hpp"
#include "shed/text.hpp"

extern char** environ;

namespace shed {

namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::pair<Fd, Fd> make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::CommandFailed, std::string("pipe: ") + std::strerror(errno));
  }
  return {Fd(fds[0]), Fd(fds[1])};
}

std::string next_run_token() {
  static std::atomic<std::uint64_t> counter{0};
  return std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1) + 1);
}

// A reader that went away must surface as EPIPE, not kill the process.
void ignore_sigpipe_once() {
  static std::once_flag once;
  std::call_once(once, [] {
    struct sigaction current {};
    if (::sigaction(SIGPIPE, nullptr, &current) == 0 && current.sa_handler == SIG_DFL) {
      ::signal(SIGPIPE, SIG_IGN);
    }
  });
}

std::string describe(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& a : argv) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

}  // namespace

CommandOutput run_command(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout) {
  if (argv.empty()) throw Error(ErrorCode::CommandFailed, "empty command");
  ignore_sigpipe_once();

  auto [stdin_read, stdin_write] = make_pipe();
  auto [stdout_read, stdout_write] = make_pipe();

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const std::string run_id = std::string(kRunIdVariable) + "=" + next_run_token();
  std::vector<char*> env;
  for (char** e = environ; e && *e; ++e) {
    if (std::strncmp(*e, kRunIdVariable, std::strlen(kRunIdVariable)) == 0 &&
        (*e)[std::strlen(kRunIdVariable)] == '=') {
      continue;
    }
    env.push_back(*e);
  }
  env.push_back(const_cast<char*>(run_id.c_str()));
  env.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, stdin_read.get(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, stdout_write.get(), STDOUT_FILENO);
  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), env.data());
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw Error(ErrorCode::CommandFailed, "cannot start '" + describe(argv) + "': " + std::strerror(rc));
  }
  stdin_read.reset();
  stdout_write.reset();

  ::fcntl(stdin_write.get(), F_SETFL, ::fcntl(stdin_write.get(), F_GETFL) | O_NONBLOCK);
  ::fcntl(stdout_read.get(), F_SETFL, ::fcntl(stdout_read.get(), F_GETFL) | O_NONBLOCK);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t written = 0;
  if (input.empty()) stdin_write.reset();
  CommandOutput result;
  bool timed_out = false;
  char buf[4096];

  while (stdout_read.get() >= 0) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {stdout_read.get(), POLLIN, 0};
    if (stdin_write.get() >= 0) fds[nfds++] = {stdin_write.get(), POLLOUT, 0};
    const int ready = ::poll(fds, nfds, static_cast<int>(std::min<long long>(remaining, 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (nfds == 2 && fds[1].revents != 0) {
      if (fds[1].revents & POLLOUT) {
        const ssize_t n = ::write(stdin_write.get(), input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if ((n < 0 && errno != EAGAIN && errno != EINTR) || written == input.size()) stdin_write.reset();
      } else {
        stdin_write.reset();  // POLLERR / POLLHUP: reader closed its end
      }
    }
    if (fds[0].revents != 0) {
      const ssize_t n = ::read(stdout_read.get(), buf, sizeof buf);
      if (n > 0) {
        result.standard_output.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        stdout_read.reset();
      }
    }
  }
  stdin_write.reset();

  int status = 0;
  if (timed_out) {
    ::kill(pid, SIGKILL);
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    throw Error(ErrorCode::Timeout, "'" + describe(argv) + "' exceeded " +
                                        std::to_string(timeout.count()) + " ms");
  }
  // stdout is closed; the child may still be running. Keep honouring the deadline.
  for (;;) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) {
      throw Error(ErrorCode::CommandFailed, std::string("waitpid: ") + std::strerror(errno));
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      throw Error(ErrorCode::Timeout, "'" + describe(argv) + "' exceeded " +
                                          std::to_string(timeout.count()) + " ms");
    }
    ::usleep(1000);
  }
  if (WIFSIGNALED(status)) {
    throw Error(ErrorCode::CommandFailed,
                "'" + describe(argv) + "' killed by signal " + std::to_string(WTERMSIG(status)));
  }
  result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

double invoke_value_command(const std::vector<std::string>& argv, std::span<const std::string> ids,
                            std::chrono::milliseconds timeout) {
  std::string input;
  for (const auto& id : ids) {
    input += id;
    input += '\n';
  }
  const auto out = run_command(argv, input, timeout);
  if (out.exit_status != 0) {
    throw Error(ErrorCode::CommandFailed,
                "'" + describe(argv) + "' exited with status " + std::to_string(out.exit_status));
  }
  const auto value = parse_real(out.standard_output);
  if (!value || !std::isfinite(*value)) {
    throw Error(ErrorCode::MalformedScore, "'" + describe(argv) + "' printed '" +
                                               std::string(trim(out.standard_output)) +
                                               "', expected one finite decimal real");
  }
  return *value;
}

}  // namespace shed
