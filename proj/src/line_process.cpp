#include "promptevo/line_process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "promptevo/error.hpp"

namespace promptevo {

LineProcess::LineProcess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw Error(ErrorCode::invalid_argument, "empty command line for child process");
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::io_error, "pipe failed");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorCode::io_error, "pipe failed");
  }
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw Error(ErrorCode::io_error, "fork failed");
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  // A child that dies must surface as EPIPE, not kill us.
  signal(SIGPIPE, SIG_IGN);
}

LineProcess::~LineProcess() { terminate(); }

void LineProcess::terminate() noexcept {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
}

void LineProcess::send(const nlohmann::json& message) {
  std::string line = message.dump() + "\n";
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t n = write(to_child_, line.data() + off, line.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io_error, std::string("write to child failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<nlohmann::json> LineProcess::receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      const std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        return nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::parse_error, "child emitted a non-JSON line: " + line.substr(0, 200));
      }
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (ready == 0) return std::nullopt;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return std::nullopt;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ProcessPool::ProcessPool(std::vector<std::string> argv, std::size_t size, std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), size_(std::max<std::size_t>(1, size)), timeout_(timeout) {}

ProcessPool::~ProcessPool() = default;

nlohmann::json ProcessPool::last_handshake() const {
  std::lock_guard lock(mutex_);
  return handshake_;
}

std::unique_ptr<LineProcess> ProcessPool::checkout(ErrorCode failure_code) {
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !idle_.empty() || live_ < size_; });
    if (!idle_.empty()) {
      auto w = std::move(idle_.back());
      idle_.pop_back();
      return w;
    }
    ++live_;
  }
  try {
    auto w = std::make_unique<LineProcess>(argv_);
    const auto hello = w->receive(timeout_);
    if (!hello || !hello->is_object() || !hello->value("ready", false)) {
      throw Error(failure_code, "worker '" + argv_.front() + "' did not complete the ready handshake");
    }
    std::lock_guard lock(mutex_);
    handshake_ = *hello;
    return w;
  } catch (const Error& e) {
    {
      std::lock_guard lock(mutex_);
      --live_;
    }
    cv_.notify_one();
    throw Error(failure_code, e.what());
  }
}

void ProcessPool::checkin(std::unique_ptr<LineProcess> worker) {
  {
    std::lock_guard lock(mutex_);
    if (worker && worker->alive()) {
      idle_.push_back(std::move(worker));
    } else {
      --live_;
    }
  }
  cv_.notify_one();
}

nlohmann::json ProcessPool::call(nlohmann::json request, ErrorCode failure_code) {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "req-" + std::to_string(next_id_++);
  }
  request["id"] = id;
  auto worker = checkout(failure_code);
  try {
    worker->send(request);
    const auto reply = worker->receive(timeout_);
    if (!reply) throw Error(failure_code, "worker timed out or exited");
    if (!reply->is_object() || reply->value("id", std::string{}) != id) {
      throw Error(failure_code, "worker replied with a mismatched id");
    }
    checkin(std::move(worker));
    return *reply;
  } catch (const Error& e) {
    worker->terminate();
    checkin(nullptr);
    throw Error(failure_code, e.what());
  }
}

}  // namespace promptevo
