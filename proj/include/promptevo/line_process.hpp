#pragma once

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptevo/error.hpp"

namespace promptevo {

/// Child process spoken to with one JSON document per line over its standard
/// input and output. Standard error is inherited.
class LineProcess {
 public:
  explicit LineProcess(const std::vector<std::string>& argv);
  ~LineProcess();
  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  void send(const nlohmann::json& message);
  /// Next complete line parsed as JSON, or nullopt on timeout or end of
  /// stream. Throws Error(parse_error) for a line that is not JSON.
  std::optional<nlohmann::json> receive(std::chrono::milliseconds timeout);
  bool alive() const noexcept { return pid_ > 0; }
  void terminate() noexcept;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// Fixed-size pool of line-protocol workers. Workers are started lazily,
/// must greet with {"ready": true, ...}, and are discarded after any failure
/// so the next request gets a fresh process.
class ProcessPool {
 public:
  ProcessPool(std::vector<std::string> argv, std::size_t size, std::chrono::milliseconds timeout);
  ~ProcessPool();

  /// Sends request (an "id" is added) and waits for the matching response.
  /// Throws Error(failure_code) on spawn failure, timeout, malformed output or
  /// id mismatch.
  nlohmann::json call(nlohmann::json request, ErrorCode failure_code);

  /// Handshake document of the most recently started worker.
  nlohmann::json last_handshake() const;

 private:
  std::unique_ptr<LineProcess> checkout(ErrorCode failure_code);
  void checkin(std::unique_ptr<LineProcess> worker);

  std::vector<std::string> argv_;
  std::size_t size_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<LineProcess>> idle_;
  std::size_t live_ = 0;
  std::uint64_t next_id_ = 0;
  nlohmann::json handshake_;
};

}  // namespace promptevo
