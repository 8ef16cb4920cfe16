#pragma once

#include <chrono>
#include <stdexcept>

namespace cpds {

class TimeoutError : public std::runtime_error {
 public:
  TimeoutError() : std::runtime_error("timeout") {}
};

// Wall-clock budget shared by the pipeline stages.
class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(double seconds)
      : end_(std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds))),
        active_(seconds > 0) {}
  bool expired() const { return active_ && std::chrono::steady_clock::now() > end_; }
  void check() const {
    if (expired()) throw TimeoutError();
  }

 private:
  std::chrono::steady_clock::time_point end_{};
  bool active_ = false;
};

}  // namespace cpds
