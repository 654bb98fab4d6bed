#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

namespace trafficproc {

// Sample sink for per-operation latencies. Not synchronized: attach only in
// single-consumer (serial) benchmark runs.
class LatencyRecorder {
  public:
    void reserve(size_t n) { samples_ns_.reserve(n); }
    void record(int64_t ns) { samples_ns_.push_back(ns); }
    const std::vector<int64_t>& samples_ns() const { return samples_ns_; }
    void clear() { samples_ns_.clear(); }

  private:
    std::vector<int64_t> samples_ns_;
};

inline int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace trafficproc
