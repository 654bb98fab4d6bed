#pragma once

#include <atomic>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trafficproc/event.hpp"
#include "trafficproc/latency.hpp"

namespace trafficproc {

struct StoreManifest {
    std::string node_id = "node-0";
    std::string area_id = "ALL";
    int format_version = 1;
};

class StoreError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Append-only event log with a latest-event index per correlation key and an
// instance index. Optionally backed by a directory:
//   events.log  - wire-format lines, append-only
//   manifest    - node id, area id, format version
// Recovery is a full log scan.
class EventStore {
  public:
    explicit EventStore(StoreManifest manifest = {});

    // Opens (or creates) a persistent store under dir.
    static std::unique_ptr<EventStore> open(const std::string& dir, StoreManifest manifest = {});

    // Appends unless event_id was already stored; returns whether it appended.
    bool append(const ExBpafEvent& e);

    // The last stored event for the key, if any. The indexed read of the
    // one-read-plus-one-write correlation pattern.
    std::optional<ExBpafEvent> latest_for(const CorrelationKey& key) const;

    bool has_instance(const std::string& process_instance_id) const;

    // All events of an instance, ordered by (timestamp, append order).
    std::vector<ExBpafEvent> instance_events(const std::string& process_instance_id) const;

    size_t size() const;
    const StoreManifest& manifest() const { return manifest_; }
    const std::string& directory() const { return dir_; }

    // Instrumented op counters: reads counts latest_for calls, appends counts
    // actual appends (duplicates excluded).
    uint64_t read_ops() const { return reads_.load(std::memory_order_relaxed); }
    uint64_t append_ops() const { return appends_.load(std::memory_order_relaxed); }

    void flush();

    // Benchmark taps; only for serial runs.
    void set_latency_recorders(LatencyRecorder* read, LatencyRecorder* append) {
        read_rec_ = read;
        append_rec_ = append;
    }

  private:
    void index_event(const ExBpafEvent& e, size_t pos);

    LatencyRecorder* read_rec_ = nullptr;
    LatencyRecorder* append_rec_ = nullptr;

    StoreManifest manifest_;
    std::string dir_;
    std::ofstream out_;

    mutable std::shared_mutex mu_;
    std::vector<ExBpafEvent> log_;
    std::unordered_map<std::string, size_t> latest_;  // key string -> last log position
    std::unordered_map<std::string, std::vector<size_t>> by_instance_;
    std::unordered_set<std::string> event_ids_;

    mutable std::atomic<uint64_t> reads_{0};
    std::atomic<uint64_t> appends_{0};
};

}  // namespace trafficproc
