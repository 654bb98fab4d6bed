#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "trafficproc/event.hpp"
#include "trafficproc/metrics.hpp"
#include "trafficproc/network.hpp"
#include "trafficproc/store.hpp"

namespace trafficproc {

enum class InstanceStatus { InFlight, Completed, Discarded };
std::string_view status_token(InstanceStatus s);

// Strict discards observed paths matching no known definition; discovery
// auto-registers them as new definitions.
enum class MatchMode { Strict, Discovery };

struct JourneyInstance {
    std::string process_instance_id;
    CorrelationKey correlation;
    std::vector<ExBpafEvent> events;
    std::optional<std::string> matched_definition;
    InstanceStatus status = InstanceStatus::InFlight;
};

struct CorrelateResult {
    std::string instance_id;
    bool predecessor_found = false;
    bool duplicate = false;
};

struct FinalizeOutcome {
    std::string instance_id;
    CorrelationKey key;
    InstanceStatus status = InstanceStatus::Discarded;
    std::optional<std::string> matched_definition;
    std::vector<SectionTime> traversals;  // completed traversals in path order
    int64_t first_entry_ms = -1;
};

struct ProcessOutcome {
    CorrelateResult correlate;
    std::optional<MetricSample> sample;       // present when a traversal completed
    std::optional<FinalizeOutcome> finalized;  // present when the journey completed
};

class UnknownInstance : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Correlates events into journey instances by (reg, date): one latest-index
// read plus one log append per event, an evicting in-flight cache, and
// handoff of completed streams to the metrics engine.
//
// Per-key processing is serial (one logical worker per node event loop);
// internal state is guarded so finalization can interleave safely.
class CorrelationEngine {
  public:
    struct Config {
        MatchMode mode = MatchMode::Strict;
        std::string discovered_prefix = "discovered-";
    };

    CorrelationEngine(RoadNetwork& net, EventStore& store, MetricsEngine& metrics);
    CorrelationEngine(RoadNetwork& net, EventStore& store, MetricsEngine& metrics, Config cfg);

    // Exactly one latest_for read and one append per event. Duplicate
    // event_ids are replay no-ops.
    CorrelateResult correlate(const ExBpafEvent& e);

    // Reads the instance's cached stream, computes the activity duration and
    // forwards the sample. Returns nothing when the OPEN partner is missing
    // (the instance is poisoned and will be discarded).
    std::optional<MetricSample> on_activity_completed(const std::string& instance_id,
                                                      const std::string& activity_instance_id);

    // correlate + completion handling + full-path finalization.
    ProcessOutcome process(const ExBpafEvent& e);

    std::vector<FinalizeOutcome> finalize_idle(int64_t now_ms, int64_t ttl_ms);
    std::vector<FinalizeOutcome> finalize_all();

    // Timestamp-ordered event sequence of an instance known to the store.
    std::vector<ExBpafEvent> read_stream(const std::string& instance_id) const;

    std::optional<JourneyInstance> instance(const std::string& instance_id) const;

    size_t in_flight() const;
    uint64_t completed_count() const;
    uint64_t discarded_count() const;
    uint64_t dropped_samples() const;
    uint64_t auto_registered() const;

    EventStore& store() { return store_; }

    // Benchmark tap around metric generation (cached-stream read + sample
    // write); only for serial runs.
    void set_metric_latency_recorder(LatencyRecorder* rec) { metric_rec_ = rec; }

  private:
    struct Cached {
        CorrelationKey key;
        std::vector<ExBpafEvent> events;
        std::vector<std::string> path;        // observed section order
        std::vector<SectionTime> traversals;  // completed traversals
        int64_t first_entry_ms = -1;
        int64_t last_update_ms = 0;
        bool poisoned = false;
    };

    FinalizeOutcome finalize_locked(const std::string& pid, Cached&& inst);
    std::optional<MetricSample> complete_activity_locked(const std::string& pid, Cached& inst,
                                                         const std::string& aid);

    RoadNetwork& net_;
    EventStore& store_;
    MetricsEngine& metrics_;
    Config cfg_;

    mutable std::mutex mu_;
    std::map<std::string, Cached> cache_;
    std::map<std::string, FinalizeOutcome> finalized_;

    uint64_t completed_ = 0;
    uint64_t discarded_ = 0;
    uint64_t dropped_samples_ = 0;
    uint64_t auto_registered_ = 0;
    uint64_t discovery_seq_ = 0;
    LatencyRecorder* metric_rec_ = nullptr;
};

}  // namespace trafficproc
