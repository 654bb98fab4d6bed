#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trafficproc/event.hpp"
#include "trafficproc/network.hpp"

namespace trafficproc {

// One camera read: plate, occurrence time, hosting area, camera junction.
struct Detection {
    std::string plate;
    int64_t timestamp_ms = 0;
    std::string area_id;
    std::string camera_id;  // junction id of the camera's junction

    bool operator==(const Detection&) const = default;
};

std::string format_detection(const Detection& d);
std::optional<Detection> parse_detection(std::string_view line);

enum class RejectReason { NoSection, NonMonotonic, UnknownCamera, Poisoned };
std::string_view reason_token(RejectReason r);

struct Rejection {
    int64_t timestamp_ms = 0;
    std::string plate;
    Date journey_date;
    RejectReason reason = RejectReason::NoSection;
};

// timestamp_ms,plate,journey_date,reason
std::string format_rejection(const Rejection& r);

struct TrajectoryEntry {
    CorrelationKey key;
    std::string last_junction;
    int64_t last_seen = 0;
    std::vector<std::string> observed_sections;
    bool poisoned = false;
};

struct GatewayConfig {
    std::string server_id = "anpr-0";
    int tz_offset_minutes = 0;
};

struct IngestResult {
    std::vector<ExBpafEvent> events;  // empty or an OPEN/CLOSED pair
    std::optional<Rejection> rejection;
};

struct GatewayStats {
    uint64_t detections = 0;
    uint64_t first_sightings = 0;
    uint64_t pairs_emitted = 0;
    uint64_t rejected_no_section = 0;
    uint64_t rejected_non_monotonic = 0;
    uint64_t rejected_unknown_camera = 0;
    uint64_t rejected_poisoned = 0;

    uint64_t rejected_total() const {
        return rejected_no_section + rejected_non_monotonic + rejected_unknown_camera + rejected_poisoned;
    }
};

// The ETL stage: discovers the traversed road section from the vehicle's last
// known junction and emits the OPEN_RUNNING/CLOSED_COMPLETED pair
// retrospectively at the end-junction sighting.
//
// Detections for one correlation key are handled under that key's shard lock
// (serial per key); distinct keys proceed concurrently. Eviction linearizes
// against ingestion through the same locks.
class AnprGateway {
  public:
    AnprGateway(const RoadNetwork& net, GatewayConfig cfg = {});

    IngestResult ingest_detection(const Detection& d);

    // Removes entries idle longer than ttl; returns the eviction count.
    size_t evict_stale_trajectories(int64_t now_ms, int64_t ttl_ms);

    std::optional<TrajectoryEntry> trajectory(const CorrelationKey& key) const;
    size_t cache_size() const;
    GatewayStats stats() const;

  private:
    static constexpr size_t kShards = 16;

    struct Shard {
        mutable std::mutex mu;
        std::map<std::string, TrajectoryEntry> entries;  // keyed by key.to_string()
    };

    Shard& shard_for(const std::string& key_str);
    const Shard& shard_for(const std::string& key_str) const;
    std::string next_event_id();

    const RoadNetwork& net_;
    GatewayConfig cfg_;
    std::array<Shard, kShards> shards_;
    mutable std::mutex stats_mu_;
    GatewayStats stats_;
    std::atomic<uint64_t> event_seq_{0};
};

}  // namespace trafficproc
