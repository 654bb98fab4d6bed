#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "trafficproc/channel.hpp"
#include "trafficproc/correlation.hpp"
#include "trafficproc/gateway.hpp"
#include "trafficproc/metrics.hpp"
#include "trafficproc/network.hpp"
#include "trafficproc/store.hpp"
#include "trafficproc/topology_types.hpp"

namespace trafficproc {

// A sighting of a vehicle at a junction that has a cross-area section; the
// raw material GBAS uses to synthesize boundary traversals.
struct BoundarySighting {
    std::string plate;
    int64_t timestamp_ms = 0;
    std::string area_id;
    std::string junction_id;

    bool operator==(const BoundarySighting&) const = default;
};

// Inter-node messages reuse the event/detection wire formats prefixed with a
// one-token kind: "DET ", "EVT ", "BND ". BND payloads use the detection
// format with the junction in the camera slot.
using NodeMessage = std::variant<Detection, ExBpafEvent, BoundarySighting>;
std::string encode_message(const NodeMessage& m);
std::optional<NodeMessage> decode_message(std::string_view line);

// One per-area slice of a journey, as observed by a single node.
struct JourneyFragment {
    CorrelationKey key;
    std::string area_id;
    std::vector<SectionTime> sections;  // time-ordered, internally path-consistent
};

struct GlobalJourney {
    CorrelationKey key;
    std::string instance_id;
    InstanceStatus status = InstanceStatus::Discarded;
    std::optional<std::string> matched_definition;
    std::vector<SectionTime> path;  // fragments plus synthesized boundary traversals
    int64_t total_ms = 0;
};

using BoundarySightingIndex = std::map<std::pair<std::string, std::string>, std::set<int64_t>>;

// Chains per-area fragments of one key into a global journey. Boundary
// traversals are synthesized from the recorded sightings of the two junctions
// the fragments meet at. Unchainable input yields status Discarded; a chained
// path that fully matches a definition yields Completed; a chained but
// unmatched path is returned InFlight for the caller's mode to resolve.
GlobalJourney stitch_cross_area(const RoadNetwork& net, const AreaMap& areas,
                                std::vector<JourneyFragment> fragments,
                                const BoundarySightingIndex& sightings);

struct NodeConfig {
    MatchMode mode = MatchMode::Strict;
    int64_t ttl_ms = 30 * 60 * 1000;
    int64_t window_len_ms = 15 * 60 * 1000;
    int64_t sweep_interval_ms = 5 * 60 * 1000;  // stream-time finalization cadence
    std::string store_dir;                      // empty = in-memory store
    int tz_offset_minutes = 0;
};

// Per-area analytics node: own gateway, correlation engine, metrics engine and
// store, isolated from every other node's. Runs as a serial event loop over
// its inbound channel.
class BasuNode {
  public:
    BasuNode(std::string area_id, std::shared_ptr<RoadNetwork> net, const AreaMap* areas,
             NodeConfig cfg = {});

    const std::string& node_id() const { return node_id_; }
    const std::string& area_id() const { return area_id_; }

    void set_boundary_sink(std::function<void(const BoundarySighting&)> sink);
    void set_fragment_sink(std::function<void(const ExBpafEvent&)> sink);

    void process_detection(const Detection& d);
    std::vector<FinalizeOutcome> finalize_all();

    AnprGateway& gateway() { return *gateway_; }
    CorrelationEngine& engine() { return *engine_; }
    MetricsEngine& metrics() { return *metrics_; }
    EventStore& store() { return *store_; }
    const std::vector<Rejection>& rejections() const { return rejections_; }

  private:
    void handle_finalized(const std::vector<FinalizeOutcome>& outcomes);

    std::string area_id_;
    std::string node_id_;
    std::shared_ptr<RoadNetwork> net_;
    const AreaMap* areas_;
    NodeConfig cfg_;
    std::set<std::string> boundary_junctions_;

    std::unique_ptr<EventStore> store_;
    std::unique_ptr<AnprGateway> gateway_;
    std::unique_ptr<MetricsEngine> metrics_;
    std::unique_ptr<CorrelationEngine> engine_;

    std::function<void(const BoundarySighting&)> boundary_sink_;
    std::function<void(const ExBpafEvent&)> fragment_sink_;
    std::vector<Rejection> rejections_;
    int64_t last_sweep_ms_ = -1;
};

struct GbasConfig {
    MatchMode mode = MatchMode::Strict;
    int64_t window_len_ms = 15 * 60 * 1000;
};

// The aggregator: records boundary sightings, collects forwarded instance
// streams, stitches cross-area journeys and serves global metrics. Only
// journeys spanning at least two areas are materialized.
class GbasNode {
  public:
    GbasNode(std::shared_ptr<RoadNetwork> net, const AreaMap* areas, GbasConfig cfg = {});

    // Dedup by (key, junction, time); non-boundary junctions are rejected.
    bool record_boundary_sighting(const BoundarySighting& s);

    // At-least-once delivery tolerated: duplicates by event_id are dropped.
    void ingest_forwarded_event(const ExBpafEvent& e);

    std::vector<GlobalJourney> finalize();

    MetricsEngine& metrics() { return *metrics_; }
    const std::vector<GlobalJourney>& journeys() const { return journeys_; }
    uint64_t rejected_sightings() const { return rejected_sightings_; }
    uint64_t duplicate_events() const { return duplicate_events_; }

  private:
    std::shared_ptr<RoadNetwork> net_;
    const AreaMap* areas_;
    GbasConfig cfg_;
    std::set<std::string> boundary_junctions_;

    std::mutex mu_;
    BoundarySightingIndex sightings_;
    std::map<std::string, std::vector<ExBpafEvent>> events_by_pid_;
    std::set<std::string> seen_event_ids_;

    std::unique_ptr<MetricsEngine> metrics_;
    std::vector<GlobalJourney> journeys_;
    uint64_t rejected_sightings_ = 0;
    uint64_t duplicate_events_ = 0;
    uint64_t discovery_seq_ = 0;
};

struct ClusterConfig {
    NodeConfig node;
    std::string store_root;  // per-node store dirs created underneath; empty = memory
    size_t queue_capacity = 4096;
};

// In-process deployment: one BASU per area plus one GBAS, each a serial
// consumer over a bounded channel; nodes run concurrently.
class Cluster {
  public:
    Cluster(std::shared_ptr<RoadNetwork> net, AreaMap areas, ClusterConfig cfg = {});

    // Deterministic node assignment by the camera junction's area.
    std::optional<std::string> route_detection(const Detection& d) const;

    // Routes the stream, drains all nodes, finalizes nodes then GBAS.
    void run(const std::vector<Detection>& stream);

    std::vector<BasuNode*> nodes();  // sorted by area id
    BasuNode* node_for_area(const std::string& area_id);
    GbasNode& gbas() { return *gbas_; }
    const AreaMap& areas() const { return areas_; }
    uint64_t dropped_unroutable() const { return dropped_unroutable_; }

  private:
    std::shared_ptr<RoadNetwork> net_;
    AreaMap areas_;
    ClusterConfig cfg_;
    std::map<std::string, std::unique_ptr<BasuNode>> nodes_;  // by area id
    std::unique_ptr<GbasNode> gbas_;
    uint64_t dropped_unroutable_ = 0;
};

}  // namespace trafficproc
