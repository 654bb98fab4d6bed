#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "trafficproc/simulator.hpp"
#include "trafficproc/stats.hpp"
#include "trafficproc/topology.hpp"

namespace trafficproc {

struct RunConfig {
    std::string network_file;
    std::string areas_file;    // empty: one unpartitioned node
    std::string dataset_file;
    std::string thresholds_file;  // optional
    std::string out_dir;
    std::vector<std::string> journeys;  // empty: every defined journey

    uint64_t seed = 42;
    MatchMode mode = MatchMode::Strict;
    int64_t ttl_min = 30;
    int64_t window_min = 15;
    double cv = 0.05;
    double alpha = 0.01;
    Date date{2013, 5, 1};
    int first_period = 32;
    int last_period = 35;
    double inject_miss_rate = 0.0;
    bool persist_stores = true;
    int tz_offset_minutes = 0;

    // Cooperative interruption: when set mid-run, routing stops and every
    // output file ends with a TRUNCATED marker line.
    const std::atomic<bool>* interrupt = nullptr;
};

struct RunResult {
    std::shared_ptr<RoadNetwork> net;
    std::unique_ptr<Cluster> cluster;
    SimOutput sim;
    std::vector<std::string> injected_plates;

    uint64_t detections = 0;
    uint64_t events = 0;
    uint64_t rejections = 0;
    uint64_t completed = 0;
    uint64_t discarded = 0;
    uint64_t gbas_completed = 0;
    uint64_t gbas_discarded = 0;
    uint64_t alerts = 0;
    bool truncated = false;

    std::vector<stats::TTestRow> ttest;
    // per-link observed traversal times in integer milliseconds (exact sums),
    // deterministic order
    std::map<std::string, std::vector<double>> link_samples_ms;
    std::vector<Alert> alert_log;  // merged, sorted
};

// simulate -> route -> ETL -> correlate -> metrics -> validate. Writes
// detections.csv, ground_truth.csv, rejections.log, alerts.log,
// metrics_activity.csv, metrics_journeys.csv, gbas_journeys.csv,
// ttest_report.csv and summary.txt under out_dir, plus per-node stores when
// persistence is on. Deterministic under a fixed config.
RunResult run_pipeline(const RunConfig& cfg);

// Rebuilds correlation + metrics state from persisted stores (full log scan)
// so queries can run without the original pipeline.
struct ReplayedNode {
    std::string node_id;
    std::unique_ptr<EventStore> store;
    std::unique_ptr<MetricsEngine> metrics;
    std::unique_ptr<CorrelationEngine> engine;
};

struct Replayed {
    std::shared_ptr<RoadNetwork> net;
    std::vector<ReplayedNode> nodes;  // sorted by node id
};

Replayed replay_stores(const std::string& network_file, const std::string& stores_dir, MatchMode mode,
                       int64_t window_min);

}  // namespace trafficproc
