#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trafficproc {

struct LatencyReport {
    std::string operation;
    std::string io_ops;
    uint64_t count = 0;
    double mean_ms = 0.0;
    double sd_ms = 0.0;
    double throughput_per_s = 0.0;
};

struct BenchConfig {
    uint64_t events = 1'000'000;  // target event volume
    uint64_t seed = 7;
    bool serial_section = false;  // add isolated store-op attribution rows
    double warmup_fraction = 0.05;
    int node_count = 1;  // recorded in the header; the measured run is one node
};

struct BenchResult {
    std::vector<LatencyReport> reports;
    uint64_t events_processed = 0;
    uint64_t vehicles = 0;
    double end_to_end_events_per_s = 0.0;
    std::vector<double> read_decile_means_ms;  // 10 entries, warmup excluded
    double read_decile_drift = 0.0;            // |last - first| / first
};

// Drives the pipeline over a synthetic route-1 workload with per-operation
// timers around the correlation read, the store append, and metric
// generation (one cached-stream read plus one sample write). Timers wrap only
// the measured operation; generation is excluded; the first warmup_fraction
// of samples is dropped from the statistics.
BenchResult run_bench(const BenchConfig& cfg);

// operation,io_ops,avg_ms,stdev_ms,throughput_eps rows under a commented
// header with host info, event volume, node count and seed.
std::string bench_report_text(const BenchConfig& cfg, const BenchResult& result);

}  // namespace trafficproc
