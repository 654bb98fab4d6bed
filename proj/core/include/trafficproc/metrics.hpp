#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "trafficproc/network.hpp"
#include "trafficproc/time_util.hpp"

namespace trafficproc {

// Wall-aligned aggregation interval; 15 minutes unless reconfigured.
struct Window {
    int64_t start_ms = 0;
    int64_t length_ms = 15 * 60 * 1000;

    bool operator==(const Window&) const = default;
};

struct MetricSample {
    std::string section_id;
    std::string process_instance_id;
    std::string activity_instance_id;
    int64_t duration_ms = 0;  // strictly positive
    int64_t entry_ms = 0;     // OPEN_RUNNING timestamp; decides window membership
    Window window;

    double duration_s() const { return double(duration_ms) / 1000.0; }
};

// One completed traversal within a journey path.
struct SectionTime {
    std::string section_id;
    int64_t entry_ms = 0;
    int64_t duration_ms = 0;
};

struct Threshold {
    std::string target;  // activity (section) or process (journey) definition id
    double bound_s = 0.0;
    bool enabled = true;
};

struct Alert {
    int64_t time_ms = 0;
    std::string target;
    std::string instance_id;
    double observed_s = 0.0;
    double bound_s = 0.0;
};

// time_iso,target_id,instance_id,observed_s,bound_s
std::string format_alert(const Alert& a);

// Per-definition per-window accumulator. Durations are integer milliseconds
// until the query boundary, so streamed sums replay exactly.
struct DefinitionAccumulator {
    int64_t sum_duration_ms = 0;
    int64_t completed_count = 0;
    int64_t entered_count = 0;
};

class MetricsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Streaming KPI engine: activity/process x instance/definition, time and
// flow, scalar and vector, plus threshold alerting on the update path.
// Updates and queries are serialized; queries see consistent snapshots.
// Late samples still land in their window: queries are snapshots, not seals.
class MetricsEngine {
  public:
    struct Config {
        int64_t window_len_ms = 15 * 60 * 1000;
    };

    explicit MetricsEngine(const RoadNetwork* net = nullptr);
    MetricsEngine(const RoadNetwork* net, Config cfg);

    Window window_of(int64_t ms) const;

    // --- update path -------------------------------------------------------

    MetricSample record_activity(const std::string& section_id, const std::string& instance_id,
                                 const std::string& activity_instance_id, int64_t duration_ms,
                                 int64_t entry_ms);

    void record_journey(const std::string& definition_id, const std::string& instance_id,
                        std::vector<SectionTime> path, int64_t first_entry_ms);

    // Fired synchronously from the update path, before the sample is
    // acknowledged to the caller. Alerts use strict exceedance.
    std::vector<Alert> evaluate_thresholds(const MetricSample& sample) const;
    std::vector<Alert> evaluate_journey_threshold(const std::string& definition_id,
                                                  const std::string& instance_id, int64_t total_ms,
                                                  int64_t time_ms) const;

    void set_thresholds(std::vector<Threshold> thresholds);
    void set_alert_sink(std::function<void(const Alert&)> sink);
    // Observes every activity sample accepted; used for validation taps.
    void set_sample_observer(std::function<void(const MetricSample&)> observer);

    // --- queries ------------------------------------------------------------

    std::optional<double> avg_activity_time(const std::string& section_id, int64_t window_start_ms) const;
    int64_t activity_flow(const std::string& section_id, int64_t window_start_ms) const;

    // Path-ordered (section, seconds) of a completed instance; the journey
    // scalar time is the component sum.
    std::vector<std::pair<std::string, double>> journey_time_vector(const std::string& instance_id) const;
    double journey_time_s(const std::string& instance_id) const;

    std::vector<std::pair<std::string, int64_t>> journey_flow_vector(const std::string& definition_id,
                                                                     int64_t window_start_ms) const;
    std::optional<double> avg_journey_time(const std::string& definition_id,
                                           int64_t window_start_ms) const;

    std::optional<DefinitionAccumulator> activity_accumulator(const std::string& section_id,
                                                              int64_t window_start_ms) const;
    std::optional<DefinitionAccumulator> journey_accumulator(const std::string& definition_id,
                                                             int64_t window_start_ms) const;

    struct Row {
        std::string definition_id;
        int64_t window_start_ms;
        DefinitionAccumulator acc;
    };
    std::vector<Row> activity_rows() const;  // sorted by (id, window)
    std::vector<Row> journey_rows() const;

    uint64_t samples_recorded() const;
    uint64_t journeys_recorded() const;
    uint64_t alerts_emitted() const;

  private:
    std::vector<Alert> evaluate_thresholds_locked(const MetricSample& sample) const;

    const RoadNetwork* net_;
    Config cfg_;

    mutable std::mutex mu_;
    std::map<std::pair<std::string, int64_t>, DefinitionAccumulator> activity_acc_;
    std::map<std::pair<std::string, int64_t>, DefinitionAccumulator> journey_acc_;
    // (definition, section, window) -> flow restricted to instances matched to
    // the definition
    std::map<std::tuple<std::string, std::string, int64_t>, int64_t> def_section_flow_;

    struct CompletedJourney {
        std::string definition_id;
        std::vector<SectionTime> path;
    };
    std::map<std::string, CompletedJourney> completed_;

    std::map<std::string, Threshold> thresholds_;
    std::function<void(const Alert&)> alert_sink_;
    std::function<void(const MetricSample&)> sample_observer_;

    uint64_t samples_ = 0;
    uint64_t journeys_ = 0;
    uint64_t alerts_ = 0;
};

// Threshold config: `target_id,bound_s,enabled` per line, '#' comments.
std::vector<Threshold> load_thresholds(std::istream& in);

}  // namespace trafficproc
