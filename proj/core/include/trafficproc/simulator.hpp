#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "trafficproc/gateway.hpp"
#include "trafficproc/network.hpp"
#include "trafficproc/time_util.hpp"
#include "trafficproc/topology_types.hpp"

namespace trafficproc {

// One dataset row: journey-time/speed/flow profile of a link in one 15-minute
// period of one day.
struct LinkProfile {
    std::string link_id;
    Date date;
    int time_period = 0;  // 0..95
    double avg_journey_time_s = 0.0;
    double avg_speed_kph = 0.0;
    double link_length_km = 0.0;
    int64_t flow = 0;  // vehicles per period
};

class SimulatorError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ProfileSet {
  public:
    void add(LinkProfile p);  // throws on duplicate (link, date, period) or bad fields
    const LinkProfile* find(const std::string& link, const Date& date, int period) const;
    size_t size() const { return profiles_.size(); }

    // CSV with header link_id,date,time_period,avg_jt_s,avg_speed_kph,link_length_km,flow
    static ProfileSet load(std::istream& in);
    static ProfileSet load_file(const std::string& path);

    const std::vector<std::string>& warnings() const { return warnings_; }

  private:
    std::map<std::tuple<std::string, std::string, int>, LinkProfile> profiles_;
    std::vector<std::string> warnings_;
};

// Oracle record for validation: the exact junction-crossing instants of one
// simulated vehicle.
struct GroundTruthRecord {
    std::string plate;
    std::string journey_id;
    std::vector<int64_t> junction_times_ms;  // k+1 instants for a k-link route
};

std::string format_ground_truth(const GroundTruthRecord& r);
std::optional<GroundTruthRecord> parse_ground_truth(std::string_view line);

struct SimConfig {
    Date date{2013, 5, 1};
    int first_period = 32;
    int last_period = 35;  // inclusive
    double cv = 0.05;      // per-link sd = cv * mean
    uint64_t seed = 42;
};

struct SimOutput {
    std::vector<Detection> detections;  // globally sorted by timestamp
    std::vector<GroundTruthRecord> ground_truth;
};

// Local polar-method gaussian; the draw sequence is pinned by this
// implementation, not by the standard library's unspecified one.
class NormalSampler {
  public:
    double operator()(std::mt19937_64& rng, double mean, double sd) const;
};

std::string random_plate(std::mt19937_64& rng);  // UK-style LLNNLLL

// Generates time-ordered ANPR detections for the configured journeys.
// Per period, exactly `flow` vehicles start (flow column of the first link),
// uniformly spaced across the 15 minutes; each link traversal draws from
// Normal(mean, cv*mean) with non-positive draws resampled. Deterministic
// under (inputs, seed), including plate assignment.
class Simulator {
  public:
    Simulator(const RoadNetwork& net, const ProfileSet& profiles, const AreaMap* areas = nullptr);

    SimOutput generate(const std::vector<std::string>& journey_ids, const SimConfig& cfg) const;

  private:
    const RoadNetwork& net_;
    const ProfileSet& profiles_;
    const AreaMap* areas_;
};

// Drops one interior detection for round(rate * eligible) seeded-chosen
// vehicles; returns the affected plates (sorted). Ground truth is untouched.
std::vector<std::string> inject_missed_detections(SimOutput& out, double rate, uint64_t seed);

}  // namespace trafficproc
