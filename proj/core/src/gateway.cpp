#include "trafficproc/gateway.hpp"

#include <functional>
#include <sstream>

#include "trafficproc/strings.hpp"

namespace trafficproc {

std::string format_detection(const Detection& d) {
    std::ostringstream os;
    os << d.plate << ',' << d.timestamp_ms << ',' << d.area_id << ',' << d.camera_id;
    return os.str();
}

std::optional<Detection> parse_detection(std::string_view line) {
    auto f = split(trim(line), ',');
    if (f.size() != 4) return std::nullopt;
    auto ts = parse_ll(f[1]);
    if (!ts || f[0].empty() || f[3].empty()) return std::nullopt;
    return Detection{f[0], *ts, f[2], f[3]};
}

std::string_view reason_token(RejectReason r) {
    switch (r) {
        case RejectReason::NoSection: return "NO_SECTION";
        case RejectReason::NonMonotonic: return "NON_MONOTONIC";
        case RejectReason::UnknownCamera: return "UNKNOWN_CAMERA";
        case RejectReason::Poisoned: return "POISONED";
    }
    return "UNKNOWN";
}

std::string format_rejection(const Rejection& r) {
    std::ostringstream os;
    os << r.timestamp_ms << ',' << r.plate << ',' << r.journey_date.to_string() << ','
       << reason_token(r.reason);
    return os.str();
}

AnprGateway::AnprGateway(const RoadNetwork& net, GatewayConfig cfg) : net_(net), cfg_(std::move(cfg)) {}

AnprGateway::Shard& AnprGateway::shard_for(const std::string& key_str) {
    return shards_[std::hash<std::string>{}(key_str) % kShards];
}

const AnprGateway::Shard& AnprGateway::shard_for(const std::string& key_str) const {
    return shards_[std::hash<std::string>{}(key_str) % kShards];
}

std::string AnprGateway::next_event_id() {
    return cfg_.server_id + "-" + std::to_string(event_seq_.fetch_add(1, std::memory_order_relaxed));
}

IngestResult AnprGateway::ingest_detection(const Detection& d) {
    IngestResult res;
    CorrelationKey key{d.plate, date_of_ms(d.timestamp_ms, cfg_.tz_offset_minutes)};

    {
        std::lock_guard lk(stats_mu_);
        ++stats_.detections;
    }

    const Junction* cam = net_.junction(d.camera_id);
    if (!cam) {
        res.rejection = Rejection{d.timestamp_ms, d.plate, key.journey_date, RejectReason::UnknownCamera};
        std::lock_guard lk(stats_mu_);
        ++stats_.rejected_unknown_camera;
        return res;
    }

    const std::string key_str = key.to_string();
    Shard& sh = shard_for(key_str);
    std::lock_guard lk(sh.mu);

    auto it = sh.entries.find(key_str);
    if (it == sh.entries.end()) {
        sh.entries.emplace(key_str, TrajectoryEntry{key, d.camera_id, d.timestamp_ms, {}, false});
        std::lock_guard slk(stats_mu_);
        ++stats_.first_sightings;
        return res;
    }

    TrajectoryEntry& entry = it->second;
    if (entry.poisoned) {
        res.rejection = Rejection{d.timestamp_ms, d.plate, key.journey_date, RejectReason::Poisoned};
        std::lock_guard slk(stats_mu_);
        ++stats_.rejected_poisoned;
        return res;
    }
    if (d.timestamp_ms <= entry.last_seen) {
        // zero or negative traversal duration is forbidden
        res.rejection = Rejection{d.timestamp_ms, d.plate, key.journey_date, RejectReason::NonMonotonic};
        std::lock_guard slk(stats_mu_);
        ++stats_.rejected_non_monotonic;
        return res;
    }

    auto section_id = net_.section_between(entry.last_junction, d.camera_id);
    if (!section_id) {
        entry.poisoned = true;
        res.rejection = Rejection{d.timestamp_ms, d.plate, key.journey_date, RejectReason::NoSection};
        std::lock_guard slk(stats_mu_);
        ++stats_.rejected_no_section;
        return res;
    }

    const RoadSection* sec = net_.section(*section_id);
    const int64_t entry_ms = entry.last_seen;
    const std::string pid = key_str;
    const std::string aid =
        d.plate + ":" + key.journey_date.to_string() + ":" + *section_id + ":" + std::to_string(entry_ms);
    const std::string aname = sec->description.empty() ? sec->id : sec->description;

    ExBpafEvent open;
    open.event_id = next_event_id();
    open.timestamp_ms = entry_ms;
    open.server_id = cfg_.server_id;
    open.process_instance_id = pid;
    open.activity_definition_id = *section_id;
    open.activity_instance_id = aid;
    open.activity_name = aname;
    open.current_state = LifecycleState::OpenRunning;
    open.correlation = key;

    ExBpafEvent closed = open;
    closed.event_id = next_event_id();
    closed.timestamp_ms = d.timestamp_ms;
    closed.current_state = LifecycleState::ClosedCompleted;
    closed.previous_state = LifecycleState::OpenRunning;

    res.events.push_back(std::move(open));
    res.events.push_back(std::move(closed));

    entry.last_junction = d.camera_id;
    entry.last_seen = d.timestamp_ms;
    entry.observed_sections.push_back(*section_id);

    std::lock_guard slk(stats_mu_);
    ++stats_.pairs_emitted;
    return res;
}

size_t AnprGateway::evict_stale_trajectories(int64_t now_ms, int64_t ttl_ms) {
    size_t evicted = 0;
    for (auto& sh : shards_) {
        std::lock_guard lk(sh.mu);
        for (auto it = sh.entries.begin(); it != sh.entries.end();) {
            if (now_ms - it->second.last_seen > ttl_ms) {
                it = sh.entries.erase(it);
                ++evicted;
            } else {
                ++it;
            }
        }
    }
    return evicted;
}

std::optional<TrajectoryEntry> AnprGateway::trajectory(const CorrelationKey& key) const {
    const std::string key_str = key.to_string();
    const Shard& sh = shard_for(key_str);
    std::lock_guard lk(sh.mu);
    auto it = sh.entries.find(key_str);
    if (it == sh.entries.end()) return std::nullopt;
    return it->second;
}

size_t AnprGateway::cache_size() const {
    size_t n = 0;
    for (const auto& sh : shards_) {
        std::lock_guard lk(sh.mu);
        n += sh.entries.size();
    }
    return n;
}

GatewayStats AnprGateway::stats() const {
    std::lock_guard lk(stats_mu_);
    return stats_;
}

}  // namespace trafficproc
