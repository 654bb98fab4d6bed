#include "trafficproc/correlation.hpp"

#include <algorithm>
#include <cstdio>

namespace trafficproc {

std::string_view status_token(InstanceStatus s) {
    switch (s) {
        case InstanceStatus::InFlight: return "IN_FLIGHT";
        case InstanceStatus::Completed: return "COMPLETED";
        case InstanceStatus::Discarded: return "DISCARDED";
    }
    return "UNKNOWN";
}

CorrelationEngine::CorrelationEngine(RoadNetwork& net, EventStore& store, MetricsEngine& metrics)
    : CorrelationEngine(net, store, metrics, Config{}) {}

CorrelationEngine::CorrelationEngine(RoadNetwork& net, EventStore& store, MetricsEngine& metrics,
                                     Config cfg)
    : net_(net), store_(store), metrics_(metrics), cfg_(std::move(cfg)) {}

CorrelateResult CorrelationEngine::correlate(const ExBpafEvent& e) {
    std::lock_guard lk(mu_);
    // One indexed read to find the predecessor, one append to be findable by
    // successors.
    auto predecessor = store_.latest_for(e.correlation);
    bool appended = store_.append(e);

    CorrelateResult r;
    r.instance_id = e.process_instance_id;
    r.predecessor_found = predecessor.has_value();
    r.duplicate = !appended;
    if (r.duplicate) return r;

    auto [it, created] = cache_.try_emplace(e.process_instance_id);
    Cached& inst = it->second;
    if (created) {
        inst.key = e.correlation;
        inst.last_update_ms = e.timestamp_ms;
    }
    inst.events.push_back(e);
    inst.last_update_ms = std::max(inst.last_update_ms, e.timestamp_ms);
    return r;
}

std::optional<MetricSample> CorrelationEngine::complete_activity_locked(const std::string& pid,
                                                                        Cached& inst,
                                                                        const std::string& aid) {
    const ExBpafEvent* open = nullptr;
    const ExBpafEvent* closed = nullptr;
    for (const auto& e : inst.events) {
        if (e.activity_instance_id != aid) continue;
        if (e.current_state == LifecycleState::OpenRunning) open = &e;
        else closed = &e;
    }
    if (!open || !closed || closed->timestamp_ms <= open->timestamp_ms) {
        inst.poisoned = true;
        ++dropped_samples_;
        return std::nullopt;
    }
    const int64_t duration = closed->timestamp_ms - open->timestamp_ms;
    inst.path.push_back(open->activity_definition_id);
    inst.traversals.push_back({open->activity_definition_id, open->timestamp_ms, duration});
    if (inst.first_entry_ms < 0) inst.first_entry_ms = open->timestamp_ms;
    return metrics_.record_activity(open->activity_definition_id, pid, aid, duration,
                                    open->timestamp_ms);
}

std::optional<MetricSample> CorrelationEngine::on_activity_completed(const std::string& instance_id,
                                                                     const std::string& aid) {
    std::lock_guard lk(mu_);
    auto it = cache_.find(instance_id);
    if (it == cache_.end()) {
        ++dropped_samples_;
        throw UnknownInstance("unknown instance: " + instance_id);
    }
    return complete_activity_locked(instance_id, it->second, aid);
}

ProcessOutcome CorrelationEngine::process(const ExBpafEvent& e) {
    ProcessOutcome out;
    out.correlate = correlate(e);
    if (out.correlate.duplicate || e.current_state != LifecycleState::ClosedCompleted) return out;

    std::lock_guard lk(mu_);
    auto it = cache_.find(e.process_instance_id);
    if (it == cache_.end()) return out;  // cannot happen after a fresh correlate
    const int64_t t0 = metric_rec_ ? now_ns() : 0;
    out.sample = complete_activity_locked(e.process_instance_id, it->second, e.activity_instance_id);
    if (metric_rec_) metric_rec_->record(now_ns() - t0);

    // A fully matching observed path ends the journey right here: the vehicle
    // reached the definition's destination.
    if (!it->second.poisoned) {
        auto match = net_.match_path(it->second.path);
        if (match.kind == MatchResult::Kind::Full) {
            out.finalized = finalize_locked(e.process_instance_id, std::move(it->second));
            cache_.erase(it);
        }
    }
    return out;
}

FinalizeOutcome CorrelationEngine::finalize_locked(const std::string& pid, Cached&& inst) {
    FinalizeOutcome out;
    out.instance_id = pid;
    out.key = inst.key;
    out.traversals = std::move(inst.traversals);
    out.first_entry_ms = inst.first_entry_ms;

    if (!inst.poisoned && !inst.path.empty()) {
        auto match = net_.match_path(inst.path);
        if (match.kind == MatchResult::Kind::Full) {
            out.status = InstanceStatus::Completed;
            out.matched_definition = match.full_id;
        } else if (cfg_.mode == MatchMode::Discovery) {
            char seq[16];
            std::snprintf(seq, sizeof(seq), "%04llu", static_cast<unsigned long long>(discovery_seq_++));
            JourneyDefinition def;
            def.id = cfg_.discovered_prefix + seq;
            def.name = inst.path.front() + "-" + inst.path.back();
            def.sections = inst.path;
            try {
                net_.register_journey(def);
                ++auto_registered_;
                out.status = InstanceStatus::Completed;
                out.matched_definition = def.id;
            } catch (const ValidationError&) {
                out.status = InstanceStatus::Discarded;
            }
        }
    }

    if (out.status == InstanceStatus::Completed) {
        metrics_.record_journey(*out.matched_definition, pid, out.traversals, out.first_entry_ms);
        ++completed_;
    } else {
        ++discarded_;
    }
    finalized_[pid] = out;
    return out;
}

std::vector<FinalizeOutcome> CorrelationEngine::finalize_idle(int64_t now_ms, int64_t ttl_ms) {
    std::lock_guard lk(mu_);
    std::vector<FinalizeOutcome> out;
    for (auto it = cache_.begin(); it != cache_.end();) {
        if (now_ms - it->second.last_update_ms > ttl_ms) {
            out.push_back(finalize_locked(it->first, std::move(it->second)));
            it = cache_.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

std::vector<FinalizeOutcome> CorrelationEngine::finalize_all() {
    std::lock_guard lk(mu_);
    std::vector<FinalizeOutcome> out;
    for (auto it = cache_.begin(); it != cache_.end();) {
        out.push_back(finalize_locked(it->first, std::move(it->second)));
        it = cache_.erase(it);
    }
    return out;
}

std::vector<ExBpafEvent> CorrelationEngine::read_stream(const std::string& instance_id) const {
    if (!store_.has_instance(instance_id)) throw UnknownInstance("unknown instance: " + instance_id);
    return store_.instance_events(instance_id);
}

std::optional<JourneyInstance> CorrelationEngine::instance(const std::string& instance_id) const {
    std::lock_guard lk(mu_);
    if (auto it = cache_.find(instance_id); it != cache_.end()) {
        JourneyInstance j;
        j.process_instance_id = instance_id;
        j.correlation = it->second.key;
        j.events = it->second.events;
        j.status = InstanceStatus::InFlight;
        return j;
    }
    if (auto it = finalized_.find(instance_id); it != finalized_.end()) {
        JourneyInstance j;
        j.process_instance_id = instance_id;
        j.correlation = it->second.key;
        j.events = store_.instance_events(instance_id);
        j.matched_definition = it->second.matched_definition;
        j.status = it->second.status;
        return j;
    }
    return std::nullopt;
}

size_t CorrelationEngine::in_flight() const {
    std::lock_guard lk(mu_);
    return cache_.size();
}

uint64_t CorrelationEngine::completed_count() const {
    std::lock_guard lk(mu_);
    return completed_;
}

uint64_t CorrelationEngine::discarded_count() const {
    std::lock_guard lk(mu_);
    return discarded_;
}

uint64_t CorrelationEngine::dropped_samples() const {
    std::lock_guard lk(mu_);
    return dropped_samples_;
}

uint64_t CorrelationEngine::auto_registered() const {
    std::lock_guard lk(mu_);
    return auto_registered_;
}

}  // namespace trafficproc
