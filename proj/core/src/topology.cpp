#include "trafficproc/topology.hpp"

#include <algorithm>
#include <fstream>

#include "trafficproc/strings.hpp"

namespace trafficproc {

// ---------------------------------------------------------------------------
// AreaMap
// ---------------------------------------------------------------------------

const std::string* AreaMap::area_of(const std::string& junction_id) const {
    auto it = junction_area.find(junction_id);
    return it == junction_area.end() ? nullptr : &it->second;
}

std::set<std::string> AreaMap::boundary_junctions(const RoadNetwork& net) const {
    std::set<std::string> out;
    for (const auto& [sid, sec] : net.sections()) {
        const std::string* a = area_of(sec.start_junction);
        const std::string* b = area_of(sec.end_junction);
        if (a && b && *a != *b) {
            out.insert(sec.start_junction);
            out.insert(sec.end_junction);
        }
    }
    return out;
}

std::vector<std::string> AreaMap::validate(const RoadNetwork& net) const {
    std::vector<std::string> errs;
    for (const auto& [jid, j] : net.junctions()) {
        auto it = junction_area.find(jid);
        if (it == junction_area.end())
            errs.push_back("junction " + jid + " not mapped to an area");
        else if (!areas.count(it->second))
            errs.push_back("junction " + jid + " mapped to unknown area " + it->second);
    }
    return errs;
}

AreaMap AreaMap::single(const RoadNetwork& net, const std::string& area_id) {
    AreaMap m;
    m.areas.insert(area_id);
    for (const auto& [jid, j] : net.junctions()) m.junction_area[jid] = area_id;
    return m;
}

AreaMap load_area_map(std::istream& in) {
    AreaMap m;
    std::string line;
    int lineno = 0;
    std::vector<std::string> errs;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto f = split(sv, ',');
        if (f[0] == "A") {
            if (f.size() != 2 || f[1].empty())
                errs.push_back("line " + std::to_string(lineno) + ": A record needs a non-empty area id");
            else
                m.areas.insert(f[1]);
        } else if (f[0] == "JA") {
            if (f.size() != 3 || f[1].empty() || f[2].empty()) {
                errs.push_back("line " + std::to_string(lineno) + ": JA record needs junction and area");
                continue;
            }
            auto [it, fresh] = m.junction_area.emplace(f[1], f[2]);
            if (!fresh && it->second != f[2])
                errs.push_back("line " + std::to_string(lineno) + ": junction " + f[1] +
                               " mapped to two areas (" + it->second + ", " + f[2] + ")");
        }
        // J/S/P records share the file; not ours to parse.
    }
    for (const auto& [j, a] : m.junction_area)
        if (!m.areas.count(a)) errs.push_back("junction " + j + " mapped to undeclared area " + a);
    if (!errs.empty()) throw ValidationError(std::move(errs));
    return m;
}

AreaMap load_area_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open area map file: " + path);
    return load_area_map(in);
}

// ---------------------------------------------------------------------------
// Message codec
// ---------------------------------------------------------------------------

std::string encode_message(const NodeMessage& m) {
    if (const auto* d = std::get_if<Detection>(&m)) return "DET " + format_detection(*d);
    if (const auto* e = std::get_if<ExBpafEvent>(&m)) return "EVT " + encode(*e);
    const auto& b = std::get<BoundarySighting>(m);
    return "BND " + format_detection(Detection{b.plate, b.timestamp_ms, b.area_id, b.junction_id});
}

std::optional<NodeMessage> decode_message(std::string_view line) {
    line = trim(line);
    auto sp = line.find(' ');
    if (sp == std::string_view::npos) return std::nullopt;
    auto kind = line.substr(0, sp);
    auto payload = line.substr(sp + 1);
    if (kind == "DET") {
        auto d = parse_detection(payload);
        if (!d) return std::nullopt;
        return NodeMessage{*d};
    }
    if (kind == "EVT") {
        try {
            return NodeMessage{decode(payload)};
        } catch (const EventDecodeError&) {
            return std::nullopt;
        }
    }
    if (kind == "BND") {
        auto d = parse_detection(payload);
        if (!d) return std::nullopt;
        return NodeMessage{BoundarySighting{d->plate, d->timestamp_ms, d->area_id, d->camera_id}};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// stitch_cross_area
// ---------------------------------------------------------------------------

GlobalJourney stitch_cross_area(const RoadNetwork& net, const AreaMap& areas,
                                std::vector<JourneyFragment> fragments,
                                const BoundarySightingIndex& sightings) {
    GlobalJourney g;
    std::erase_if(fragments, [](const JourneyFragment& f) { return f.sections.empty(); });
    if (fragments.empty()) return g;

    g.key = fragments.front().key;
    g.instance_id = g.key.to_string();
    std::sort(fragments.begin(), fragments.end(), [](const JourneyFragment& a, const JourneyFragment& b) {
        return a.sections.front().entry_ms < b.sections.front().entry_ms;
    });

    const std::string key_str = g.key.to_string();
    std::vector<SectionTime> path = fragments.front().sections;

    for (size_t i = 1; i < fragments.size(); ++i) {
        const auto& next = fragments[i];
        const RoadSection* last_sec = net.section(path.back().section_id);
        const RoadSection* first_sec = net.section(next.sections.front().section_id);
        if (!last_sec || !first_sec) return g;  // Discarded
        const std::string& j_from = last_sec->end_junction;
        const std::string& j_to = first_sec->start_junction;

        auto bridging = net.section_between(j_from, j_to);
        if (!bridging) return g;
        const std::string* area_from = areas.area_of(j_from);
        const std::string* area_to = areas.area_of(j_to);
        if (!area_from || !area_to || *area_from == *area_to) return g;

        // Boundary traversal from the last sighting before the next fragment
        // and the first sighting after it.
        const int64_t next_entry = next.sections.front().entry_ms;
        auto sf = sightings.find({key_str, j_from});
        auto st = sightings.find({key_str, j_to});
        if (sf == sightings.end() || st == sightings.end()) return g;
        int64_t t_from = INT64_MIN;
        for (int64_t t : sf->second)
            if (t <= next_entry && t > t_from) t_from = t;
        int64_t t_to = INT64_MAX;
        for (int64_t t : st->second)
            if (t >= t_from && t < t_to) t_to = t;
        if (t_from == INT64_MIN || t_to == INT64_MAX || t_to <= t_from) return g;

        path.push_back(SectionTime{*bridging, t_from, t_to - t_from});
        path.insert(path.end(), next.sections.begin(), next.sections.end());
    }

    g.path = std::move(path);
    g.total_ms = 0;
    for (const auto& st : g.path) g.total_ms += st.duration_ms;

    std::vector<std::string> section_ids;
    section_ids.reserve(g.path.size());
    for (const auto& st : g.path) section_ids.push_back(st.section_id);
    auto match = net.match_path(section_ids);
    if (match.kind == MatchResult::Kind::Full) {
        g.status = InstanceStatus::Completed;
        g.matched_definition = match.full_id;
    } else {
        g.status = InstanceStatus::InFlight;  // caller resolves by mode
    }
    return g;
}

// ---------------------------------------------------------------------------
// BasuNode
// ---------------------------------------------------------------------------

BasuNode::BasuNode(std::string area_id, std::shared_ptr<RoadNetwork> net, const AreaMap* areas,
                   NodeConfig cfg)
    : area_id_(std::move(area_id)),
      node_id_("BASU-" + area_id_),
      net_(std::move(net)),
      areas_(areas),
      cfg_(std::move(cfg)) {
    if (areas_) boundary_junctions_ = areas_->boundary_junctions(*net_);

    StoreManifest manifest{node_id_, area_id_, 1};
    if (cfg_.store_dir.empty()) store_ = std::make_unique<EventStore>(manifest);
    else store_ = EventStore::open(cfg_.store_dir, manifest);

    gateway_ = std::make_unique<AnprGateway>(*net_, GatewayConfig{"anpr-" + area_id_,
                                                                  cfg_.tz_offset_minutes});
    metrics_ = std::make_unique<MetricsEngine>(net_.get(), MetricsEngine::Config{cfg_.window_len_ms});
    engine_ = std::make_unique<CorrelationEngine>(*net_, *store_, *metrics_,
                                                  CorrelationEngine::Config{cfg_.mode,
                                                                            node_id_ + "-discovered-"});
}

void BasuNode::set_boundary_sink(std::function<void(const BoundarySighting&)> sink) {
    boundary_sink_ = std::move(sink);
}

void BasuNode::set_fragment_sink(std::function<void(const ExBpafEvent&)> sink) {
    fragment_sink_ = std::move(sink);
}

void BasuNode::process_detection(const Detection& d) {
    auto res = gateway_->ingest_detection(d);
    if (res.rejection) rejections_.push_back(*res.rejection);

    // boundary sightings go to GBAS whatever the gateway decided, as long as
    // the camera resolves; GBAS dedups
    if (boundary_sink_ && boundary_junctions_.count(d.camera_id) &&
        (!res.rejection || res.rejection->reason != RejectReason::UnknownCamera)) {
        boundary_sink_(BoundarySighting{d.plate, d.timestamp_ms, area_id_, d.camera_id});
    }

    for (const auto& e : res.events) {
        auto outcome = engine_->process(e);
        if (outcome.finalized) handle_finalized({*outcome.finalized});
    }

    if (last_sweep_ms_ < 0) last_sweep_ms_ = d.timestamp_ms;
    if (d.timestamp_ms - last_sweep_ms_ >= cfg_.sweep_interval_ms) {
        handle_finalized(engine_->finalize_idle(d.timestamp_ms, cfg_.ttl_ms));
        gateway_->evict_stale_trajectories(d.timestamp_ms, cfg_.ttl_ms);
        last_sweep_ms_ = d.timestamp_ms;
    }
}

void BasuNode::handle_finalized(const std::vector<FinalizeOutcome>& outcomes) {
    if (!fragment_sink_) return;
    for (const auto& out : outcomes) {
        if (out.traversals.empty()) continue;
        const RoadSection* first = net_->section(out.traversals.front().section_id);
        const RoadSection* last = net_->section(out.traversals.back().section_id);
        if (!first || !last) continue;
        if (boundary_junctions_.count(first->start_junction) ||
            boundary_junctions_.count(last->end_junction)) {
            for (const auto& e : store_->instance_events(out.instance_id)) fragment_sink_(e);
        }
    }
}

std::vector<FinalizeOutcome> BasuNode::finalize_all() {
    auto outcomes = engine_->finalize_all();
    handle_finalized(outcomes);
    store_->flush();
    return outcomes;
}

// ---------------------------------------------------------------------------
// GbasNode
// ---------------------------------------------------------------------------

GbasNode::GbasNode(std::shared_ptr<RoadNetwork> net, const AreaMap* areas, GbasConfig cfg)
    : net_(std::move(net)), areas_(areas), cfg_(cfg) {
    if (areas_) boundary_junctions_ = areas_->boundary_junctions(*net_);
    metrics_ = std::make_unique<MetricsEngine>(net_.get(), MetricsEngine::Config{cfg_.window_len_ms});
}

bool GbasNode::record_boundary_sighting(const BoundarySighting& s) {
    std::lock_guard lk(mu_);
    if (!boundary_junctions_.count(s.junction_id)) {
        ++rejected_sightings_;
        return false;
    }
    CorrelationKey key{s.plate, date_of_ms(s.timestamp_ms)};
    sightings_[{key.to_string(), s.junction_id}].insert(s.timestamp_ms);
    return true;
}

void GbasNode::ingest_forwarded_event(const ExBpafEvent& e) {
    std::lock_guard lk(mu_);
    if (!seen_event_ids_.insert(e.event_id).second) {
        ++duplicate_events_;
        return;
    }
    events_by_pid_[e.process_instance_id].push_back(e);
}

std::vector<GlobalJourney> GbasNode::finalize() {
    std::lock_guard lk(mu_);
    std::vector<GlobalJourney> done;
    for (auto& [pid, events] : events_by_pid_) {
        // rebuild traversals by pairing OPEN/CLOSED per activity instance
        std::map<std::string, std::pair<const ExBpafEvent*, const ExBpafEvent*>> pairs;
        for (const auto& e : events) {
            auto& p = pairs[e.activity_instance_id];
            if (e.current_state == LifecycleState::OpenRunning) p.first = &e;
            else p.second = &e;
        }
        std::vector<SectionTime> traversals;
        for (const auto& [aid, p] : pairs) {
            if (!p.first || !p.second) continue;
            traversals.push_back(SectionTime{p.first->activity_definition_id, p.first->timestamp_ms,
                                             p.second->timestamp_ms - p.first->timestamp_ms});
        }
        if (traversals.empty()) continue;
        std::sort(traversals.begin(), traversals.end(),
                  [](const SectionTime& a, const SectionTime& b) { return a.entry_ms < b.entry_ms; });

        // split consecutive runs by area into per-area fragments
        std::vector<JourneyFragment> fragments;
        const CorrelationKey key = events.front().correlation;
        for (const auto& st : traversals) {
            const RoadSection* sec = net_->section(st.section_id);
            const std::string* area = sec && areas_ ? areas_->area_of(sec->start_junction) : nullptr;
            const std::string aid = area ? *area : "?";
            if (fragments.empty() || fragments.back().area_id != aid)
                fragments.push_back(JourneyFragment{key, aid, {}});
            fragments.back().sections.push_back(st);
        }
        if (fragments.size() < 2) continue;  // single-area journeys are never materialized here

        GlobalJourney g = stitch_cross_area(*net_, *areas_, std::move(fragments), sightings_);
        if (g.status == InstanceStatus::InFlight) {
            if (cfg_.mode == MatchMode::Discovery) {
                char seq[16];
                std::snprintf(seq, sizeof(seq), "%04llu",
                              static_cast<unsigned long long>(discovery_seq_++));
                JourneyDefinition def;
                def.id = std::string("GBAS-discovered-") + seq;
                def.name = g.path.front().section_id + "-" + g.path.back().section_id;
                for (const auto& st : g.path) def.sections.push_back(st.section_id);
                try {
                    net_->register_journey(def);
                    g.status = InstanceStatus::Completed;
                    g.matched_definition = def.id;
                } catch (const ValidationError&) {
                    g.status = InstanceStatus::Discarded;
                }
            } else {
                g.status = InstanceStatus::Discarded;
            }
        }

        if (g.status == InstanceStatus::Completed) {
            // boundary traversals are invisible to every BASU; their time and
            // flow metrics live here
            for (const auto& st : g.path) {
                const RoadSection* sec = net_->section(st.section_id);
                if (!sec) continue;
                const std::string* a = areas_->area_of(sec->start_junction);
                const std::string* b = areas_->area_of(sec->end_junction);
                if (a && b && *a != *b) {
                    metrics_->record_activity(st.section_id, pid,
                                              pid + ":" + st.section_id + ":" +
                                                  std::to_string(st.entry_ms),
                                              st.duration_ms, st.entry_ms);
                }
            }
            metrics_->record_journey(*g.matched_definition, pid, g.path,
                                     g.path.front().entry_ms);
        }
        journeys_.push_back(g);
        done.push_back(journeys_.back());
    }
    events_by_pid_.clear();
    return done;
}

// ---------------------------------------------------------------------------
// Cluster
// ---------------------------------------------------------------------------

Cluster::Cluster(std::shared_ptr<RoadNetwork> net, AreaMap areas, ClusterConfig cfg)
    : net_(std::move(net)), areas_(std::move(areas)), cfg_(std::move(cfg)) {
    auto errs = areas_.validate(*net_);
    if (!errs.empty()) throw ValidationError(std::move(errs));
    for (const auto& area : areas_.areas) {
        NodeConfig nc = cfg_.node;
        if (!cfg_.store_root.empty()) nc.store_dir = cfg_.store_root + "/BASU-" + area;
        nodes_.emplace(area, std::make_unique<BasuNode>(area, net_, &areas_, nc));
    }
    gbas_ = std::make_unique<GbasNode>(net_, &areas_, GbasConfig{cfg_.node.mode, cfg_.node.window_len_ms});
}

std::optional<std::string> Cluster::route_detection(const Detection& d) const {
    const std::string* area = areas_.area_of(d.camera_id);
    if (!area) return std::nullopt;
    return "BASU-" + *area;
}

std::vector<BasuNode*> Cluster::nodes() {
    std::vector<BasuNode*> out;
    for (auto& [area, node] : nodes_) out.push_back(node.get());
    return out;
}

BasuNode* Cluster::node_for_area(const std::string& area_id) {
    auto it = nodes_.find(area_id);
    return it == nodes_.end() ? nullptr : it->second.get();
}

void Cluster::run(const std::vector<Detection>& stream) {
    using GbasItem = std::variant<BoundarySighting, ExBpafEvent>;
    BoundedQueue<GbasItem> gbas_queue(cfg_.queue_capacity);
    std::map<std::string, std::unique_ptr<BoundedQueue<Detection>>> queues;
    for (auto& [area, node] : nodes_) {
        queues.emplace(area, std::make_unique<BoundedQueue<Detection>>(cfg_.queue_capacity));
        node->set_boundary_sink([&gbas_queue](const BoundarySighting& s) { gbas_queue.push(s); });
        node->set_fragment_sink([&gbas_queue](const ExBpafEvent& e) { gbas_queue.push(e); });
    }

    std::vector<std::thread> workers;
    workers.reserve(nodes_.size());
    for (auto& [area, node] : nodes_) {
        BoundedQueue<Detection>& q = *queues.at(area);
        BasuNode* n = node.get();
        workers.emplace_back([&q, n] {
            while (auto d = q.pop()) n->process_detection(*d);
        });
    }
    std::thread gbas_worker([this, &gbas_queue] {
        while (auto item = gbas_queue.pop()) {
            if (const auto* s = std::get_if<BoundarySighting>(&*item)) gbas_->record_boundary_sighting(*s);
            else gbas_->ingest_forwarded_event(std::get<ExBpafEvent>(*item));
        }
    });

    for (const auto& d : stream) {
        const std::string* area = areas_.area_of(d.camera_id);
        if (!area) {
            ++dropped_unroutable_;
            continue;
        }
        queues.at(*area)->push(d);
    }
    for (auto& [area, q] : queues) q->close();
    for (auto& t : workers) t.join();

    for (auto& [area, node] : nodes_) node->finalize_all();
    gbas_queue.close();
    gbas_worker.join();
    gbas_->finalize();
}

}  // namespace trafficproc
