#include "trafficproc/store.hpp"

#include <algorithm>
#include <filesystem>
#include <mutex>

#include "trafficproc/strings.hpp"

namespace trafficproc {

namespace fs = std::filesystem;

EventStore::EventStore(StoreManifest manifest) : manifest_(std::move(manifest)) {
    log_.reserve(1024);
}

std::unique_ptr<EventStore> EventStore::open(const std::string& dir, StoreManifest manifest) {
    fs::create_directories(dir);
    const fs::path manifest_path = fs::path(dir) / "manifest";
    const fs::path log_path = fs::path(dir) / "events.log";

    auto store = std::make_unique<EventStore>(manifest);
    store->dir_ = dir;

    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        std::string line;
        while (std::getline(in, line)) {
            auto sv = trim(line);
            if (auto pos = sv.find('='); pos != std::string_view::npos) {
                auto key = sv.substr(0, pos);
                auto value = std::string(sv.substr(pos + 1));
                if (key == "node_id") store->manifest_.node_id = value;
                else if (key == "area_id") store->manifest_.area_id = value;
                else if (key == "format_version") store->manifest_.format_version = int(*parse_ll(value));
            }
        }
        if (store->manifest_.format_version != 1)
            throw StoreError("unsupported store format version in " + dir);
    } else {
        std::ofstream out(manifest_path);
        out << "node_id=" << store->manifest_.node_id << "\n"
            << "area_id=" << store->manifest_.area_id << "\n"
            << "format_version=" << store->manifest_.format_version << "\n";
    }

    if (fs::exists(log_path)) {
        std::ifstream in(log_path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            ExBpafEvent e;
            try {
                e = decode(line);
            } catch (const EventDecodeError& err) {
                throw StoreError("corrupt events.log at line " + std::to_string(lineno) + ": " +
                                 err.what());
            }
            if (store->event_ids_.insert(e.event_id).second) {
                store->log_.push_back(std::move(e));
                store->index_event(store->log_.back(), store->log_.size() - 1);
            }
        }
    }

    store->out_.open(log_path, std::ios::app);
    if (!store->out_) throw StoreError("cannot open events.log for append in " + dir);
    return store;
}

void EventStore::index_event(const ExBpafEvent& e, size_t pos) {
    latest_[e.correlation.to_string()] = pos;
    by_instance_[e.process_instance_id].push_back(pos);
}

bool EventStore::append(const ExBpafEvent& e) {
    const int64_t t0 = append_rec_ ? now_ns() : 0;
    bool appended;
    {
        std::unique_lock lk(mu_);
        appended = event_ids_.insert(e.event_id).second;
        if (appended) {
            log_.push_back(e);
            index_event(log_.back(), log_.size() - 1);
            if (out_.is_open()) out_ << encode(e) << '\n';
            appends_.fetch_add(1, std::memory_order_relaxed);
        }
    }
    if (append_rec_) append_rec_->record(now_ns() - t0);
    return appended;  // false: idempotent replay of a known event_id
}

std::optional<ExBpafEvent> EventStore::latest_for(const CorrelationKey& key) const {
    const int64_t t0 = read_rec_ ? now_ns() : 0;
    reads_.fetch_add(1, std::memory_order_relaxed);
    std::optional<ExBpafEvent> out;
    {
        std::shared_lock lk(mu_);
        auto it = latest_.find(key.to_string());
        if (it != latest_.end()) out = log_[it->second];
    }
    if (read_rec_) read_rec_->record(now_ns() - t0);
    return out;
}

bool EventStore::has_instance(const std::string& process_instance_id) const {
    std::shared_lock lk(mu_);
    return by_instance_.count(process_instance_id) > 0;
}

std::vector<ExBpafEvent> EventStore::instance_events(const std::string& process_instance_id) const {
    std::shared_lock lk(mu_);
    auto it = by_instance_.find(process_instance_id);
    if (it == by_instance_.end()) return {};
    std::vector<ExBpafEvent> out;
    out.reserve(it->second.size());
    for (size_t pos : it->second) out.push_back(log_[pos]);
    std::stable_sort(out.begin(), out.end(),
                     [](const ExBpafEvent& a, const ExBpafEvent& b) { return a.timestamp_ms < b.timestamp_ms; });
    return out;
}

size_t EventStore::size() const {
    std::shared_lock lk(mu_);
    return log_.size();
}

void EventStore::flush() {
    std::unique_lock lk(mu_);
    if (out_.is_open()) out_.flush();
}

}  // namespace trafficproc
