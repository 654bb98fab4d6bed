#include "trafficproc/metrics.hpp"

#include <sstream>

#include "trafficproc/strings.hpp"

namespace trafficproc {

std::string format_alert(const Alert& a) {
    std::ostringstream os;
    os << iso_utc_ms(a.time_ms) << ',' << a.target << ',' << a.instance_id << ','
       << format_fixed(a.observed_s, 3) << ',' << format_fixed(a.bound_s, 3);
    return os.str();
}

MetricsEngine::MetricsEngine(const RoadNetwork* net) : MetricsEngine(net, Config{}) {}

MetricsEngine::MetricsEngine(const RoadNetwork* net, Config cfg) : net_(net), cfg_(cfg) {}

Window MetricsEngine::window_of(int64_t ms) const {
    return Window{window_start(ms, cfg_.window_len_ms), cfg_.window_len_ms};
}

MetricSample MetricsEngine::record_activity(const std::string& section_id, const std::string& instance_id,
                                            const std::string& activity_instance_id, int64_t duration_ms,
                                            int64_t entry_ms) {
    if (duration_ms <= 0) throw MetricsError("activity duration must be positive");
    MetricSample sample{section_id, instance_id, activity_instance_id,
                        duration_ms,  entry_ms,    window_of(entry_ms)};
    std::vector<Alert> alerts;
    {
        std::lock_guard lk(mu_);
        auto& acc = activity_acc_[{section_id, sample.window.start_ms}];
        acc.sum_duration_ms += duration_ms;
        acc.entered_count += 1;
        acc.completed_count += 1;
        ++samples_;
        alerts = evaluate_thresholds_locked(sample);
        alerts_ += alerts.size();
    }
    for (const auto& a : alerts)
        if (alert_sink_) alert_sink_(a);
    if (sample_observer_) sample_observer_(sample);
    return sample;
}

void MetricsEngine::record_journey(const std::string& definition_id, const std::string& instance_id,
                                   std::vector<SectionTime> path, int64_t first_entry_ms) {
    int64_t total = 0;
    for (const auto& st : path) total += st.duration_ms;
    std::vector<Alert> alerts;
    {
        std::lock_guard lk(mu_);
        auto& acc = journey_acc_[{definition_id, window_start(first_entry_ms, cfg_.window_len_ms)}];
        acc.sum_duration_ms += total;
        acc.entered_count += 1;
        acc.completed_count += 1;
        for (const auto& st : path) {
            def_section_flow_[{definition_id, st.section_id,
                               window_start(st.entry_ms, cfg_.window_len_ms)}] += 1;
        }
        ++journeys_;
        auto it = thresholds_.find(definition_id);
        if (it != thresholds_.end() && it->second.enabled &&
            double(total) / 1000.0 > it->second.bound_s) {
            alerts.push_back(Alert{first_entry_ms + total, definition_id, instance_id,
                                   double(total) / 1000.0, it->second.bound_s});
        }
        alerts_ += alerts.size();
        completed_[instance_id] = CompletedJourney{definition_id, std::move(path)};
    }
    for (const auto& a : alerts)
        if (alert_sink_) alert_sink_(a);
}

std::vector<Alert> MetricsEngine::evaluate_thresholds_locked(const MetricSample& sample) const {
    std::vector<Alert> out;
    auto it = thresholds_.find(sample.section_id);
    if (it == thresholds_.end() || !it->second.enabled) return out;
    const double observed = sample.duration_s();
    if (observed > it->second.bound_s) {
        out.push_back(Alert{sample.entry_ms + sample.duration_ms, sample.section_id,
                            sample.process_instance_id, observed, it->second.bound_s});
    }
    return out;
}

std::vector<Alert> MetricsEngine::evaluate_thresholds(const MetricSample& sample) const {
    std::lock_guard lk(mu_);
    return evaluate_thresholds_locked(sample);
}

std::vector<Alert> MetricsEngine::evaluate_journey_threshold(const std::string& definition_id,
                                                             const std::string& instance_id,
                                                             int64_t total_ms, int64_t time_ms) const {
    std::lock_guard lk(mu_);
    std::vector<Alert> out;
    auto it = thresholds_.find(definition_id);
    if (it == thresholds_.end() || !it->second.enabled) return out;
    const double observed = double(total_ms) / 1000.0;
    if (observed > it->second.bound_s)
        out.push_back(Alert{time_ms, definition_id, instance_id, observed, it->second.bound_s});
    return out;
}

void MetricsEngine::set_thresholds(std::vector<Threshold> thresholds) {
    std::lock_guard lk(mu_);
    thresholds_.clear();
    for (auto& t : thresholds) {
        if (t.bound_s <= 0) throw MetricsError("threshold bound must be positive: " + t.target);
        thresholds_[t.target] = t;
    }
}

void MetricsEngine::set_alert_sink(std::function<void(const Alert&)> sink) {
    alert_sink_ = std::move(sink);
}

void MetricsEngine::set_sample_observer(std::function<void(const MetricSample&)> observer) {
    sample_observer_ = std::move(observer);
}

std::optional<double> MetricsEngine::avg_activity_time(const std::string& section_id,
                                                       int64_t window_start_ms) const {
    std::lock_guard lk(mu_);
    auto it = activity_acc_.find({section_id, window_start_ms});
    if (it == activity_acc_.end() || it->second.completed_count == 0) return std::nullopt;
    return double(it->second.sum_duration_ms) / double(it->second.completed_count) / 1000.0;
}

int64_t MetricsEngine::activity_flow(const std::string& section_id, int64_t window_start_ms) const {
    std::lock_guard lk(mu_);
    auto it = activity_acc_.find({section_id, window_start_ms});
    return it == activity_acc_.end() ? 0 : it->second.entered_count;
}

std::vector<std::pair<std::string, double>> MetricsEngine::journey_time_vector(
    const std::string& instance_id) const {
    std::lock_guard lk(mu_);
    auto it = completed_.find(instance_id);
    if (it == completed_.end()) throw MetricsError("instance not completed: " + instance_id);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(it->second.path.size());
    for (const auto& st : it->second.path)
        out.emplace_back(st.section_id, double(st.duration_ms) / 1000.0);
    return out;
}

double MetricsEngine::journey_time_s(const std::string& instance_id) const {
    std::lock_guard lk(mu_);
    auto it = completed_.find(instance_id);
    if (it == completed_.end()) throw MetricsError("instance not completed: " + instance_id);
    int64_t total = 0;
    for (const auto& st : it->second.path) total += st.duration_ms;
    return double(total) / 1000.0;
}

std::vector<std::pair<std::string, int64_t>> MetricsEngine::journey_flow_vector(
    const std::string& definition_id, int64_t window_start_ms) const {
    if (!net_) throw MetricsError("journey_flow_vector requires a network");
    auto def = net_->journey(definition_id);
    if (!def) throw MetricsError("unknown definition: " + definition_id);
    std::lock_guard lk(mu_);
    std::vector<std::pair<std::string, int64_t>> out;
    out.reserve(def->sections.size());
    for (const auto& s : def->sections) {
        auto it = def_section_flow_.find({definition_id, s, window_start_ms});
        out.emplace_back(s, it == def_section_flow_.end() ? 0 : it->second);
    }
    return out;
}

std::optional<double> MetricsEngine::avg_journey_time(const std::string& definition_id,
                                                      int64_t window_start_ms) const {
    if (net_ && !net_->journey(definition_id)) throw MetricsError("unknown definition: " + definition_id);
    std::lock_guard lk(mu_);
    auto it = journey_acc_.find({definition_id, window_start_ms});
    if (it == journey_acc_.end() || it->second.completed_count == 0) return std::nullopt;
    return double(it->second.sum_duration_ms) / double(it->second.completed_count) / 1000.0;
}

std::optional<DefinitionAccumulator> MetricsEngine::activity_accumulator(const std::string& section_id,
                                                                         int64_t window_start_ms) const {
    std::lock_guard lk(mu_);
    auto it = activity_acc_.find({section_id, window_start_ms});
    if (it == activity_acc_.end()) return std::nullopt;
    return it->second;
}

std::optional<DefinitionAccumulator> MetricsEngine::journey_accumulator(const std::string& definition_id,
                                                                        int64_t window_start_ms) const {
    std::lock_guard lk(mu_);
    auto it = journey_acc_.find({definition_id, window_start_ms});
    if (it == journey_acc_.end()) return std::nullopt;
    return it->second;
}

std::vector<MetricsEngine::Row> MetricsEngine::activity_rows() const {
    std::lock_guard lk(mu_);
    std::vector<Row> out;
    out.reserve(activity_acc_.size());
    for (const auto& [key, acc] : activity_acc_) out.push_back({key.first, key.second, acc});
    return out;
}

std::vector<MetricsEngine::Row> MetricsEngine::journey_rows() const {
    std::lock_guard lk(mu_);
    std::vector<Row> out;
    out.reserve(journey_acc_.size());
    for (const auto& [key, acc] : journey_acc_) out.push_back({key.first, key.second, acc});
    return out;
}

uint64_t MetricsEngine::samples_recorded() const {
    std::lock_guard lk(mu_);
    return samples_;
}

uint64_t MetricsEngine::journeys_recorded() const {
    std::lock_guard lk(mu_);
    return journeys_;
}

uint64_t MetricsEngine::alerts_emitted() const {
    std::lock_guard lk(mu_);
    return alerts_;
}

std::vector<Threshold> load_thresholds(std::istream& in) {
    std::vector<Threshold> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto f = split(sv, ',');
        if (f.size() != 3) throw MetricsError("thresholds line " + std::to_string(lineno) + ": need 3 fields");
        auto bound = parse_double(f[1]);
        if (!bound || *bound <= 0)
            throw MetricsError("thresholds line " + std::to_string(lineno) + ": bad bound " + f[1]);
        bool enabled;
        if (f[2] == "true" || f[2] == "1") enabled = true;
        else if (f[2] == "false" || f[2] == "0") enabled = false;
        else throw MetricsError("thresholds line " + std::to_string(lineno) + ": bad enabled flag " + f[2]);
        out.push_back(Threshold{f[0], *bound, enabled});
    }
    return out;
}

}  // namespace trafficproc
