#include "trafficproc/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "trafficproc/strings.hpp"

namespace trafficproc {

namespace fs = std::filesystem;

namespace {

void write_lines(const std::string& path, const std::vector<std::string>& lines, bool truncated) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& l : lines) out << l << '\n';
    if (truncated) out << "TRUNCATED\n";
}

std::vector<std::string> metric_table(const std::vector<MetricsEngine::Row>& rows) {
    std::vector<std::string> lines;
    lines.push_back("definition_id,window_start_iso,avg_time_s,flow,count");
    for (const auto& r : rows) {
        const double avg =
            r.acc.completed_count ? double(r.acc.sum_duration_ms) / double(r.acc.completed_count) / 1000.0
                                  : 0.0;
        std::ostringstream os;
        os << r.definition_id << ',' << iso_utc_seconds(r.window_start_ms) << ','
           << format_fixed(avg, 6) << ',' << r.acc.entered_count << ',' << r.acc.completed_count;
        lines.push_back(os.str());
    }
    return lines;
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg) {
    RunResult result;

    std::shared_ptr<RoadNetwork> net(load_network_file(cfg.network_file));
    result.net = net;

    AreaMap areas = cfg.areas_file.empty() ? AreaMap::single(*net) : load_area_map_file(cfg.areas_file);
    {
        auto errs = areas.validate(*net);
        if (!errs.empty()) throw ValidationError(std::move(errs));
    }

    ProfileSet profiles = ProfileSet::load_file(cfg.dataset_file);

    std::vector<std::string> journeys = cfg.journeys.empty() ? net->journey_ids() : cfg.journeys;
    std::sort(journeys.begin(), journeys.end());

    Simulator sim(*net, profiles, &areas);
    SimConfig sc;
    sc.date = cfg.date;
    sc.first_period = cfg.first_period;
    sc.last_period = cfg.last_period;
    sc.cv = cfg.cv;
    sc.seed = cfg.seed;
    result.sim = sim.generate(journeys, sc);
    if (cfg.inject_miss_rate > 0)
        result.injected_plates = inject_missed_detections(result.sim, cfg.inject_miss_rate, cfg.seed + 1);
    result.detections = result.sim.detections.size();

    fs::create_directories(cfg.out_dir);

    ClusterConfig cc;
    cc.node.mode = cfg.mode;
    cc.node.ttl_ms = cfg.ttl_min * 60'000;
    cc.node.window_len_ms = cfg.window_min * 60'000;
    cc.node.tz_offset_minutes = cfg.tz_offset_minutes;
    if (cfg.persist_stores) {
        cc.store_root = (fs::path(cfg.out_dir) / "stores").string();
        fs::remove_all(cc.store_root);  // a run owns its output directory
    }
    result.cluster = std::make_unique<Cluster>(net, areas, cc);
    Cluster& cluster = *result.cluster;

    if (!cfg.thresholds_file.empty()) {
        std::ifstream in(cfg.thresholds_file);
        if (!in) throw std::runtime_error("cannot open thresholds file: " + cfg.thresholds_file);
        auto thresholds = load_thresholds(in);
        for (auto* node : cluster.nodes()) node->metrics().set_thresholds(thresholds);
        cluster.gbas().metrics().set_thresholds(thresholds);
    }

    // validation taps: per-node alert and sample capture (each filled by that
    // node's own worker thread only)
    struct Tap {
        std::vector<Alert> alerts;
        std::vector<std::pair<std::string, int64_t>> samples;  // (section, duration_ms)
    };
    std::map<std::string, Tap> taps;  // by node id, plus "GBAS"
    for (auto* node : cluster.nodes()) {
        Tap& tap = taps[node->node_id()];
        node->metrics().set_alert_sink([&tap](const Alert& a) { tap.alerts.push_back(a); });
        node->metrics().set_sample_observer([&tap](const MetricSample& s) {
            tap.samples.emplace_back(s.section_id, s.duration_ms);
        });
    }
    {
        Tap& tap = taps["GBAS"];
        cluster.gbas().metrics().set_alert_sink([&tap](const Alert& a) { tap.alerts.push_back(a); });
        cluster.gbas().metrics().set_sample_observer([&tap](const MetricSample& s) {
            tap.samples.emplace_back(s.section_id, s.duration_ms);
        });
    }

    // route + drain; interruption stops routing and marks every output
    std::vector<Detection> stream;
    if (cfg.interrupt) {
        stream.reserve(result.sim.detections.size());
        for (const auto& d : result.sim.detections) {
            if (cfg.interrupt->load(std::memory_order_relaxed)) {
                result.truncated = true;
                break;
            }
            stream.push_back(d);
        }
        cluster.run(stream);
    } else {
        cluster.run(result.sim.detections);
    }

    // gather
    std::vector<std::string> rejection_lines;
    for (auto* node : cluster.nodes()) {
        result.events += node->store().size();
        result.completed += node->engine().completed_count();
        result.discarded += node->engine().discarded_count();
        for (const auto& r : node->rejections()) rejection_lines.push_back(format_rejection(r));
        result.rejections += node->rejections().size();
    }
    std::sort(rejection_lines.begin(), rejection_lines.end());
    for (const auto& g : cluster.gbas().journeys()) {
        if (g.status == InstanceStatus::Completed) ++result.gbas_completed;
        else ++result.gbas_discarded;
    }

    for (auto& [node_id, tap] : taps) {
        result.alert_log.insert(result.alert_log.end(), tap.alerts.begin(), tap.alerts.end());
        for (const auto& [section, dur] : tap.samples)
            result.link_samples_ms[section].push_back(double(dur));
    }
    std::sort(result.alert_log.begin(), result.alert_log.end(), [](const Alert& a, const Alert& b) {
        return std::tie(a.time_ms, a.target, a.instance_id) < std::tie(b.time_ms, b.target, b.instance_id);
    });
    result.alerts = result.alert_log.size();

    // t-test per link, route order of the simulated journeys
    std::vector<std::string> links;
    {
        std::set<std::string> seen;
        for (const auto& jid : journeys) {
            auto def = net->journey(jid);
            for (const auto& s : def->sections)
                if (seen.insert(s).second) links.push_back(s);
        }
    }
    for (const auto& link : links) {
        auto it = result.link_samples_ms.find(link);
        if (it == result.link_samples_ms.end() || it->second.size() < 2) continue;
        const LinkProfile* prof = profiles.find(link, cfg.date, cfg.first_period);
        if (!prof) continue;
        stats::TTestRow row;
        row.link_id = link;
        row.dataset_mean = prof->avg_journey_time_s;
        // test in the exact integer-millisecond domain (t and p are
        // scale-free); report the moments in seconds
        const double mu0_ms = double(std::llround(prof->avg_journey_time_s * 1000.0));
        row.test = stats::t_test_one_sample(it->second, mu0_ms, cfg.alpha);
        row.test.sample_mean /= 1000.0;
        row.test.sample_sd /= 1000.0;
        row.test.mu0 /= 1000.0;
        result.ttest.push_back(row);
    }

    // outputs
    const bool trunc = result.truncated;
    {
        std::vector<std::string> lines;
        lines.reserve(result.sim.detections.size());
        for (const auto& d : result.sim.detections) lines.push_back(format_detection(d));
        write_lines((fs::path(cfg.out_dir) / "detections.csv").string(), lines, trunc);
    }
    {
        std::vector<std::string> lines;
        lines.reserve(result.sim.ground_truth.size());
        for (const auto& g : result.sim.ground_truth) lines.push_back(format_ground_truth(g));
        write_lines((fs::path(cfg.out_dir) / "ground_truth.csv").string(), lines, trunc);
    }
    write_lines((fs::path(cfg.out_dir) / "rejections.log").string(), rejection_lines, trunc);
    {
        std::vector<std::string> lines;
        for (const auto& a : result.alert_log) lines.push_back(format_alert(a));
        write_lines((fs::path(cfg.out_dir) / "alerts.log").string(), lines, trunc);
    }
    {
        std::vector<MetricsEngine::Row> activity, journey;
        for (auto* node : cluster.nodes()) {
            for (auto& r : node->metrics().activity_rows()) activity.push_back(r);
            for (auto& r : node->metrics().journey_rows()) journey.push_back(r);
        }
        for (auto& r : cluster.gbas().metrics().activity_rows()) activity.push_back(r);
        for (auto& r : cluster.gbas().metrics().journey_rows()) journey.push_back(r);
        auto by_key = [](const MetricsEngine::Row& a, const MetricsEngine::Row& b) {
            return std::tie(a.definition_id, a.window_start_ms) <
                   std::tie(b.definition_id, b.window_start_ms);
        };
        std::sort(activity.begin(), activity.end(), by_key);
        std::sort(journey.begin(), journey.end(), by_key);
        write_lines((fs::path(cfg.out_dir) / "metrics_activity.csv").string(), metric_table(activity),
                    trunc);
        write_lines((fs::path(cfg.out_dir) / "metrics_journeys.csv").string(), metric_table(journey),
                    trunc);
    }
    {
        std::vector<std::string> lines;
        lines.push_back("instance_id,status,matched_definition,components,total_s");
        for (const auto& g : cluster.gbas().journeys()) {
            std::ostringstream os;
            os << g.instance_id << ',' << status_token(g.status) << ','
               << (g.matched_definition ? *g.matched_definition : "") << ',' << g.path.size() << ','
               << format_fixed(double(g.total_ms) / 1000.0, 3);
            lines.push_back(os.str());
        }
        write_lines((fs::path(cfg.out_dir) / "gbas_journeys.csv").string(), lines, trunc);
    }
    {
        std::vector<std::string> lines;
        lines.push_back(stats::ttest_report_header());
        for (const auto& row : result.ttest) lines.push_back(stats::ttest_report_row(row));
        write_lines((fs::path(cfg.out_dir) / "ttest_report.csv").string(), lines, trunc);
    }
    {
        std::vector<std::string> lines;
        auto kv = [&](const std::string& k, uint64_t v) { lines.push_back(k + "=" + std::to_string(v)); };
        kv("detections", result.detections);
        kv("injected_misses", result.injected_plates.size());
        kv("events", result.events);
        kv("rejections", result.rejections);
        kv("instances_completed", result.completed);
        kv("instances_discarded", result.discarded);
        kv("gbas_completed", result.gbas_completed);
        kv("gbas_discarded", result.gbas_discarded);
        kv("alerts", result.alerts);
        kv("dropped_unroutable", cluster.dropped_unroutable());
        write_lines((fs::path(cfg.out_dir) / "summary.txt").string(), lines, trunc);
    }

    return result;
}

Replayed replay_stores(const std::string& network_file, const std::string& stores_dir, MatchMode mode,
                       int64_t window_min) {
    Replayed out;
    out.net = std::shared_ptr<RoadNetwork>(load_network_file(network_file));

    std::vector<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(stores_dir))
        if (entry.is_directory()) dirs.push_back(entry.path().string());
    std::sort(dirs.begin(), dirs.end());

    for (const auto& dir : dirs) {
        auto persisted = EventStore::open(dir, {});  // validates manifest, recovery scan
        ReplayedNode node;
        node.node_id = persisted->manifest().node_id;
        node.store = std::make_unique<EventStore>(persisted->manifest());
        node.metrics =
            std::make_unique<MetricsEngine>(out.net.get(), MetricsEngine::Config{window_min * 60'000});
        node.engine = std::make_unique<CorrelationEngine>(
            *out.net, *node.store, *node.metrics,
            CorrelationEngine::Config{mode, node.node_id + "-replay-"});
        persisted.reset();
        // feed the persisted log (arrival order) through a fresh engine so
        // metrics and instance state rebuild
        std::ifstream in(fs::path(dir) / "events.log");
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            node.engine->process(decode(line));
        }
        node.engine->finalize_all();
        out.nodes.push_back(std::move(node));
    }
    std::sort(out.nodes.begin(), out.nodes.end(),
              [](const ReplayedNode& a, const ReplayedNode& b) { return a.node_id < b.node_id; });
    return out;
}

}  // namespace trafficproc
