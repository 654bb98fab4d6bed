// trafficproc: validate networks, run simulations, drive the pipeline, query
// metrics, run the dataset validation and benchmarks.

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "trafficproc/bench.hpp"
#include "trafficproc/demo.hpp"
#include "trafficproc/runner.hpp"
#include "trafficproc/stats.hpp"
#include "trafficproc/strings.hpp"

namespace fs = std::filesystem;
using namespace trafficproc;

namespace {

// exit codes: 0 success, 1 domain failure, 2 usage/IO
constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_interrupted{false};
void on_sigint(int) { g_interrupted.store(true); }

std::string default_out_dir() {
    if (const char* env = std::getenv("TRAFFICPROC_OUT")) return env;
    return "out";
}

int cmd_validate(const std::string& network_file) {
    if (!fs::exists(network_file)) {
        std::cerr << "no such file: " << network_file << "\n";
        return kUsage;
    }
    try {
        auto net = load_network_file(network_file);
        std::cout << "ok: " << net->junction_count() << " junctions, " << net->section_count()
                  << " sections, " << net->road_count() << " roads, " << net->journey_count()
                  << " journeys\n";
        return kOk;
    } catch (const ValidationError& e) {
        for (const auto& v : e.violations()) std::cout << v << "\n";
        return kDomain;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    }
}

MatchMode parse_mode(const std::string& mode) {
    if (mode == "strict") return MatchMode::Strict;
    if (mode == "discovery") return MatchMode::Discovery;
    throw CLI::ValidationError("--mode", "must be strict or discovery");
}

struct CommonFlags {
    std::string network, areas, dataset, journeys_csv, thresholds, out = default_out_dir();
    std::string mode = "strict", date = "2013-05-01";
    uint64_t seed = 42;
    int64_t ttl_min = 30, window_min = 15;
    double cv = 0.05;
    int from_period = 32, to_period = 35;
    double inject_miss = 0.0;

    void add_to(CLI::App& app, bool with_areas = true) {
        app.add_option("--network", network, "network definition file")->required();
        if (with_areas) app.add_option("--areas", areas, "area map file");
        app.add_option("--dataset", dataset, "link profile CSV")->required();
        app.add_option("--journeys", journeys_csv, "journey ids, comma separated (default: all)");
        app.add_option("--seed", seed, "simulation seed");
        app.add_option("--mode", mode, "strict|discovery");
        app.add_option("--ttl-min", ttl_min, "trajectory/instance idle TTL, minutes");
        app.add_option("--window-min", window_min, "aggregation window, minutes");
        app.add_option("--cv", cv, "coefficient of variation of link times");
        app.add_option("--thresholds", thresholds, "threshold config file");
        app.add_option("--out", out, "output directory (env TRAFFICPROC_OUT)");
        app.add_option("--date", date, "simulated date YYYY-MM-DD");
        app.add_option("--from-period", from_period, "first 15-min period (0-95)");
        app.add_option("--to-period", to_period, "last 15-min period, inclusive");
        app.add_option("--inject-miss", inject_miss, "fraction of vehicles losing one detection");
    }

    RunConfig to_run_config() const {
        RunConfig cfg;
        cfg.network_file = network;
        cfg.areas_file = areas;
        cfg.dataset_file = dataset;
        cfg.thresholds_file = thresholds;
        cfg.out_dir = out;
        if (!journeys_csv.empty())
            for (auto& j : split(journeys_csv, ',')) cfg.journeys.push_back(j);
        cfg.seed = seed;
        cfg.mode = parse_mode(mode);
        cfg.ttl_min = ttl_min;
        cfg.window_min = window_min;
        cfg.cv = cv;
        auto d = parse_date(date);
        if (!d) throw CLI::ValidationError("--date", "must be YYYY-MM-DD");
        cfg.date = *d;
        cfg.first_period = from_period;
        cfg.last_period = to_period;
        cfg.inject_miss_rate = inject_miss;
        cfg.interrupt = &g_interrupted;
        return cfg;
    }
};

int cmd_simulate(const CommonFlags& flags) {
    auto net = std::shared_ptr<RoadNetwork>(load_network_file(flags.network));
    AreaMap areas =
        flags.areas.empty() ? AreaMap::single(*net) : load_area_map_file(flags.areas);
    auto profiles = ProfileSet::load_file(flags.dataset);
    for (const auto& w : profiles.warnings()) std::cerr << "warning: " << w << "\n";

    std::vector<std::string> journeys;
    if (!flags.journeys_csv.empty())
        for (auto& j : split(flags.journeys_csv, ',')) journeys.push_back(j);
    else
        journeys = net->journey_ids();
    std::sort(journeys.begin(), journeys.end());

    Simulator sim(*net, profiles, &areas);
    SimConfig sc;
    auto d = parse_date(flags.date);
    if (!d) throw CLI::ValidationError("--date", "must be YYYY-MM-DD");
    sc.date = *d;
    sc.first_period = flags.from_period;
    sc.last_period = flags.to_period;
    sc.cv = flags.cv;
    sc.seed = flags.seed;
    auto out = sim.generate(journeys, sc);
    if (flags.inject_miss > 0) inject_missed_detections(out, flags.inject_miss, flags.seed + 1);

    fs::create_directories(flags.out);
    {
        std::ofstream f(fs::path(flags.out) / "detections.csv");
        for (const auto& det : out.detections) f << format_detection(det) << '\n';
    }
    {
        std::ofstream f(fs::path(flags.out) / "ground_truth.csv");
        for (const auto& gt : out.ground_truth) f << format_ground_truth(gt) << '\n';
    }
    std::cout << out.detections.size() << " detections, " << out.ground_truth.size() << " vehicles -> "
              << flags.out << "\n";
    return kOk;
}

int cmd_run(const CommonFlags& flags) {
    auto cfg = flags.to_run_config();
    auto result = run_pipeline(cfg);
    std::cout << "detections=" << result.detections << " events=" << result.events
              << " completed=" << result.completed + result.gbas_completed
              << " discarded=" << result.discarded + result.gbas_discarded
              << " rejections=" << result.rejections << " alerts=" << result.alerts << "\n";
    uint64_t rejected_links = 0;
    for (const auto& row : result.ttest)
        if (row.test.reject) ++rejected_links;
    std::cout << "t-test: " << result.ttest.size() - rejected_links << "/" << result.ttest.size()
              << " links consistent with the dataset at alpha=" << format_fixed(cfg.alpha, 2) << "\n";
    std::cout << "outputs in " << cfg.out_dir << (result.truncated ? " (TRUNCATED)" : "") << "\n";
    return result.truncated ? kDomain : kOk;
}

int cmd_metrics(const std::string& network_file, const std::string& run_dir, const std::string& target,
                const std::string& mode, int64_t window_min, const std::string& from,
                const std::string& to, bool vector_query) {
    const std::string stores = (fs::path(run_dir) / "stores").string();
    if (!fs::exists(stores)) {
        std::cerr << "no stores under " << run_dir << " (run `trafficproc run` first)\n";
        return kUsage;
    }
    auto replayed = replay_stores(network_file, stores, parse_mode(mode), window_min);

    auto from_ms = parse_iso_utc(from);
    auto to_ms = parse_iso_utc(to);
    if (!from_ms || !to_ms) {
        std::cerr << "bad --from/--to (use YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ)\n";
        return kUsage;
    }
    const int64_t window_ms = window_min * 60'000;
    const int64_t first = window_start(*from_ms, window_ms);

    const bool is_journey = replayed.net->journey(target).has_value();
    if (!is_journey && !replayed.net->section(target)) {
        std::cerr << "unknown definition: " << target << "\n";
        return kDomain;
    }

    if (vector_query && !is_journey) {
        std::cerr << "--vector needs a journey definition id\n";
        return kUsage;
    }

    if (vector_query) {
        std::cout << "definition_id,window_start_iso,component_index,section_id,flow\n";
        for (int64_t w = first; w < *to_ms; w += window_ms) {
            // merged across nodes: component-wise sums
            auto def = replayed.net->journey(target);
            std::vector<int64_t> flows(def->sections.size(), 0);
            for (auto& node : replayed.nodes) {
                auto v = node.metrics->journey_flow_vector(target, w);
                for (size_t i = 0; i < v.size(); ++i) flows[i] += v[i].second;
            }
            for (size_t i = 0; i < flows.size(); ++i) {
                std::cout << target << ',' << iso_utc_seconds(w) << ',' << i << ','
                          << def->sections[i] << ',' << flows[i] << "\n";
            }
        }
        return kOk;
    }

    std::cout << "definition_id,window_start_iso,avg_time_s,flow,count\n";
    for (int64_t w = first; w < *to_ms; w += window_ms) {
        int64_t sum_ms = 0, count = 0, flow = 0;
        for (auto& node : replayed.nodes) {
            auto acc = is_journey ? node.metrics->journey_accumulator(target, w)
                                  : node.metrics->activity_accumulator(target, w);
            if (!acc) continue;
            sum_ms += acc->sum_duration_ms;
            count += acc->completed_count;
            flow += acc->entered_count;
        }
        if (count == 0) continue;
        std::cout << target << ',' << iso_utc_seconds(w) << ','
                  << format_fixed(double(sum_ms) / double(count) / 1000.0, 6) << ',' << flow << ','
                  << count << "\n";
    }
    return kOk;
}

int cmd_ttest(const std::string& network_file, const std::string& run_dir, const std::string& dataset,
              const std::string& mode, int64_t window_min, const std::string& date_str, int period,
              double alpha, bool paired) {
    const std::string stores = (fs::path(run_dir) / "stores").string();
    if (!fs::exists(stores)) {
        std::cerr << "no stores under " << run_dir << "\n";
        return kUsage;
    }
    auto profiles = ProfileSet::load_file(dataset);
    auto date = parse_date(date_str);
    if (!date) {
        std::cerr << "bad --date\n";
        return kUsage;
    }
    auto replayed = replay_stores(network_file, stores, parse_mode(mode), window_min);

    // per-link observed samples in exact integer milliseconds: store scan
    // order per node, nodes sorted
    std::map<std::string, std::vector<double>> samples_ms;
    std::map<std::string, std::vector<std::pair<int64_t, int64_t>>> per_window;  // for paired mode
    for (auto& node : replayed.nodes) {
        std::ifstream in(fs::path(stores) / node.node_id / "events.log");
        std::string line;
        std::map<std::string, int64_t> open_ts;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto e = decode(line);
            if (e.current_state == LifecycleState::OpenRunning) {
                open_ts[e.activity_instance_id] = e.timestamp_ms;
            } else if (auto it = open_ts.find(e.activity_instance_id); it != open_ts.end()) {
                const int64_t dur_ms = e.timestamp_ms - it->second;
                samples_ms[e.activity_definition_id].push_back(double(dur_ms));
                per_window[e.activity_definition_id].emplace_back(it->second, dur_ms);
                open_ts.erase(it);
            }
        }
    }

    std::cout << stats::ttest_report_header() << "\n";
    int rejected = 0, rows = 0;
    for (auto& [link, obs] : samples_ms) {
        const LinkProfile* prof = profiles.find(link, *date, period);
        if (!prof || obs.size() < 2) continue;
        stats::TTestRow row;
        row.link_id = link;
        row.dataset_mean = prof->avg_journey_time_s;
        if (paired) {
            // pair per-period observed means against the per-period dataset means
            std::map<int, std::vector<int64_t>> by_period;
            for (const auto& [entry_ms, dur_ms] : per_window[link]) {
                const int p = int((entry_ms - ms_at_midnight_utc(*date)) / (15 * 60 * 1000));
                by_period[p].push_back(dur_ms);
            }
            std::vector<double> observed_means, dataset_means;
            for (auto& [p, vals] : by_period) {
                const LinkProfile* pp = profiles.find(link, *date, p);
                if (!pp || vals.size() < 2) continue;
                int64_t sum = 0;
                for (int64_t v : vals) sum += v;
                observed_means.push_back(double(sum) / double(vals.size()));
                dataset_means.push_back(double(std::llround(pp->avg_journey_time_s * 1000.0)));
            }
            if (observed_means.size() < 2) continue;
            row.test = stats::t_test_paired(observed_means, dataset_means, alpha);
        } else {
            const double mu0_ms = double(std::llround(prof->avg_journey_time_s * 1000.0));
            row.test = stats::t_test_one_sample(obs, mu0_ms, alpha);
        }
        row.test.sample_mean /= 1000.0;
        row.test.sample_sd /= 1000.0;
        row.test.mu0 /= 1000.0;
        std::cout << stats::ttest_report_row(row) << "\n";
        ++rows;
        if (row.test.reject) ++rejected;
    }
    std::cerr << rows - rejected << "/" << rows << " links consistent at alpha=" << alpha << "\n";
    return rejected == 0 ? kOk : kDomain;
}

int cmd_bench(uint64_t events, uint64_t seed, bool serial, const std::string& out_file) {
    BenchConfig cfg;
    cfg.events = events;
    cfg.seed = seed;
    cfg.serial_section = serial;
    auto result = run_bench(cfg);
    const std::string text = bench_report_text(cfg, result);
    std::cout << text;
    if (!out_file.empty()) {
        std::ofstream f(out_file);
        f << text;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"process-centric traffic analytics over ANPR detections"};
    app.require_subcommand(1);

    std::string network_file;
    auto* validate = app.add_subcommand("validate", "check a network definition file");
    validate->add_option("network", network_file, "network definition file")->required();

    CommonFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "generate detections and ground truth only");
    sim_flags.add_to(*simulate);

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "full pipeline: simulate, correlate, metrics, validate");
    run_flags.add_to(*run);

    std::string m_network, m_dir = default_out_dir(), m_target, m_mode = "strict";
    std::string m_from = "1970-01-01", m_to = "2100-01-01";
    int64_t m_window_min = 15;
    bool m_vector = false;
    auto* metrics = app.add_subcommand("metrics", "query KPIs from a finished run");
    metrics->add_option("target", m_target, "section or journey definition id")->required();
    metrics->add_option("--network", m_network, "network definition file")->required();
    metrics->add_option("--run-dir", m_dir, "run output directory");
    metrics->add_option("--mode", m_mode, "strict|discovery (must match the run)");
    metrics->add_option("--window-min", m_window_min, "aggregation window, minutes");
    metrics->add_option("--from", m_from, "window range start (ISO)");
    metrics->add_option("--to", m_to, "window range end (ISO, exclusive)");
    metrics->add_flag("--vector", m_vector, "per-component journey flow vector");

    std::string t_network, t_dir = default_out_dir(), t_dataset, t_mode = "strict", t_date = "2013-05-01";
    int64_t t_window_min = 15;
    int t_period = 32;
    double t_alpha = 0.01;
    bool t_paired = false;
    auto* ttest = app.add_subcommand("ttest", "t-test run output against the dataset means");
    ttest->add_option("--network", t_network, "network definition file")->required();
    ttest->add_option("--run-dir", t_dir, "run output directory");
    ttest->add_option("--dataset", t_dataset, "link profile CSV")->required();
    ttest->add_option("--mode", t_mode, "strict|discovery");
    ttest->add_option("--window-min", t_window_min, "window length, minutes");
    ttest->add_option("--date", t_date, "dataset date");
    ttest->add_option("--period", t_period, "dataset period for the reference means");
    ttest->add_option("--alpha", t_alpha, "significance level");
    ttest->add_flag("--paired", t_paired, "paired per-period test instead of one-sample");

    uint64_t b_events = 1'000'000, b_seed = 7;
    bool b_serial = false;
    std::string b_out;
    auto* bench = app.add_subcommand("bench", "latency/throughput report");
    bench->add_option("--events", b_events, "event volume")
        ->check(CLI::PositiveNumber.description("must be >= 1"));
    bench->add_option("--seed", b_seed, "workload seed");
    bench->add_flag("--serial", b_serial, "add isolated serial attribution rows");
    bench->add_option("--out", b_out, "also write the report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    std::signal(SIGINT, on_sigint);

    try {
        if (*validate) return cmd_validate(network_file);
        if (*simulate) return cmd_simulate(sim_flags);
        if (*run) return cmd_run(run_flags);
        if (*metrics)
            return cmd_metrics(m_network, m_dir, m_target, m_mode, m_window_min, m_from, m_to, m_vector);
        if (*ttest)
            return cmd_ttest(t_network, t_dir, t_dataset, t_mode, t_window_min, t_date, t_period,
                             t_alpha, t_paired);
        if (*bench) return cmd_bench(b_events, b_seed, b_serial, b_out);
    } catch (const ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kDomain;
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
