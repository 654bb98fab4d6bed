#include "trafficproc/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "trafficproc/correlation.hpp"
#include "trafficproc/demo.hpp"
#include "trafficproc/gateway.hpp"
#include "trafficproc/latency.hpp"
#include "trafficproc/metrics.hpp"
#include "trafficproc/simulator.hpp"
#include "trafficproc/store.hpp"
#include "trafficproc/strings.hpp"

namespace trafficproc {

namespace {

struct Stats {
    uint64_t count = 0;
    double mean_ms = 0.0;
    double sd_ms = 0.0;
};

Stats stats_of(const std::vector<int64_t>& ns, size_t skip) {
    Stats st;
    if (ns.size() <= skip) return st;
    const size_t n = ns.size() - skip;
    double sum = 0.0;
    for (size_t i = skip; i < ns.size(); ++i) sum += double(ns[i]);
    const double mean_ns = sum / double(n);
    double ss = 0.0;
    for (size_t i = skip; i < ns.size(); ++i) {
        const double d = double(ns[i]) - mean_ns;
        ss += d * d;
    }
    st.count = n;
    st.mean_ms = mean_ns / 1e6;
    st.sd_ms = n > 1 ? std::sqrt(ss / double(n - 1)) / 1e6 : 0.0;
    return st;
}

LatencyReport report_of(const std::string& op, const std::string& io, const Stats& st) {
    LatencyReport r{op, io, st.count, st.mean_ms, st.sd_ms, 0.0};
    if (st.mean_ms > 0) r.throughput_per_s = 1000.0 / st.mean_ms;
    return r;
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
    if (cfg.events == 0) throw std::invalid_argument("empty workload");

    const auto route = demo::route1_links();
    const uint64_t events_per_vehicle = 2 * route.size();
    const uint64_t vehicles = (cfg.events + events_per_vehicle - 1) / events_per_vehicle;
    const int periods = int(std::min<uint64_t>(90, (vehicles + 1999) / 2000));
    const int64_t flow = int64_t((vehicles + periods - 1) / uint64_t(periods));

    auto net = demo::network();
    auto profiles = demo::profiles(flow, 0, 95);
    Simulator sim(*net, profiles, nullptr);
    SimConfig sc;
    sc.first_period = 0;
    sc.last_period = periods - 1;
    sc.cv = 0.05;
    sc.seed = cfg.seed;
    auto out = sim.generate({demo::kRoute1Id}, sc);

    EventStore store;
    MetricsEngine metrics(net.get());
    CorrelationEngine engine(*net, store, metrics);
    AnprGateway gateway(*net);

    LatencyRecorder read_rec, write_rec, metric_rec;
    read_rec.reserve(cfg.events + 64);
    write_rec.reserve(cfg.events + 64);
    metric_rec.reserve(cfg.events / 2 + 64);
    store.set_latency_recorders(&read_rec, &write_rec);
    engine.set_metric_latency_recorder(&metric_rec);

    const int64_t t0 = now_ns();
    for (const auto& d : out.detections) {
        auto res = gateway.ingest_detection(d);
        for (const auto& e : res.events) engine.process(e);
    }
    engine.finalize_all();
    const double wall_s = double(now_ns() - t0) / 1e9;

    BenchResult result;
    result.vehicles = out.ground_truth.size();
    result.events_processed = store.append_ops();
    result.end_to_end_events_per_s = wall_s > 0 ? double(result.events_processed) / wall_s : 0.0;

    const size_t read_skip = size_t(cfg.warmup_fraction * double(read_rec.samples_ns().size()));
    const size_t write_skip = size_t(cfg.warmup_fraction * double(write_rec.samples_ns().size()));
    const size_t metric_skip = size_t(cfg.warmup_fraction * double(metric_rec.samples_ns().size()));

    result.reports.push_back(report_of("event-corr-read", "read", stats_of(read_rec.samples_ns(), read_skip)));
    result.reports.push_back(
        report_of("event-corr-write", "write", stats_of(write_rec.samples_ns(), write_skip)));
    result.reports.push_back(
        report_of("metric-gen", "1 read + 1 write", stats_of(metric_rec.samples_ns(), metric_skip)));
    {
        LatencyReport end_to_end;
        end_to_end.operation = "pipeline-end-to-end";
        end_to_end.io_ops = "ingest+correlate+metrics";
        end_to_end.count = result.events_processed;
        end_to_end.mean_ms =
            result.events_processed ? wall_s * 1000.0 / double(result.events_processed) : 0.0;
        end_to_end.sd_ms = 0.0;
        end_to_end.throughput_per_s = result.end_to_end_events_per_s;
        result.reports.push_back(end_to_end);
    }

    // per-decile read means, warmup excluded
    const auto& reads = read_rec.samples_ns();
    if (reads.size() > read_skip + 10) {
        const size_t n = reads.size() - read_skip;
        const size_t per = n / 10;
        for (int dec = 0; dec < 10; ++dec) {
            const size_t begin = read_skip + size_t(dec) * per;
            const size_t end = dec == 9 ? reads.size() : begin + per;
            double sum = 0.0;
            for (size_t i = begin; i < end; ++i) sum += double(reads[i]);
            result.read_decile_means_ms.push_back(sum / double(end - begin) / 1e6);
        }
        const double first = result.read_decile_means_ms.front();
        const double last = result.read_decile_means_ms.back();
        result.read_decile_drift = first > 0 ? std::fabs(last - first) / first : 0.0;
    }

    if (cfg.serial_section) {
        // isolated store-op attribution on the already-populated store
        LatencyRecorder iso_read, iso_write;
        const auto pids = out.ground_truth;
        std::mt19937_64 rng(cfg.seed ^ 0x5eed);
        const size_t probes = std::min<size_t>(result.events_processed, 200'000);
        iso_read.reserve(probes);
        for (size_t i = 0; i < probes; ++i) {
            const auto& gt = pids[rng() % pids.size()];
            CorrelationKey key{gt.plate, date_of_ms(gt.junction_times_ms.front())};
            const int64_t a = now_ns();
            auto latest = store.latest_for(key);
            iso_read.record(now_ns() - a);
            (void)latest;
        }
        EventStore fresh;
        iso_write.reserve(probes);
        for (size_t i = 0; i < probes; ++i) {
            ExBpafEvent e;
            e.event_id = "bench-" + std::to_string(i);
            e.timestamp_ms = int64_t(i);
            e.server_id = "bench";
            e.process_instance_id = "bench:" + std::to_string(i % 4096);
            e.activity_definition_id = "LM1012";
            e.activity_instance_id = e.process_instance_id + ":" + std::to_string(i);
            e.current_state = LifecycleState::OpenRunning;
            e.correlation = CorrelationKey{"BENCH00" + std::to_string(i % 4096), Date{2013, 5, 1}};
            const int64_t a = now_ns();
            fresh.append(e);
            iso_write.record(now_ns() - a);
        }
        result.reports.push_back(report_of("serial-read", "read", stats_of(iso_read.samples_ns(), 0)));
        result.reports.push_back(report_of("serial-write", "write", stats_of(iso_write.samples_ns(), 0)));
    }

    return result;
}

std::string bench_report_text(const BenchConfig& cfg, const BenchResult& result) {
    std::ostringstream os;
    utsname uts{};
    uname(&uts);
    os << "# trafficproc bench\n";
    os << "# host=" << uts.nodename << " os=" << uts.sysname << ' ' << uts.release << '\n';
    os << "# events=" << result.events_processed << " vehicles=" << result.vehicles
       << " nodes=" << cfg.node_count << " seed=" << cfg.seed << '\n';
    os << "# scale: reference run ~672e6 events (24e6 vehicles x 2 x 14 links); this run "
       << result.events_processed << " events\n";
    os << "# end_to_end_events_per_s=" << format_fixed(result.end_to_end_events_per_s, 1) << '\n';
    os << "# read_decile_drift=" << format_fixed(result.read_decile_drift * 100.0, 2) << "%\n";
    os << "operation,io_ops,avg_ms,stdev_ms,throughput_eps\n";
    for (const auto& r : result.reports) {
        os << r.operation << ',' << r.io_ops << ',' << format_fixed(r.mean_ms, 6) << ','
           << format_fixed(r.sd_ms, 6) << ',' << format_fixed(r.throughput_per_s, 0) << '\n';
    }
    return os.str();
}

}  // namespace trafficproc
