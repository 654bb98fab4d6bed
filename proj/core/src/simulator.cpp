#include "trafficproc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "trafficproc/strings.hpp"

namespace trafficproc {

namespace {
constexpr int64_t kPeriodMs = 15 * 60 * 1000;
constexpr const char* kHeader = "link_id,date,time_period,avg_jt_s,avg_speed_kph,link_length_km,flow";

double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}
}  // namespace

void ProfileSet::add(LinkProfile p) {
    if (p.link_id.empty()) throw SimulatorError("profile with empty link id");
    if (p.time_period < 0 || p.time_period >= 96)
        throw SimulatorError("profile " + p.link_id + ": time_period out of range");
    if (!(p.avg_journey_time_s > 0))
        throw SimulatorError("profile " + p.link_id + ": journey time must be positive");
    if (!(p.avg_speed_kph > 0)) throw SimulatorError("profile " + p.link_id + ": speed must be positive");
    if (!(p.link_length_km > 0)) throw SimulatorError("profile " + p.link_id + ": length must be positive");
    if (p.flow < 0) throw SimulatorError("profile " + p.link_id + ": negative flow");

    const double implied_s = p.link_length_km / p.avg_speed_kph * 3600.0;
    if (std::fabs(implied_s - p.avg_journey_time_s) > 0.2 * p.avg_journey_time_s) {
        warnings_.push_back("profile " + p.link_id + " " + p.date.to_string() + " p" +
                            std::to_string(p.time_period) + ": journey time " +
                            format_fixed(p.avg_journey_time_s, 2) + "s inconsistent with length/speed (" +
                            format_fixed(implied_s, 2) + "s)");
    }

    auto key = std::tuple{p.link_id, p.date.to_string(), p.time_period};
    if (!profiles_.emplace(key, std::move(p)).second)
        throw SimulatorError("duplicate profile for " + std::get<0>(key) + " " + std::get<1>(key) +
                             " period " + std::to_string(std::get<2>(key)));
}

const LinkProfile* ProfileSet::find(const std::string& link, const Date& date, int period) const {
    auto it = profiles_.find(std::tuple{link, date.to_string(), period});
    return it == profiles_.end() ? nullptr : &it->second;
}

ProfileSet ProfileSet::load(std::istream& in) {
    ProfileSet set;
    std::string line;
    int lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        if (!saw_header) {
            if (sv != kHeader)
                throw SimulatorError("dataset line 1: expected header '" + std::string(kHeader) + "'");
            saw_header = true;
            continue;
        }
        auto f = split(sv, ',');
        if (f.size() != 7)
            throw SimulatorError("dataset line " + std::to_string(lineno) + ": need 7 fields, got " +
                                 std::to_string(f.size()));
        auto date = parse_date(f[1]);
        auto period = parse_ll(f[2]);
        auto jt = parse_double(f[3]);
        auto speed = parse_double(f[4]);
        auto len = parse_double(f[5]);
        auto flow = parse_ll(f[6]);
        if (!date || !period || !jt || !speed || !len || !flow)
            throw SimulatorError("dataset line " + std::to_string(lineno) + ": malformed row");
        try {
            set.add(LinkProfile{f[0], *date, int(*period), *jt, *speed, *len, *flow});
        } catch (const SimulatorError& e) {
            throw SimulatorError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return set;
}

ProfileSet ProfileSet::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimulatorError("cannot open dataset file: " + path);
    return load(in);
}

std::string format_ground_truth(const GroundTruthRecord& r) {
    std::ostringstream os;
    os << r.plate << ',' << r.journey_id;
    for (int64_t t : r.junction_times_ms) os << ',' << t;
    return os.str();
}

std::optional<GroundTruthRecord> parse_ground_truth(std::string_view line) {
    auto f = split(trim(line), ',');
    if (f.size() < 3) return std::nullopt;
    GroundTruthRecord r;
    r.plate = f[0];
    r.journey_id = f[1];
    for (size_t i = 2; i < f.size(); ++i) {
        auto t = parse_ll(f[i]);
        if (!t) return std::nullopt;
        r.junction_times_ms.push_back(*t);
    }
    return r;
}

double NormalSampler::operator()(std::mt19937_64& rng, double mean, double sd) const {
    if (sd <= 0.0) return mean;
    while (true) {
        // Marsaglia polar transform on explicit uniforms.
        double v1, v2, s;
        do {
            v1 = 2.0 * uniform01(rng) - 1.0;
            v2 = 2.0 * uniform01(rng) - 1.0;
            s = v1 * v1 + v2 * v2;
        } while (s >= 1.0 || s == 0.0);
        const double draw = mean + sd * v1 * std::sqrt(-2.0 * std::log(s) / s);
        if (draw > 0.0) return draw;  // truncated: non-positive times are resampled
    }
}

std::string random_plate(std::mt19937_64& rng) {
    char buf[8];
    buf[0] = char('A' + rng() % 26);
    buf[1] = char('A' + rng() % 26);
    buf[2] = char('0' + rng() % 10);
    buf[3] = char('0' + rng() % 10);
    buf[4] = char('A' + rng() % 26);
    buf[5] = char('A' + rng() % 26);
    buf[6] = char('A' + rng() % 26);
    buf[7] = '\0';
    return buf;
}

Simulator::Simulator(const RoadNetwork& net, const ProfileSet& profiles, const AreaMap* areas)
    : net_(net), profiles_(profiles), areas_(areas) {}

SimOutput Simulator::generate(const std::vector<std::string>& journey_ids, const SimConfig& cfg) const {
    if (cfg.first_period < 0 || cfg.last_period >= 96 || cfg.first_period > cfg.last_period)
        throw SimulatorError("period range out of bounds");
    if (cfg.cv < 0) throw SimulatorError("cv must be nonnegative");

    SimOutput out;
    std::mt19937_64 rng(cfg.seed);
    NormalSampler normal;
    std::unordered_set<std::string> used_plates;
    const int64_t midnight = ms_at_midnight_utc(cfg.date);

    for (const auto& jid : journey_ids) {
        auto def = net_.journey(jid);
        if (!def) throw SimulatorError("unknown journey: " + jid);
        // junction sequence: start of first section, then end of each section
        std::vector<const RoadSection*> sections;
        for (const auto& sid : def->sections) {
            const RoadSection* s = net_.section(sid);
            if (!s) throw SimulatorError("journey " + jid + " references unknown section " + sid);
            sections.push_back(s);
        }

        for (int period = cfg.first_period; period <= cfg.last_period; ++period) {
            const LinkProfile* first = profiles_.find(sections.front()->id, cfg.date, period);
            if (!first)
                throw SimulatorError("missing profile for " + sections.front()->id + " " +
                                     cfg.date.to_string() + " period " + std::to_string(period));
            const int64_t flow = first->flow;
            for (int64_t i = 0; i < flow; ++i) {
                std::string plate;
                do {
                    plate = random_plate(rng);
                } while (!used_plates.insert(plate).second);

                GroundTruthRecord gt;
                gt.plate = plate;
                gt.journey_id = jid;
                int64_t t = midnight + int64_t(period) * kPeriodMs + i * kPeriodMs / flow;
                gt.junction_times_ms.push_back(t);
                for (const auto* sec : sections) {
                    const int64_t entry_rel = t - midnight;
                    const int entry_period = int(entry_rel / kPeriodMs);
                    const LinkProfile* prof =
                        entry_rel >= 0 && entry_period < 96
                            ? profiles_.find(sec->id, cfg.date, entry_period)
                            : nullptr;
                    if (!prof)
                        throw SimulatorError("missing profile for " + sec->id + " " +
                                             cfg.date.to_string() + " period " +
                                             std::to_string(entry_period));
                    int64_t dur_ms;
                    if (cfg.cv == 0.0) {
                        dur_ms = std::llround(prof->avg_journey_time_s * 1000.0);
                    } else {
                        const double draw =
                            normal(rng, prof->avg_journey_time_s, cfg.cv * prof->avg_journey_time_s);
                        dur_ms = std::llround(draw * 1000.0);
                    }
                    if (dur_ms < 1) dur_ms = 1;
                    t += dur_ms;
                    gt.junction_times_ms.push_back(t);
                }

                // one detection per junction crossing
                const std::string* start_area =
                    areas_ ? areas_->area_of(sections.front()->start_junction) : nullptr;
                out.detections.push_back(Detection{plate, gt.junction_times_ms[0],
                                                   start_area ? *start_area : "NA",
                                                   sections.front()->start_junction});
                for (size_t k = 0; k < sections.size(); ++k) {
                    const std::string& j = sections[k]->end_junction;
                    const std::string* area = areas_ ? areas_->area_of(j) : nullptr;
                    out.detections.push_back(
                        Detection{plate, gt.junction_times_ms[k + 1], area ? *area : "NA", j});
                }
                out.ground_truth.push_back(std::move(gt));
            }
        }
    }

    std::sort(out.detections.begin(), out.detections.end(), [](const Detection& a, const Detection& b) {
        if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
        if (a.plate != b.plate) return a.plate < b.plate;
        return a.camera_id < b.camera_id;
    });
    return out;
}

std::vector<std::string> inject_missed_detections(SimOutput& out, double rate, uint64_t seed) {
    if (rate < 0.0 || rate > 1.0) throw SimulatorError("miss rate must be in [0,1]");
    std::vector<size_t> eligible;
    for (size_t i = 0; i < out.ground_truth.size(); ++i)
        if (out.ground_truth[i].junction_times_ms.size() >= 3) eligible.push_back(i);
    const size_t count = size_t(std::llround(rate * double(eligible.size())));
    if (count == 0) return {};

    std::mt19937_64 rng(seed);
    // partial Fisher-Yates: pick `count` distinct vehicles
    for (size_t i = 0; i < count; ++i) {
        size_t j = i + size_t(rng() % (eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }

    std::vector<std::string> plates;
    std::unordered_set<std::string> drop;  // "plate@ts"
    for (size_t i = 0; i < count; ++i) {
        const auto& gt = out.ground_truth[eligible[i]];
        const size_t interior = 1 + size_t(rng() % (gt.junction_times_ms.size() - 2));
        drop.insert(gt.plate + "@" + std::to_string(gt.junction_times_ms[interior]));
        plates.push_back(gt.plate);
    }

    std::erase_if(out.detections, [&](const Detection& d) {
        return drop.count(d.plate + "@" + std::to_string(d.timestamp_ms)) > 0;
    });
    std::sort(plates.begin(), plates.end());
    return plates;
}

}  // namespace trafficproc
