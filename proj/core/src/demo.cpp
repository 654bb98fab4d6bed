#include "trafficproc/demo.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "trafficproc/strings.hpp"

namespace trafficproc::demo {

namespace {
// Route 1: per-link means from the headline results table. Junctions beyond
// the documented first four links follow the M6 Toll alignment.
constexpr DemoLink kRoute1[] = {
    {"LM1012", "M6 J6", "M6 J5", "M6", 224.32},
    {"LM1011", "M6 J5", "M6 J4A", "M6", 152.93},
    {"LM513A", "M6 J4A", "M42 J8", "M42", 36.07},
    {"LM1052A", "M42 J8", "M6 T11", "M6TOLL", 37.13},
    {"LM1047A", "M6 T11", "M6 T7", "M6TOLL", 37.95},
    {"LM1045A", "M6 T7", "M6 T6", "M6TOLL", 83.93},
    {"LM1042A", "M6 T6", "M6 T5", "M6TOLL", 241.88},
    {"LM1040A", "M6 T5", "M6 T4", "M6TOLL", 40.06},
    {"LM1037A", "M6 T4", "M6 T3", "M6TOLL", 180.17},
    {"LM1036A", "M6 T3", "M6 T2", "M6TOLL", 215.23},
    {"LM1034A", "M6 T2", "M6 T1", "M6TOLL", 78.93},
    {"LM1033A", "M6 T1", "M6 J11A", "M6TOLL", 36.47},
    {"LM928B", "M6 J11A", "M6 J12", "M6", 75.03},
    {"AL3268", "M6 J12", "A38 J1", "A38", 112.63},
};

constexpr DemoLink kRoute2[] = {
    {"LM1015", "M6 J6", "M6 J7", "M6", 95.40},
    {"LM1017", "M6 J7", "M6 J8", "M6", 110.25},
    {"LM1019", "M6 J8", "M6 J9", "M6", 87.60},
    {"LM1021", "M6 J9", "M6 J10", "M6", 133.80},
};

constexpr double kSpeedKph = 100.0;

double length_km(double mean_s) {
    return std::round(kSpeedKph * mean_s / 3600.0 * 1000.0) / 1000.0;
}

// Junctions in the split-map NW area (route 1 tail from M6 T4 on).
constexpr const char* kSplitNorth[] = {"M6 T4", "M6 T3", "M6 T2", "M6 T1",
                                       "M6 J11A", "M6 J12", "A38 J1"};
}  // namespace

std::span<const DemoLink> route1_links() { return kRoute1; }
std::span<const DemoLink> route2_links() { return kRoute2; }

std::string network_text() {
    std::ostringstream os;
    os << "# Birmingham-Staffordshire demo network\n";
    std::set<std::string> junctions;
    auto emit_junctions = [&](std::span<const DemoLink> links) {
        for (const auto& l : links) {
            for (const char* j : {l.from, l.to}) {
                if (junctions.insert(j).second) os << "J," << j << ',' << j << '\n';
            }
        }
    };
    emit_junctions(kRoute1);
    emit_junctions(kRoute2);
    auto emit_sections = [&](std::span<const DemoLink> links) {
        for (const auto& l : links) {
            os << "S," << l.id << ',' << l.from << ',' << l.to << ',' << l.road << ','
               << format_fixed(length_km(l.mean_s), 3) << ',' << l.from << " to " << l.to << '\n';
        }
    };
    emit_sections(kRoute1);
    emit_sections(kRoute2);
    auto emit_journey = [&](const char* id, const char* name, std::span<const DemoLink> links) {
        os << "P," << id << ',' << name << ',';
        for (size_t i = 0; i < links.size(); ++i) os << (i ? ";" : "") << links[i].id;
        os << '\n';
    };
    emit_journey(kRoute1Id, "Birmingham-Staffordshire route 1", kRoute1);
    emit_journey(kRoute2Id, "Birmingham-Staffordshire route 2", kRoute2);
    return os.str();
}

namespace {
std::string area_records(bool split) {
    std::set<std::string> north(std::begin(kSplitNorth), std::end(kSplitNorth));
    std::ostringstream os;
    os << "A,ML\n";
    if (split) os << "A,NW\n";
    std::set<std::string> junctions;
    auto emit = [&](std::span<const DemoLink> links) {
        for (const auto& l : links) {
            for (const char* j : {l.from, l.to}) {
                if (!junctions.insert(j).second) continue;
                const bool is_north = split && north.count(j);
                os << "JA," << j << ',' << (is_north ? "NW" : "ML") << '\n';
            }
        }
    };
    emit(kRoute1);
    emit(kRoute2);
    return os.str();
}
}  // namespace

std::string area_map_text_single() { return area_records(false); }
std::string area_map_text_split() { return area_records(true); }

std::shared_ptr<RoadNetwork> network() {
    std::istringstream in(network_text());
    return std::shared_ptr<RoadNetwork>(load_network(in));
}

ProfileSet profiles(int64_t flow, int first_period, int last_period, const Date& date) {
    ProfileSet set;
    for (int p = first_period; p <= last_period; ++p) {
        auto add = [&](std::span<const DemoLink> links) {
            for (const auto& l : links)
                set.add(LinkProfile{l.id, date, p, l.mean_s, kSpeedKph, length_km(l.mean_s), flow});
        };
        add(kRoute1);
        add(kRoute2);
    }
    return set;
}

std::string dataset_csv(int64_t flow, int first_period, int last_period, const Date& date) {
    std::ostringstream os;
    os << "link_id,date,time_period,avg_jt_s,avg_speed_kph,link_length_km,flow\n";
    for (int p = first_period; p <= last_period; ++p) {
        auto add = [&](std::span<const DemoLink> links) {
            for (const auto& l : links) {
                os << l.id << ',' << date.to_string() << ',' << p << ',' << format_fixed(l.mean_s, 2)
                   << ',' << format_fixed(kSpeedKph, 1) << ',' << format_fixed(length_km(l.mean_s), 3)
                   << ',' << flow << '\n';
            }
        };
        add(kRoute1);
        add(kRoute2);
    }
    return os.str();
}

}  // namespace trafficproc::demo
