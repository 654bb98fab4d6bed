#pragma once

#include <memory>
#include <span>
#include <string>

#include "trafficproc/network.hpp"
#include "trafficproc/simulator.hpp"
#include "trafficproc/time_util.hpp"

namespace trafficproc::demo {

// The Birmingham-Staffordshire demo model: route 1 (14 motorway links) and
// route 2 (4 links), with per-link mean journey times.
struct DemoLink {
    const char* id;
    const char* from;
    const char* to;
    const char* road;
    double mean_s;
};

std::span<const DemoLink> route1_links();
std::span<const DemoLink> route2_links();

constexpr const char* kRoute1Id = "BirmStaf01";
constexpr const char* kRoute2Id = "BirmStaf02";

// Network definition file content (J/S/P records, both routes).
std::string network_text();

// Area records: everything in one Midlands area.
std::string area_map_text_single();
// Two areas (ML, NW) splitting route 1 at the LM1040A link.
std::string area_map_text_split();

std::shared_ptr<RoadNetwork> network();

// Constant per-period profiles with the demo means.
ProfileSet profiles(int64_t flow, int first_period, int last_period, const Date& date = {2013, 5, 1});
std::string dataset_csv(int64_t flow, int first_period, int last_period, const Date& date = {2013, 5, 1});

}  // namespace trafficproc::demo
