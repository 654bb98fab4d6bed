#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "trafficproc/network.hpp"

namespace trafficproc {

// Partitioning of the network into analysis areas; every junction belongs to
// exactly one area.
struct AreaMap {
    std::set<std::string> areas;
    std::map<std::string, std::string> junction_area;

    const std::string* area_of(const std::string& junction_id) const;

    // Junctions incident to a section whose endpoints lie in different areas.
    std::set<std::string> boundary_junctions(const RoadNetwork& net) const;

    // Unmapped-junction and unknown-area violations; empty = consistent.
    std::vector<std::string> validate(const RoadNetwork& net) const;

    // Single area covering the whole network (unpartitioned deployments).
    static AreaMap single(const RoadNetwork& net, const std::string& area_id = "ALL");
};

// A,<area-id> and JA,<junction-id>,<area-id> records; other record kinds in
// the same file are skipped.
AreaMap load_area_map(std::istream& in);
AreaMap load_area_map_file(const std::string& path);

}  // namespace trafficproc
