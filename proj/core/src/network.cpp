#include "trafficproc/network.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include "trafficproc/strings.hpp"

namespace trafficproc {

namespace {
std::string join_violations(const std::vector<std::string>& v) {
    std::ostringstream os;
    os << "network validation failed (" << v.size() << " violation" << (v.size() == 1 ? "" : "s") << ")";
    for (const auto& s : v) os << "\n  - " << s;
    return os.str();
}

std::string at_line(int line) {
    return line > 0 ? "line " + std::to_string(line) + ": " : std::string();
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

const Junction* RoadNetwork::junction(const std::string& id) const {
    auto it = junctions_.find(id);
    return it == junctions_.end() ? nullptr : &it->second;
}

const RoadSection* RoadNetwork::section(const std::string& id) const {
    auto it = sections_.find(id);
    return it == sections_.end() ? nullptr : &it->second;
}

const Road* RoadNetwork::road(const std::string& id) const {
    auto it = roads_.find(id);
    return it == roads_.end() ? nullptr : &it->second;
}

std::optional<JourneyDefinition> RoadNetwork::journey(const std::string& id) const {
    std::shared_lock lk(journeys_mu_);
    auto it = journeys_.find(id);
    if (it == journeys_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> RoadNetwork::journey_ids() const {
    std::shared_lock lk(journeys_mu_);
    std::vector<std::string> out;
    out.reserve(journeys_.size());
    for (const auto& [id, def] : journeys_) out.push_back(id);
    return out;
}

size_t RoadNetwork::journey_count() const {
    std::shared_lock lk(journeys_mu_);
    return journeys_.size();
}

std::optional<std::string> RoadNetwork::section_between(const std::string& from,
                                                        const std::string& to) const {
    auto it = by_endpoints_.find({from, to});
    if (it == by_endpoints_.end()) return std::nullopt;
    return it->second;
}

MatchResult RoadNetwork::match_path(std::span<const std::string> observed) const {
    MatchResult res;
    if (observed.empty()) return res;
    std::shared_lock lk(journeys_mu_);
    for (const auto& [id, def] : journeys_) {
        if (def.sections.size() == observed.size() &&
            std::equal(observed.begin(), observed.end(), def.sections.begin())) {
            res.kind = MatchResult::Kind::Full;
            res.full_id = id;
            res.prefix_of.clear();
            return res;
        }
        if (def.sections.size() > observed.size() &&
            std::equal(observed.begin(), observed.end(), def.sections.begin())) {
            res.prefix_of.push_back(id);
        }
    }
    if (!res.prefix_of.empty()) res.kind = MatchResult::Kind::Prefix;
    return res;
}

std::vector<std::string> RoadNetwork::check_journey(const JourneyDefinition& def) const {
    std::vector<std::string> errs;
    if (def.id.empty()) errs.push_back("journey with empty id");
    if (def.sections.empty()) {
        errs.push_back("journey " + def.id + ": empty section list");
        return errs;
    }
    const RoadSection* prev = nullptr;
    std::vector<std::string> seen;
    for (const auto& sid : def.sections) {
        const RoadSection* s = section(sid);
        if (!s) {
            errs.push_back("journey " + def.id + ": unknown section " + sid);
            prev = nullptr;
            continue;
        }
        if (std::find(seen.begin(), seen.end(), sid) != seen.end())
            errs.push_back("journey " + def.id + ": section " + sid + " repeated");
        seen.push_back(sid);
        if (prev && prev->end_junction != s->start_junction)
            errs.push_back("journey " + def.id + ": sections " + prev->id + " and " + sid +
                           " are not adjacent (" + prev->end_junction + " != " + s->start_junction + ")");
        prev = s;
    }
    return errs;
}

std::string RoadNetwork::register_journey(JourneyDefinition def) {
    auto errs = check_journey(def);
    std::unique_lock lk(journeys_mu_);
    if (journeys_.count(def.id)) errs.push_back("journey " + def.id + ": duplicate id");
    if (!errs.empty()) throw ValidationError(std::move(errs));
    std::string id = def.id;
    journeys_.emplace(id, std::move(def));
    return id;
}

NetworkBuilder& NetworkBuilder::junction(Junction j, int line) {
    junctions_.push_back({std::move(j), line});
    return *this;
}

NetworkBuilder& NetworkBuilder::section(RoadSection s, int line) {
    sections_.push_back({std::move(s), line});
    return *this;
}

NetworkBuilder& NetworkBuilder::journey(JourneyDefinition def, int line) {
    journeys_.push_back({std::move(def), line});
    return *this;
}

std::unique_ptr<RoadNetwork> NetworkBuilder::build() {
    auto net = std::make_unique<RoadNetwork>();
    std::vector<std::string> errs;

    for (const auto& [j, line] : junctions_) {
        if (j.id.empty()) {
            errs.push_back(at_line(line) + "junction with empty id");
            continue;
        }
        if (!net->junctions_.emplace(j.id, j).second)
            errs.push_back(at_line(line) + "duplicate junction " + j.id);
    }

    for (const auto& [s, line] : sections_) {
        if (s.id.empty()) {
            errs.push_back(at_line(line) + "section with empty id");
            continue;
        }
        auto [it, inserted] = net->sections_.emplace(s.id, s);
        if (!inserted) {
            if (it->second.road != s.road)
                errs.push_back(at_line(line) + "section " + s.id + " assigned to two roads (" +
                               it->second.road + ", " + s.road + ")");
            else
                errs.push_back(at_line(line) + "duplicate section " + s.id);
            continue;
        }
        if (s.start_junction == s.end_junction)
            errs.push_back(at_line(line) + "section " + s.id + ": start and end junction are equal");
        if (!net->junctions_.count(s.start_junction))
            errs.push_back(at_line(line) + "section " + s.id + ": unknown start junction " +
                           s.start_junction);
        if (!net->junctions_.count(s.end_junction))
            errs.push_back(at_line(line) + "section " + s.id + ": unknown end junction " + s.end_junction);
        if (s.length_km < 0.0)
            errs.push_back(at_line(line) + "section " + s.id + ": negative length");
        if (s.road.empty())
            errs.push_back(at_line(line) + "section " + s.id + ": empty road id");

        auto [eit, fresh] = net->by_endpoints_.emplace(std::pair{s.start_junction, s.end_junction}, s.id);
        if (!fresh)
            errs.push_back(at_line(line) + "parallel sections " + eit->second + " and " + s.id +
                           " between " + s.start_junction + " and " + s.end_junction);
        net->roads_[s.road].id = s.road;
        net->roads_[s.road].sections.push_back(s.id);
    }

    for (const auto& [def, line] : journeys_) {
        for (auto& e : net->check_journey(def)) errs.push_back(at_line(line) + e);
        if (net->journeys_.count(def.id))
            errs.push_back(at_line(line) + "duplicate journey " + def.id);
        else
            net->journeys_.emplace(def.id, def);
    }

    if (!errs.empty()) throw ValidationError(std::move(errs));
    return net;
}

std::unique_ptr<RoadNetwork> load_network(std::istream& in) {
    NetworkBuilder b;
    std::string line;
    int lineno = 0;
    std::vector<std::string> parse_errs;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto fields = split(sv, ',');
        const std::string& kind = fields[0];
        if (kind == "J") {
            if (fields.size() != 3) {
                parse_errs.push_back(at_line(lineno) + "J record needs 3 fields, got " +
                                     std::to_string(fields.size()));
                continue;
            }
            b.junction({fields[1], fields[2]}, lineno);
        } else if (kind == "S") {
            if (fields.size() != 7) {
                parse_errs.push_back(at_line(lineno) + "S record needs 7 fields, got " +
                                     std::to_string(fields.size()));
                continue;
            }
            auto len = parse_double(fields[5]);
            if (!len) {
                parse_errs.push_back(at_line(lineno) + "S record: bad length '" + fields[5] + "'");
                continue;
            }
            b.section({fields[1], fields[2], fields[3], fields[4], *len, fields[6]}, lineno);
        } else if (kind == "P") {
            if (fields.size() != 4) {
                parse_errs.push_back(at_line(lineno) + "P record needs 4 fields, got " +
                                     std::to_string(fields.size()));
                continue;
            }
            auto secs = split(fields[3], ';');
            b.journey({fields[1], fields[2], std::move(secs)}, lineno);
        } else if (kind == "A" || kind == "JA") {
            continue;  // area-map records; handled by the topology loader
        } else {
            parse_errs.push_back(at_line(lineno) + "unknown record kind '" + kind + "'");
        }
    }
    if (!parse_errs.empty()) throw ValidationError(std::move(parse_errs));
    return b.build();
}

std::unique_ptr<RoadNetwork> load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file: " + path);
    return load_network(in);
}

}  // namespace trafficproc
