#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trafficproc {

struct Junction {
    std::string id;
    std::string name;
};

// Directed edge: traversal order on the ground is directed, so the model is.
struct RoadSection {
    std::string id;
    std::string start_junction;
    std::string end_junction;
    std::string road;
    double length_km = 0.0;
    std::string description;
};

struct Road {
    std::string id;
    std::vector<std::string> sections;
};

// A journey (process definition): a named ordered path of road sections.
struct JourneyDefinition {
    std::string id;
    std::string name;
    std::vector<std::string> sections;
};

struct MatchResult {
    enum class Kind { Full, Prefix, None };
    Kind kind = Kind::None;
    std::string full_id;                 // set when kind == Full
    std::vector<std::string> prefix_of;  // sorted definition ids, set when kind == Prefix
};

// Carries every offense found during load so operators can fix them in one pass.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

  private:
    std::vector<std::string> violations_;
};

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Immutable after load except register_journey; journey queries see
// consistent snapshots while registration runs.
class RoadNetwork {
  public:
    RoadNetwork() = default;
    RoadNetwork(const RoadNetwork&) = delete;
    RoadNetwork& operator=(const RoadNetwork&) = delete;

    const Junction* junction(const std::string& id) const;
    const RoadSection* section(const std::string& id) const;
    const Road* road(const std::string& id) const;
    std::optional<JourneyDefinition> journey(const std::string& id) const;
    std::vector<std::string> journey_ids() const;

    size_t junction_count() const { return junctions_.size(); }
    size_t section_count() const { return sections_.size(); }
    size_t road_count() const { return roads_.size(); }
    size_t journey_count() const;

    const std::map<std::string, Junction>& junctions() const { return junctions_; }
    const std::map<std::string, RoadSection>& sections() const { return sections_; }
    const std::map<std::string, Road>& roads() const { return roads_; }

    // The unique directed section from -> to, if any.
    std::optional<std::string> section_between(const std::string& from, const std::string& to) const;

    MatchResult match_path(std::span<const std::string> observed) const;

    // Validates adjacency and id freshness; safe to call while readers run.
    std::string register_journey(JourneyDefinition def);

    // Journey shape violations (unknown sections, gaps, repeats); empty = valid.
    std::vector<std::string> check_journey(const JourneyDefinition& def) const;

  private:
    friend class NetworkBuilder;

    std::map<std::string, Junction> junctions_;
    std::map<std::string, RoadSection> sections_;
    std::map<std::string, Road> roads_;
    std::map<std::pair<std::string, std::string>, std::string> by_endpoints_;

    mutable std::shared_mutex journeys_mu_;
    std::map<std::string, JourneyDefinition> journeys_;
};

// Accumulates raw records (any order), then resolves and validates in build().
class NetworkBuilder {
  public:
    NetworkBuilder& junction(Junction j, int line = 0);
    NetworkBuilder& section(RoadSection s, int line = 0);
    NetworkBuilder& journey(JourneyDefinition def, int line = 0);

    // Throws ValidationError listing every offense.
    std::unique_ptr<RoadNetwork> build();

  private:
    template <typename T>
    struct Rec {
        T value;
        int line;
    };
    std::vector<Rec<Junction>> junctions_;
    std::vector<Rec<RoadSection>> sections_;
    std::vector<Rec<JourneyDefinition>> journeys_;
};

// Network definition file: line-oriented, comma-separated J/S/P records,
// '#' comments. Area records (A/JA) in the same file are skipped here; the
// topology loader picks them up.
std::unique_ptr<RoadNetwork> load_network(std::istream& in);
std::unique_ptr<RoadNetwork> load_network_file(const std::string& path);

}  // namespace trafficproc
