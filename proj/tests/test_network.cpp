#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <sstream>
#include <thread>

#include "trafficproc/demo.hpp"
#include "trafficproc/network.hpp"

using namespace trafficproc;

namespace {

// The four documented links of route 1 with their start/end junctions.
const char* kMiniNetwork = R"(# Table-style mini network
J,M6 J6,Birmingham North
J,M6 J5,Castle Bromwich
J,M6 J4A,M42 interchange
J,M42 J8,M42 J8
J,M6 T11,Toll start
S,LM1012,M6 J6,M6 J5,M6,6.2,M6 J6 to M6 J5
S,LM1011,M6 J5,M6 J4A,M6,4.2,M6 J5 to M6 J4A
S,LM513A,M6 J4A,M42 J8,M42,1.0,link road
S,LM1052A,M42 J8,M6 T11,M6TOLL,1.0,toll entry
P,BirmStaf01,Birmingham-Staffordshire,LM1012;LM1011;LM513A;LM1052A
)";

std::unique_ptr<RoadNetwork> mini() {
    std::istringstream in(kMiniNetwork);
    return load_network(in);
}

// brute-force matcher used as the oracle for match_path
MatchResult brute_force_match(const RoadNetwork& net, const std::vector<std::string>& observed) {
    MatchResult res;
    if (observed.empty()) return res;
    for (const auto& id : net.journey_ids()) {
        auto def = net.journey(id);
        if (def->sections == observed) {
            res.kind = MatchResult::Kind::Full;
            res.full_id = id;
            res.prefix_of.clear();
            return res;
        }
        if (def->sections.size() > observed.size() &&
            std::equal(observed.begin(), observed.end(), def->sections.begin()))
            res.prefix_of.push_back(id);
    }
    std::sort(res.prefix_of.begin(), res.prefix_of.end());
    if (!res.prefix_of.empty()) res.kind = MatchResult::Kind::Prefix;
    return res;
}

}  // namespace

TEST_CASE("mini network loads: 5 junctions, 4 sections, 1 journey") {
    auto net = mini();
    CHECK(net->junction_count() == 5);
    CHECK(net->section_count() == 4);
    CHECK(net->journey_count() == 1);
    CHECK(net->road_count() == 3);
    CHECK(net->junction("M6 J6") != nullptr);
    CHECK(net->section("LM1012")->length_km == doctest::Approx(6.2));
}

TEST_CASE("empty document is a valid empty network") {
    std::istringstream in("");
    auto net = load_network(in);
    CHECK(net->junction_count() == 0);
    CHECK(net->section_count() == 0);
    CHECK(net->journey_count() == 0);
}

TEST_CASE("a section assigned to two roads is rejected") {
    std::string text = kMiniNetwork;
    text += "S,LM1011,M6 J5,M6 J4A,M42,4.2,duplicate with another road\n";
    std::istringstream in(text);
    try {
        load_network(in);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(e.violations().size() == 1);
        CHECK(e.violations()[0].find("two roads") != std::string::npos);
        CHECK(e.violations()[0].find("LM1011") != std::string::npos);
    }
}

TEST_CASE("every offense is listed, with line positions") {
    std::string text = kMiniNetwork;
    text += "S,LMX,M6 J6,M6 J6,M6,1.0,self loop\n";           // start == end
    text += "S,LMY,M6 J6,NOWHERE,M6,1.0,dangling junction\n";  // unknown end
    text += "P,Bad,gap journey,LM1012;LM513A\n";               // non-adjacent
    std::istringstream in(text);
    try {
        load_network(in);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.violations().size() == 3);
        bool saw_line = false;
        for (const auto& v : e.violations())
            if (v.find("line ") != std::string::npos) saw_line = true;
        CHECK(saw_line);
    }
}

TEST_CASE("parallel sections between one junction pair are rejected at load") {
    std::string text = kMiniNetwork;
    text += "S,LMZ,M6 J6,M6 J5,M6,6.0,parallel to LM1012\n";
    std::istringstream in(text);
    CHECK_THROWS_AS(load_network(in), ValidationError);
}

TEST_CASE("section_between is directional and partial") {
    auto net = mini();
    CHECK(net->section_between("M6 J6", "M6 J5") == "LM1012");
    CHECK_FALSE(net->section_between("M6 J5", "M6 J6").has_value());
    CHECK_FALSE(net->section_between("M6 J6", "M42 J8").has_value());
}

TEST_CASE("match_path: full, prefix, none") {
    auto net = demo::network();
    std::vector<std::string> route1;
    for (const auto& l : demo::route1_links()) route1.push_back(l.id);

    auto full = net->match_path(route1);
    CHECK(full.kind == MatchResult::Kind::Full);
    CHECK(full.full_id == demo::kRoute1Id);

    auto prefix = net->match_path(std::vector<std::string>{"LM1012"});
    CHECK(prefix.kind == MatchResult::Kind::Prefix);
    REQUIRE(prefix.prefix_of.size() == 1);
    CHECK(prefix.prefix_of[0] == demo::kRoute1Id);

    auto none = net->match_path(std::vector<std::string>{"LM1015", "LM1012"});
    CHECK(none.kind == MatchResult::Kind::None);
}

TEST_CASE("match_path agrees with a brute-force oracle on random observations") {
    auto net = demo::network();
    std::vector<std::string> route1;
    for (const auto& l : demo::route1_links()) route1.push_back(l.id);
    std::vector<std::string> route2;
    for (const auto& l : demo::route2_links()) route2.push_back(l.id);

    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
        std::vector<std::string> observed;
        const auto& base = (rng() % 2) ? route1 : route2;
        const size_t len = 1 + rng() % base.size();
        const bool scramble = rng() % 3 == 0;
        for (size_t k = 0; k < len; ++k) observed.push_back(base[scramble ? rng() % base.size() : k]);

        auto got = net->match_path(observed);
        auto want = brute_force_match(*net, observed);
        CHECK(got.kind == want.kind);
        CHECK(got.full_id == want.full_id);
        CHECK(got.prefix_of == want.prefix_of);
    }
}

TEST_CASE("full match implies every proper prefix matches as prefix") {
    auto net = demo::network();
    for (const auto& id : net->journey_ids()) {
        auto def = net->journey(id);
        for (size_t len = 1; len < def->sections.size(); ++len) {
            std::vector<std::string> observed(def->sections.begin(), def->sections.begin() + len);
            auto res = net->match_path(observed);
            if (res.kind == MatchResult::Kind::Full) continue;  // another definition equals the prefix
            REQUIRE(res.kind == MatchResult::Kind::Prefix);
            CHECK(std::find(res.prefix_of.begin(), res.prefix_of.end(), id) != res.prefix_of.end());
        }
    }
}

TEST_CASE("register_journey: success, duplicate id, adjacency gap, loop") {
    auto net = mini();
    JourneyDefinition two;
    two.id = "BirmStaf02";
    two.name = "alternative";
    two.sections = {"LM1012", "LM1011"};
    CHECK(net->register_journey(two) == "BirmStaf02");
    CHECK(net->journey("BirmStaf02").has_value());
    CHECK(net->match_path(two.sections).kind == MatchResult::Kind::Full);

    CHECK_THROWS_AS(net->register_journey(two), ValidationError);  // duplicate id

    JourneyDefinition gap;
    gap.id = "Gap01";
    gap.sections = {"LM1012", "LM513A"};  // M6 J5 != M6 J4A
    CHECK_THROWS_AS(net->register_journey(gap), ValidationError);

    JourneyDefinition loop;
    loop.id = "Loop01";
    loop.sections = {"LM1012", "LM1012"};
    CHECK_THROWS_AS(net->register_journey(loop), ValidationError);
}

TEST_CASE("road section sets are pairwise disjoint in loaded networks") {
    auto net = demo::network();
    std::vector<const Road*> roads;
    for (const auto& [id, r] : net->roads()) roads.push_back(&r);
    for (size_t i = 0; i < roads.size(); ++i) {
        for (size_t j = i + 1; j < roads.size(); ++j) {
            for (const auto& s : roads[i]->sections) {
                CHECK(std::find(roads[j]->sections.begin(), roads[j]->sections.end(), s) ==
                      roads[j]->sections.end());
            }
        }
    }
}

TEST_CASE("journey adjacency holds across every loaded definition") {
    auto net = demo::network();
    for (const auto& id : net->journey_ids()) {
        auto def = net->journey(id);
        for (size_t k = 0; k + 1 < def->sections.size(); ++k) {
            const RoadSection* a = net->section(def->sections[k]);
            const RoadSection* b = net->section(def->sections[k + 1]);
            REQUIRE(a);
            REQUIRE(b);
            CHECK(a->end_junction == b->start_junction);
        }
    }
}

TEST_CASE("register_journey is safe while readers run") {
    auto net = demo::network();
    std::vector<std::string> route1;
    for (const auto& l : demo::route1_links()) route1.push_back(l.id);

    std::atomic<bool> stop{false};
    std::atomic<int> reads{0};
    std::thread reader([&] {
        while (!stop.load()) {
            auto res = net->match_path(route1);
            if (res.kind == MatchResult::Kind::Full) reads.fetch_add(1);
            (void)net->journey_ids();
        }
    });
    while (reads.load() == 0) std::this_thread::yield();  // reader is live
    for (int i = 0; i < 200; ++i) {
        JourneyDefinition def;
        def.id = "Reg" + std::to_string(i);
        def.sections = {route1[0], route1[1]};
        net->register_journey(def);
    }
    stop.store(true);
    reader.join();
    CHECK(reads.load() > 0);
    CHECK(net->journey_count() == 2 + 200);
}

TEST_CASE("area records in the same file are skipped by the network loader") {
    std::string text = kMiniNetwork;
    text += "A,ML\nJA,M6 J6,ML\n";
    std::istringstream in(text);
    auto net = load_network(in);
    CHECK(net->junction_count() == 5);
}
