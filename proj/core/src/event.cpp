#include "trafficproc/event.hpp"

#include <array>
#include <sstream>

#include "trafficproc/strings.hpp"

namespace trafficproc {

namespace {
constexpr std::string_view kOpenRunning = "OPEN_RUNNING";
constexpr std::string_view kClosedCompleted = "CLOSED_COMPLETED";
constexpr std::string_view kClosedCompletedAlias = "OPEN_CLOSED_COMPLETED";
constexpr std::string_view kNull = "NULL";

constexpr std::array<std::string_view, 13> kKeys = {
    "eventId",      "timestamp",          "serverId",          "processDefinitionId",
    "processInstanceId", "processName",   "activityDefinitionId", "activityInstanceId",
    "activityName", "currentState",       "previousState",     "corrReg",
    "corrDate",
};
}  // namespace

std::string_view state_token(LifecycleState s) {
    return s == LifecycleState::OpenRunning ? kOpenRunning : kClosedCompleted;
}

std::optional<LifecycleState> parse_state(std::string_view token) {
    if (token == kOpenRunning) return LifecycleState::OpenRunning;
    if (token == kClosedCompleted || token == kClosedCompletedAlias)
        return LifecycleState::ClosedCompleted;
    return std::nullopt;
}

bool validate_transition(std::optional<LifecycleState> previous, LifecycleState current) {
    if (!previous) return current == LifecycleState::OpenRunning;
    return *previous == LifecycleState::OpenRunning && current == LifecycleState::ClosedCompleted;
}

std::string encode(const ExBpafEvent& e) {
    std::ostringstream os;
    os << "eventId=" << e.event_id
       << "|timestamp=" << e.timestamp_ms
       << "|serverId=" << e.server_id
       << "|processDefinitionId=" << e.process_definition_id
       << "|processInstanceId=" << e.process_instance_id
       << "|processName=" << e.process_name
       << "|activityDefinitionId=" << e.activity_definition_id
       << "|activityInstanceId=" << e.activity_instance_id
       << "|activityName=" << e.activity_name
       << "|currentState=" << state_token(e.current_state)
       << "|previousState=" << (e.previous_state ? state_token(*e.previous_state) : kNull)
       << "|corrReg=" << e.correlation.registration
       << "|corrDate=" << e.correlation.journey_date.to_string();
    return os.str();
}

ExBpafEvent decode(std::string_view record) {
    std::array<std::optional<std::string>, kKeys.size()> values;
    for (const auto& pair : split(record, '|')) {
        size_t eq = pair.find('=');
        if (eq == std::string::npos) throw EventDecodeError("malformed pair: " + pair);
        std::string_view key(pair.data(), eq);
        std::string value = pair.substr(eq + 1);
        bool known = false;
        for (size_t i = 0; i < kKeys.size(); ++i) {
            if (kKeys[i] == key) {
                values[i] = std::move(value);
                known = true;
                break;
            }
        }
        if (!known) throw EventDecodeError(std::string("unknown field ") + std::string(key));
    }
    for (size_t i = 0; i < kKeys.size(); ++i) {
        if (!values[i]) throw EventDecodeError(std::string("missing field ") + std::string(kKeys[i]));
    }

    ExBpafEvent e;
    e.event_id = *values[0];
    auto ts = parse_ll(*values[1]);
    if (!ts) throw EventDecodeError("malformed timestamp: " + *values[1]);
    e.timestamp_ms = *ts;
    e.server_id = *values[2];
    e.process_definition_id = *values[3];
    e.process_instance_id = *values[4];
    e.process_name = *values[5];
    e.activity_definition_id = *values[6];
    e.activity_instance_id = *values[7];
    e.activity_name = *values[8];
    auto cur = parse_state(*values[9]);
    if (!cur) throw EventDecodeError("unknown state token: " + *values[9]);
    e.current_state = *cur;
    if (*values[10] != kNull) {
        auto prev = parse_state(*values[10]);
        if (!prev) throw EventDecodeError("unknown state token: " + *values[10]);
        e.previous_state = *prev;
    }
    e.correlation.registration = *values[11];
    auto date = parse_date(*values[12]);
    if (!date) throw EventDecodeError("malformed corrDate: " + *values[12]);
    e.correlation.journey_date = *date;
    return e;
}

}  // namespace trafficproc
