#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "trafficproc/time_util.hpp"

namespace trafficproc {

// Two-state lifecycle: instances open running and close completed, nothing else.
enum class LifecycleState { OpenRunning, ClosedCompleted };

// Canonical wire token. "OPEN_CLOSED_COMPLETED" is accepted on decode as a
// compatibility alias for ClosedCompleted.
std::string_view state_token(LifecycleState s);
std::optional<LifecycleState> parse_state(std::string_view token);

bool validate_transition(std::optional<LifecycleState> previous, LifecycleState current);

struct CorrelationKey {
    std::string registration;
    Date journey_date;

    auto operator<=>(const CorrelationKey&) const = default;
    std::string to_string() const { return registration + ":" + journey_date.to_string(); }
};

// One state-transition record; the atomic unit flowing through the pipeline.
struct ExBpafEvent {
    std::string event_id;
    int64_t timestamp_ms = 0;  // occurrence time at the source, never ingestion time
    std::string server_id;
    std::string process_definition_id;  // empty until journey matching completes
    std::string process_instance_id;
    std::string process_name;
    std::string activity_definition_id;  // road-section id
    std::string activity_instance_id;
    std::string activity_name;
    LifecycleState current_state = LifecycleState::OpenRunning;
    std::optional<LifecycleState> previous_state;
    CorrelationKey correlation;

    bool operator==(const ExBpafEvent&) const = default;
};

class EventDecodeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// One event per line: key=value pairs joined by '|'. previousState may be the
// literal NULL; corrDate is YYYY-MM-DD; timestamp is decimal ms-since-epoch.
std::string encode(const ExBpafEvent& e);
ExBpafEvent decode(std::string_view record);

}  // namespace trafficproc
