#pragma once

#include "common/money.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ouro::events {

using CallId = std::string;
using EventId = std::uint64_t;
// Milliseconds since run start.
using Millis = std::int64_t;

enum class EventKind {
    assistant_message,
    tool_call,
    tool_result,
    agent_call,
    agent_result,
    overseer_notification,
    cancellation,
};

enum class NodeStatus { running, returned, cancelled, timed_out };

const char* to_string(EventKind kind);
const char* to_string(NodeStatus status);
EventKind event_kind_from_string(const std::string& s);
NodeStatus node_status_from_string(const std::string& s);

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t cached_tokens = 0;
    Money cost;

    std::int64_t tokens() const { return prompt_tokens + completion_tokens; }
    // Throws Error(invalid_argument) on negative counts or cached > prompt.
    void validate() const;

    Usage& operator+=(const Usage& o) {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        cached_tokens += o.cached_tokens;
        cost += o.cost;
        return *this;
    }
    bool operator==(const Usage&) const = default;
};

// Kind-specific record. Unused fields stay empty.
struct Payload {
    std::string text;   // message, result text, notification, cancellation reason
    std::string name;   // tool or agent name
    std::vector<std::pair<std::string, std::string>> args;
    std::optional<bool> success;
    CallId target;      // agent_call / agent_result: the child call
    std::string source; // notification / cancellation origin: overseer, human, runtime

    bool operator==(const Payload&) const = default;
};

struct Event {
    EventId event_id = 0;
    CallId call_id;
    EventKind kind = EventKind::assistant_message;
    Millis timestamp = 0;
    Payload payload;
    std::optional<Usage> usage;

    bool operator==(const Event&) const = default;
};

struct ExecutionNode {
    CallId call_id;
    std::string agent_name;
    std::optional<CallId> parent;
    int ordinal = 1;
    NodeStatus status = NodeStatus::running;
    Millis start = 0;
    std::optional<Millis> end;
    std::vector<Event> events;
    std::optional<std::string> result;
    std::vector<CallId> children;

    bool terminal() const { return status != NodeStatus::running; }
};

struct UsageTotals {
    double duration = 0.0; // seconds, summed over nodes
    std::int64_t tokens = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t cached_tokens = 0;
    Money cost;

    double cached_fraction() const {
        return prompt_tokens > 0 ? static_cast<double>(cached_tokens) / static_cast<double>(prompt_tokens) : 0.0;
    }
};

} // namespace ouro::events
