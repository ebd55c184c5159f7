#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace ouro::protocol {

inline constexpr std::string_view kToolCallOpen = "<TOOL_CALL>";
inline constexpr std::string_view kToolCallClose = "</TOOL_CALL>";
inline constexpr std::string_view kAgentCallOpen = "<AGENT_CALL>";
inline constexpr std::string_view kAgentCallClose = "</AGENT_CALL>";
inline constexpr std::string_view kCompleteOpen = "<COMPLETE>";
inline constexpr std::string_view kCompleteClose = "</COMPLETE>";

struct ArgSpec {
    std::string name;
    std::string doc;
    bool required = true;
};

struct ToolSignature {
    std::string name;
    std::string doc;
    std::vector<ArgSpec> args;
};

// Name-indexed signatures in insertion order. Used for both tools and sub-agents.
class Registry {
public:
    Registry() = default;
    explicit Registry(std::vector<ToolSignature> sigs);

    // Throws Error(invalid_argument) on duplicate tool or argument names.
    void add(ToolSignature sig);
    const ToolSignature* find(std::string_view name) const;
    bool empty() const { return sigs_.empty(); }
    std::size_t size() const { return sigs_.size(); }
    const std::vector<ToolSignature>& signatures() const { return sigs_; }

private:
    std::vector<ToolSignature> sigs_;
};

using Args = std::vector<std::pair<std::string, std::string>>;

std::optional<std::string> arg(const Args& args, std::string_view name);

enum class ActionKind { tool_call, agent_call, complete, plain_text };
const char* to_string(ActionKind kind);

struct ParsedAction {
    ActionKind kind = ActionKind::plain_text;
    std::string name;
    Args args;
    std::string trailing_text; // text before the call block
    std::string raw;           // the full generation as parsed

    bool operator==(const ParsedAction&) const = default;
};

// A generation that looked like a call but cannot be executed. Fed back to the
// model as a failed tool result.
struct ParseError {
    std::string message;
    std::string name; // tool/agent name when it got that far
    std::string raw;
};

using ParseResult = std::variant<ParsedAction, ParseError>;

enum class StopKind { stop_sequence, end_of_turn, length };

struct StopReason {
    StopKind kind = StopKind::end_of_turn;
    std::string sequence; // matched stop sequence when kind == stop_sequence

    static StopReason end_of_turn() { return {}; }
    static StopReason stop(std::string_view seq) { return {StopKind::stop_sequence, std::string(seq)}; }
    static StopReason length() { return {StopKind::length, {}}; }
    bool operator==(const StopReason&) const = default;
};

// Closing tags the endpoint must stop on: tool, agent (when callable agents exist), completion.
std::vector<std::string> stop_sequences(const Registry& tools, const Registry& agents);

// Full block including the closing tag. Throws Error(invalid_argument) for an unknown
// name or a missing required argument.
std::string render_tool_call(const Registry& tools, const std::string& name, const Args& args);
std::string render_agent_call(const Registry& agents, const std::string& name, const Args& args);
// Unchecked variants, for prompt examples and tests.
std::string format_tool_call(const std::string& name, const Args& args);
std::string format_agent_call(const std::string& name, const Args& args);

// Never throws. `text` excludes the stop sequence, as returned by the gateway.
ParseResult parse_generation(std::string_view text, const StopReason& stop, const Registry& tools,
                             const Registry& agents);

// Prompt-side documentation of the registries and of the calling convention.
std::string describe_tools(const Registry& tools);
std::string describe_agents(const Registry& agents);
std::string calling_convention(bool with_agents);

} // namespace ouro::protocol
