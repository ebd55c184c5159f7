#include "protocol/protocol.hpp"

#include "common/error.hpp"
#include "common/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace ouro::protocol {

namespace {

struct BlockSyntax {
    std::string_view open, close, name_tag, args_tag;
    const char* what;
};

constexpr BlockSyntax kToolSyntax{kToolCallOpen, kToolCallClose, "TOOL_NAME", "TOOL_ARGS", "tool"};
constexpr BlockSyntax kAgentSyntax{kAgentCallOpen, kAgentCallClose, "AGENT_NAME", "AGENT_ARGS", "agent"};

std::string open_tag(std::string_view name) { return "<" + std::string(name) + ">"; }
std::string close_tag(std::string_view name) { return "</" + std::string(name) + ">"; }

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'; }

void skip_ws(std::string_view s, std::size_t& pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

bool consume(std::string_view s, std::size_t& pos, std::string_view lit) {
    if (s.substr(pos, lit.size()) != lit) return false;
    pos += lit.size();
    return true;
}

std::string format_block(const BlockSyntax& syn, const std::string& name, const Args& args) {
    std::string out;
    out += syn.open;
    out += "\n" + open_tag(syn.name_tag) + name + close_tag(syn.name_tag) + "\n";
    out += open_tag(syn.args_tag) + "\n";
    for (auto& [k, v] : args) out += open_tag(k) + v + close_tag(k) + "\n";
    out += close_tag(syn.args_tag) + "\n";
    out += syn.close;
    return out;
}

std::string render_checked(const BlockSyntax& syn, const Registry& reg, const std::string& name, const Args& args) {
    const ToolSignature* sig = reg.find(name);
    if (!sig) fail(ErrorCode::invalid_argument, std::string("unknown ") + syn.what + ": " + name);
    for (auto& a : sig->args)
        if (a.required && !arg(args, a.name))
            fail(ErrorCode::invalid_argument, "missing required argument '" + a.name + "' for " + name);
    return format_block(syn, name, args);
}

struct Block {
    std::string name;
    Args args;
};

// Parses one call block starting at `start` (the opening tag). Returns an error
// message on failure.
std::variant<Block, std::string> parse_block(std::string_view s, std::size_t start, const BlockSyntax& syn) {
    std::size_t pos = start + syn.open.size();
    Block b;
    skip_ws(s, pos);
    const auto name_open = open_tag(syn.name_tag), name_close = close_tag(syn.name_tag);
    if (!consume(s, pos, name_open)) return "expected " + name_open + " after " + std::string(syn.open);
    auto name_end = s.find(name_close, pos);
    if (name_end == std::string_view::npos) return "missing " + name_close;
    b.name = text::trim(s.substr(pos, name_end - pos));
    pos = name_end + name_close.size();
    if (b.name.empty()) return std::string("empty ") + syn.what + " name";

    skip_ws(s, pos);
    const auto args_open = open_tag(syn.args_tag), args_close = close_tag(syn.args_tag);
    if (pos >= s.size() || consume(s, pos, syn.close)) return b;
    if (!consume(s, pos, args_open)) return "expected " + args_open + " after " + name_close;

    std::set<std::string> seen;
    for (;;) {
        skip_ws(s, pos);
        if (pos >= s.size() || consume(s, pos, args_close)) break;
        if (s[pos] != '<') return "expected an argument tag inside " + args_open;
        std::size_t p = pos + 1;
        while (p < s.size() && is_ident_char(s[p])) ++p;
        if (p == pos + 1 || p >= s.size() || s[p] != '>')
            return "malformed argument tag near: " + std::string(s.substr(pos, 40));
        std::string key(s.substr(pos + 1, p - pos - 1));
        auto close = close_tag(key);
        auto value_start = p + 1;
        auto value_end = s.find(close, value_start);
        if (value_end == std::string_view::npos) return "argument '" + key + "' has no closing " + close;
        if (!seen.insert(key).second) return "argument '" + key + "' given twice";
        b.args.emplace_back(key, std::string(s.substr(value_start, value_end - value_start)));
        pos = value_end + close.size();
    }
    return b;
}

ParseResult validate(const Block& b, const Registry& reg, const BlockSyntax& syn, ActionKind kind,
                     std::string trailing, std::string_view raw) {
    const ToolSignature* sig = reg.find(b.name);
    if (!sig) {
        std::string known;
        for (auto& s : reg.signatures()) known += (known.empty() ? "" : ", ") + s.name;
        return ParseError{std::string("unknown ") + syn.what + " '" + b.name + "'; available: " +
                              (known.empty() ? "none" : known),
                          b.name, std::string(raw)};
    }
    for (auto& a : sig->args)
        if (a.required && !arg(b.args, a.name))
            return ParseError{"missing required argument '" + a.name + "' for " + b.name, b.name, std::string(raw)};
    for (auto& [k, _] : b.args) {
        bool known = std::any_of(sig->args.begin(), sig->args.end(), [&](const ArgSpec& a) { return a.name == k; });
        if (!known) return ParseError{"unknown argument '" + k + "' for " + b.name, b.name, std::string(raw)};
    }
    ParsedAction act;
    act.kind = kind;
    act.name = b.name;
    act.args = b.args;
    act.trailing_text = std::move(trailing);
    act.raw = std::string(raw);
    return act;
}

ParsedAction plain(std::string_view text) {
    ParsedAction a;
    a.kind = ActionKind::plain_text;
    a.trailing_text = std::string(text);
    a.raw = std::string(text);
    return a;
}

ParsedAction complete(std::string_view text, std::size_t at) {
    ParsedAction a;
    a.kind = ActionKind::complete;
    a.trailing_text = std::string(text.substr(0, at));
    a.raw = std::string(text);
    return a;
}

ParseResult parse_call(std::string_view text, const BlockSyntax& syn, const Registry& reg, ActionKind kind,
                       bool strict) {
    auto start = text.find(syn.open);
    if (start == std::string_view::npos) {
        if (strict) return ParseError{std::string("stopped on ") + std::string(syn.close) + " but no " +
                                          std::string(syn.open) + " block was found",
                                      {}, std::string(text)};
        return plain(text);
    }
    // The first block that parses wins; a value may itself mention the opening tag.
    std::string first_error;
    for (auto at = start; at != std::string_view::npos; at = text.find(syn.open, at + 1)) {
        auto parsed = parse_block(text, at, syn);
        if (auto* b = std::get_if<Block>(&parsed))
            return validate(*b, reg, syn, kind, std::string(text.substr(0, at)), text);
        if (first_error.empty()) first_error = std::get<std::string>(parsed);
    }
    if (!strict) return plain(text);
    return ParseError{"malformed " + std::string(syn.what) + " call: " + first_error, {}, std::string(text)};
}

} // namespace

Registry::Registry(std::vector<ToolSignature> sigs) {
    for (auto& s : sigs) add(std::move(s));
}

void Registry::add(ToolSignature sig) {
    if (sig.name.empty() || !std::all_of(sig.name.begin(), sig.name.end(), is_ident_char))
        fail(ErrorCode::invalid_argument, "invalid name: '" + sig.name + "'");
    if (find(sig.name)) fail(ErrorCode::invalid_argument, "duplicate name: " + sig.name);
    std::set<std::string> names;
    for (auto& a : sig.args) {
        if (a.name.empty() || !std::all_of(a.name.begin(), a.name.end(), is_ident_char))
            fail(ErrorCode::invalid_argument, "invalid argument name '" + a.name + "' in " + sig.name);
        if (!names.insert(a.name).second)
            fail(ErrorCode::invalid_argument, "duplicate argument '" + a.name + "' in " + sig.name);
    }
    sigs_.push_back(std::move(sig));
}

const ToolSignature* Registry::find(std::string_view name) const {
    for (auto& s : sigs_)
        if (s.name == name) return &s;
    return nullptr;
}

std::optional<std::string> arg(const Args& args, std::string_view name) {
    for (auto& [k, v] : args)
        if (k == name) return v;
    return std::nullopt;
}

const char* to_string(ActionKind kind) {
    switch (kind) {
    case ActionKind::tool_call: return "tool_call";
    case ActionKind::agent_call: return "agent_call";
    case ActionKind::complete: return "complete";
    case ActionKind::plain_text: return "plain_text";
    }
    return "?";
}

std::vector<std::string> stop_sequences(const Registry& tools, const Registry& agents) {
    std::vector<std::string> out;
    if (!tools.empty()) out.emplace_back(kToolCallClose);
    if (!agents.empty()) out.emplace_back(kAgentCallClose);
    out.emplace_back(kCompleteClose);
    return out;
}

std::string format_tool_call(const std::string& name, const Args& args) { return format_block(kToolSyntax, name, args); }
std::string format_agent_call(const std::string& name, const Args& args) { return format_block(kAgentSyntax, name, args); }

std::string render_tool_call(const Registry& tools, const std::string& name, const Args& args) {
    return render_checked(kToolSyntax, tools, name, args);
}

std::string render_agent_call(const Registry& agents, const std::string& name, const Args& args) {
    return render_checked(kAgentSyntax, agents, name, args);
}

ParseResult parse_generation(std::string_view text, const StopReason& stop, const Registry& tools,
                             const Registry& agents) {
    try {
        if (stop.kind == StopKind::stop_sequence) {
            if (stop.sequence == kToolCallClose) return parse_call(text, kToolSyntax, tools, ActionKind::tool_call, true);
            if (stop.sequence == kAgentCallClose)
                return parse_call(text, kAgentSyntax, agents, ActionKind::agent_call, true);
            if (stop.sequence == kCompleteClose) {
                auto at = text.find(kCompleteOpen);
                return complete(text, at == std::string_view::npos ? text.size() : at);
            }
        }
        // End of turn (or an unknown stop): take whichever construct appears first.
        auto tool_at = text.find(kToolCallOpen);
        auto agent_at = text.find(kAgentCallOpen);
        auto done_at = text.find(kCompleteOpen);
        auto first = std::min({tool_at, agent_at, done_at});
        if (first == std::string_view::npos) return plain(text);
        if (first == done_at) return complete(text, done_at);
        const bool tool_first = first == tool_at;
        auto r = tool_first ? parse_call(text, kToolSyntax, tools, ActionKind::tool_call, false)
                            : parse_call(text, kAgentSyntax, agents, ActionKind::agent_call, false);
        auto* act = std::get_if<ParsedAction>(&r);
        if (stop.kind == StopKind::length && act && act->kind == ActionKind::plain_text)
            return ParseError{"generation hit the length limit inside a call block", {}, std::string(text)};
        return r;
    } catch (...) {
        return ParseError{"internal parser failure", {}, std::string(text)};
    }
}

std::string describe_tools(const Registry& tools) {
    std::string out;
    for (auto& t : tools.signatures()) {
        out += "### " + t.name + "\n" + text::trim(t.doc) + "\n";
        if (!t.args.empty()) {
            out += "Arguments:\n";
            for (auto& a : t.args)
                out += "- " + a.name + (a.required ? "" : " (optional)") + ": " + a.doc + "\n";
        }
        Args example;
        for (auto& a : t.args)
            if (a.required) example.emplace_back(a.name, "...");
        out += "Usage:\n" + format_tool_call(t.name, example) + "\n\n";
    }
    return out;
}

std::string describe_agents(const Registry& agents) {
    std::string out;
    for (auto& t : agents.signatures()) {
        out += "### " + t.name + "\n" + text::trim(t.doc) + "\n";
        if (!t.args.empty()) {
            out += "Arguments:\n";
            for (auto& a : t.args) out += "- " + a.name + (a.required ? "" : " (optional)") + ": " + a.doc + "\n";
        }
        Args example;
        for (auto& a : t.args)
            if (a.required) example.emplace_back(a.name, "...");
        out += "Usage:\n" + format_agent_call(t.name, example) + "\n\n";
    }
    return out;
}

std::string calling_convention(bool with_agents) {
    std::string out =
        "To use a tool, write a block of this form and then stop:\n" +
        format_tool_call("tool_name", {{"arg1", "value1"}, {"arg2", "value2"}}) +
        "\nArgument values are taken literally up to their closing tag, so file contents and code need no "
        "escaping. Only one call per turn; the result is shown to you before you continue.\n";
    if (with_agents)
        out += "\nTo delegate to a sub-agent, use the same shape with agent tags:\n" +
               format_agent_call("agent_name", {{"arg1", "value1"}}) +
               "\nThe sub-agent starts with a fresh context and returns a single string.\n";
    out += "\nWhen you have nothing left to do, write <COMPLETE></COMPLETE>.\n";
    return out;
}

} // namespace ouro::protocol
