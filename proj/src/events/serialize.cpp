#include "events/serialize.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace ouro::events {

namespace {

double to_seconds(Millis ms) { return static_cast<double>(ms) / 1000.0; }
Millis from_seconds(double s) { return static_cast<Millis>(std::llround(s * 1000.0)); }

json payload_to_json(const Payload& p) {
    json j = json::object();
    if (!p.text.empty()) j["text"] = p.text;
    if (!p.name.empty()) j["name"] = p.name;
    if (!p.args.empty()) {
        json args = json::object();
        for (auto& [k, v] : p.args) args[k] = v;
        j["args"] = args;
    }
    if (p.success) j["success"] = *p.success;
    if (!p.target.empty()) j["target"] = p.target;
    if (!p.source.empty()) j["source"] = p.source;
    return j;
}

Payload payload_from_json(const json& j) {
    Payload p;
    if (!j.is_object()) return p;
    p.text = j.value("text", "");
    p.name = j.value("name", "");
    if (j.contains("args"))
        for (auto& [k, v] : j["args"].items()) p.args.emplace_back(k, v.get<std::string>());
    if (j.contains("success")) p.success = j["success"].get<bool>();
    p.target = j.value("target", "");
    p.source = j.value("source", "");
    return p;
}

void node_from_json(const json& j, std::vector<ExecutionNode>& nodes) {
    ExecutionNode n;
    n.call_id = j.at("call_id").get<std::string>();
    n.agent_name = j.at("agent_name").get<std::string>();
    if (!j.at("parent").is_null()) n.parent = j["parent"].get<std::string>();
    n.ordinal = j.at("ordinal").get<int>();
    n.status = node_status_from_string(j.at("status").get<std::string>());
    n.start = from_seconds(j.at("start").get<double>());
    if (!j.at("end").is_null()) n.end = from_seconds(j["end"].get<double>());
    for (auto& e : j.at("events")) n.events.push_back(event_from_json(e));
    if (!j.at("result").is_null()) n.result = j["result"].get<std::string>();
    for (auto& c : j.at("children")) n.children.push_back(c.at("call_id").get<std::string>());
    nodes.push_back(std::move(n));
    for (auto& c : j.at("children")) node_from_json(c, nodes);
}

} // namespace

json to_json(const Usage& u) {
    return json{{"prompt_tokens", u.prompt_tokens},
                {"completion_tokens", u.completion_tokens},
                {"cached_tokens", u.cached_tokens},
                {"cost", u.cost.to_string()}};
}

Usage usage_from_json(const json& j) {
    Usage u;
    u.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    u.completion_tokens = j.value("completion_tokens", std::int64_t{0});
    u.cached_tokens = j.value("cached_tokens", std::int64_t{0});
    if (j.contains("cost")) {
        auto& c = j["cost"];
        u.cost = c.is_string() ? Money::parse(c.get<std::string>()) : Money::from_double(c.get<double>());
    }
    return u;
}

json to_json(const Event& e) {
    json j;
    j["event_id"] = e.event_id;
    j["call_id"] = e.call_id;
    j["kind"] = to_string(e.kind);
    j["timestamp"] = to_seconds(e.timestamp);
    j["payload"] = payload_to_json(e.payload);
    j["usage"] = e.usage ? to_json(*e.usage) : json(nullptr);
    return j;
}

Event event_from_json(const json& j) {
    Event e;
    e.event_id = j.at("event_id").get<EventId>();
    e.call_id = j.at("call_id").get<std::string>();
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.timestamp = from_seconds(j.at("timestamp").get<double>());
    e.payload = payload_from_json(j.value("payload", json::object()));
    if (j.contains("usage") && !j["usage"].is_null()) e.usage = usage_from_json(j["usage"]);
    return e;
}

json node_to_json(const TreeSnapshot& tree, const ExecutionNode& n) {
    json j;
    j["call_id"] = n.call_id;
    j["agent_name"] = n.agent_name;
    j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    j["ordinal"] = n.ordinal;
    j["ordinal_path"] = tree.ordinal_path(n.call_id);
    j["status"] = to_string(n.status);
    j["start"] = to_seconds(n.start);
    j["end"] = n.end ? json(to_seconds(*n.end)) : json(nullptr);
    json events = json::array();
    for (auto& e : n.events) events.push_back(to_json(e));
    j["events"] = std::move(events);
    j["result"] = n.result ? json(*n.result) : json(nullptr);
    auto usage = tree.node_usage(n.call_id);
    j["usage"] = json{{"duration", usage.duration},
                      {"tokens", usage.tokens},
                      {"cached_tokens", usage.cached_tokens},
                      {"cost", usage.cost.to_string()}};
    json children = json::array();
    for (auto& c : n.children) children.push_back(node_to_json(tree, tree.at(c)));
    j["children"] = std::move(children);
    return j;
}

json tree_to_json(const TreeSnapshot& tree) {
    json j;
    j["taken_at"] = to_seconds(tree.taken_at());
    auto t = tree.totals();
    j["totals"] = json{{"duration", t.duration},
                       {"tokens", t.tokens},
                       {"cached_tokens", t.cached_tokens},
                       {"cost", t.cost.to_string()}};
    j["root"] = tree.root() ? node_to_json(tree, *tree.root()) : json(nullptr);
    return j;
}

TreeSnapshot tree_from_json(const json& j) {
    std::vector<ExecutionNode> nodes;
    if (j.contains("root") && !j["root"].is_null()) node_from_json(j["root"], nodes);
    // Creation order is recoverable from the start time of each node's first appearance.
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const ExecutionNode& a, const ExecutionNode& b) { return a.start < b.start; });
    return TreeSnapshot::from_nodes(std::move(nodes), from_seconds(j.value("taken_at", 0.0)));
}

void write_event_log(std::ostream& out, const std::vector<Event>& events) {
    for (auto& e : events) out << to_json(e).dump() << '\n';
}

std::vector<Event> read_event_log(std::istream& in) {
    std::vector<Event> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(event_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            fail(ErrorCode::parse, std::string("bad event log line: ") + e.what());
        }
    }
    return out;
}

void save_tree(const std::filesystem::path& path, const TreeSnapshot& tree) {
    fsx::write_file_atomic(path, tree_to_json(tree).dump(2) + "\n");
}

TreeSnapshot load_tree(const std::filesystem::path& path) {
    try {
        return tree_from_json(json::parse(fsx::read_file(path)));
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, "bad tree file " + path.string() + ": " + e.what());
    }
}

} // namespace ouro::events
