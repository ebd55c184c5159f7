#include "events/render.hpp"

#include "common/text.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace ouro::events {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string seconds(Millis ms) { return fixed(static_cast<double>(ms) / 1000.0, 1); }

class Renderer {
public:
    Renderer(const TreeSnapshot& tree, std::size_t truncation) : tree_(tree), truncation_(truncation) {}

    std::string run() {
        out_ << "EXECUTION TREE\n==============\n";
        if (auto* root = tree_.root()) node(*root, 0);
        auto t = tree_.totals();
        out_ << "\nTotal Duration: " << fixed(t.duration, 1) << "s\n";
        out_ << "Total Tokens: " << t.tokens << " (of which cached " << t.cached_tokens << ")\n";
        out_ << "Total Cost: $" << t.cost.to_string(3) << "\n";
        return out_.str();
    }

private:
    void indent(int depth) { out_ << std::string(static_cast<std::size_t>(depth) * 3, ' '); }

    void node(const ExecutionNode& n, int depth) {
        auto usage = tree_.node_usage(n.call_id);
        indent(depth);
        out_ << tree_.ordinal_path(n.call_id) << ' ' << n.agent_name << " [" << n.call_id << "] ("
             << seconds(tree_.node_duration(n)) << "s | " << usage.tokens << " tokens (cached "
             << fixed(usage.cached_fraction(), 2) << "))";
        if (n.status != NodeStatus::running) out_ << ' ' << to_string(n.status);
        out_ << '\n';

        int tool_calls = 0, messages = 0;
        for (auto& e : n.events) {
            if (e.kind == EventKind::tool_call) ++tool_calls;
            if (e.kind == EventKind::assistant_message) ++messages;
        }
        if (tool_calls + messages > 0) {
            indent(depth + 1);
            out_ << "[Stats] Events: ";
            if (tool_calls > 0) out_ << tool_calls << " tool calls" << (messages > 0 ? ", " : "");
            if (messages > 0) out_ << messages << " messages";
            out_ << '\n';
        }

        std::set<CallId> shown;
        for (std::size_t i = 0; i < n.events.size(); ++i) {
            const Event& e = n.events[i];
            switch (e.kind) {
            case EventKind::assistant_message:
                line(depth + 1, "[Assistant] t+" + seconds(e.timestamp) + "s | \"" + elide(e.payload.text, truncation_) + "\"");
                break;
            case EventKind::tool_call: {
                bool has_result = i + 1 < n.events.size() && n.events[i + 1].kind == EventKind::tool_result;
                if (!has_result) line(depth + 1, "[Tool] " + e.payload.name + " | running");
                break;
            }
            case EventKind::tool_result: {
                Millis started = e.timestamp;
                if (i > 0 && n.events[i - 1].kind == EventKind::tool_call) started = n.events[i - 1].timestamp;
                line(depth + 1, "[Tool] " + e.payload.name + " | " + seconds(e.timestamp - started) + "s → " +
                                    (e.payload.success.value_or(false) ? "Success" : "Failed"));
                break;
            }
            case EventKind::agent_call:
                if (auto* child = tree_.find(e.payload.target); child && shown.insert(child->call_id).second)
                    node(*child, depth + 1);
                break;
            case EventKind::agent_result:
                break;
            case EventKind::overseer_notification:
                line(depth + 1, "[Overseer] t+" + seconds(e.timestamp) + "s | \"" + elide(e.payload.text, truncation_) + "\"");
                break;
            case EventKind::cancellation:
                line(depth + 1, "[Cancelled] t+" + seconds(e.timestamp) + "s | \"" + elide(e.payload.text, truncation_) + "\"");
                break;
            }
        }
        // Children opened without an agent_call event still get rendered.
        for (auto& c : n.children)
            if (!shown.count(c)) node(tree_.at(c), depth + 1);
    }

    void line(int depth, const std::string& s) {
        indent(depth);
        out_ << s << '\n';
    }

    const TreeSnapshot& tree_;
    std::size_t truncation_;
    std::ostringstream out_;
};

} // namespace

std::string elide(const std::string& text, std::size_t max_chars) {
    std::string flat;
    flat.reserve(text.size());
    for (char c : text)
        if (c != '\n' && c != '\r') flat += c;
    flat.resize(text::utf8_prefix_length(flat, max_chars));
    return flat + "...";
}

std::string render_trace(const TreeSnapshot& tree, std::size_t truncation) {
    return Renderer(tree, truncation).run();
}

} // namespace ouro::events
