#include "events/event_store.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <cstdio>

namespace ouro::events {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

const char* to_string(EventKind kind) {
    switch (kind) {
    case EventKind::assistant_message: return "assistant_message";
    case EventKind::tool_call: return "tool_call";
    case EventKind::tool_result: return "tool_result";
    case EventKind::agent_call: return "agent_call";
    case EventKind::agent_result: return "agent_result";
    case EventKind::overseer_notification: return "overseer_notification";
    case EventKind::cancellation: return "cancellation";
    }
    return "?";
}

const char* to_string(NodeStatus status) {
    switch (status) {
    case NodeStatus::running: return "running";
    case NodeStatus::returned: return "returned";
    case NodeStatus::cancelled: return "cancelled";
    case NodeStatus::timed_out: return "timed_out";
    }
    return "?";
}

EventKind event_kind_from_string(const std::string& s) {
    for (auto k : {EventKind::assistant_message, EventKind::tool_call, EventKind::tool_result, EventKind::agent_call,
                   EventKind::agent_result, EventKind::overseer_notification, EventKind::cancellation})
        if (s == to_string(k)) return k;
    fail(ErrorCode::parse, "unknown event kind: " + s);
}

NodeStatus node_status_from_string(const std::string& s) {
    for (auto k : {NodeStatus::running, NodeStatus::returned, NodeStatus::cancelled, NodeStatus::timed_out})
        if (s == to_string(k)) return k;
    fail(ErrorCode::parse, "unknown node status: " + s);
}

void Usage::validate() const {
    if (prompt_tokens < 0 || completion_tokens < 0 || cached_tokens < 0)
        fail(ErrorCode::invalid_argument, "usage token counts must be non-negative");
    if (cached_tokens > prompt_tokens)
        fail(ErrorCode::invalid_argument, "cached_tokens exceeds prompt_tokens");
    if (cost < Money())
        fail(ErrorCode::invalid_argument, "usage cost must be non-negative");
}

// ---------------------------------------------------------------------------
// TreeSnapshot

TreeSnapshot TreeSnapshot::from_nodes(std::vector<ExecutionNode> nodes, Millis taken_at) {
    TreeSnapshot t;
    t.taken_at_ = taken_at;
    for (auto& n : nodes) {
        t.order_.push_back(n.call_id);
        auto id = n.call_id;
        if (!t.nodes_.emplace(id, std::move(n)).second) fail(ErrorCode::parse, "duplicate call id: " + id);
    }
    return t;
}

const ExecutionNode* TreeSnapshot::root() const {
    return order_.empty() ? nullptr : find(order_.front());
}

const ExecutionNode* TreeSnapshot::find(const CallId& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

const ExecutionNode& TreeSnapshot::at(const CallId& id) const {
    auto* n = find(id);
    if (!n) fail(ErrorCode::not_found, "unknown call id: " + id);
    return *n;
}

std::vector<const ExecutionNode*> TreeSnapshot::nodes() const {
    std::vector<const ExecutionNode*> out;
    out.reserve(order_.size());
    for (auto& id : order_) out.push_back(&nodes_.at(id));
    return out;
}

std::size_t TreeSnapshot::event_count() const {
    std::size_t n = 0;
    for (auto& [_, node] : nodes_) n += node.events.size();
    return n;
}

std::string TreeSnapshot::ordinal_path(const CallId& id) const {
    std::vector<int> parts;
    const ExecutionNode* n = &at(id);
    while (n) {
        parts.push_back(n->parent ? n->ordinal : 1);
        n = n->parent ? find(*n->parent) : nullptr;
    }
    std::string out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        if (!out.empty()) out += '.';
        out += std::to_string(*it);
    }
    return out;
}

int TreeSnapshot::depth(const CallId& id) const {
    int d = 0;
    const ExecutionNode* n = &at(id);
    while (n->parent) {
        n = &at(*n->parent);
        ++d;
    }
    return d;
}

bool TreeSnapshot::is_ancestor(const CallId& ancestor, const CallId& node) const {
    const ExecutionNode* n = find(node);
    while (n && n->parent) {
        if (*n->parent == ancestor) return true;
        n = find(*n->parent);
    }
    return false;
}

Millis TreeSnapshot::node_duration(const ExecutionNode& n) const {
    Millis end = n.end ? *n.end : taken_at_;
    return std::max<Millis>(0, end - n.start);
}

UsageTotals TreeSnapshot::node_usage(const CallId& id) const {
    const auto& n = at(id);
    UsageTotals t;
    t.duration = static_cast<double>(node_duration(n)) / 1000.0;
    for (auto& e : n.events) {
        if (!e.usage) continue;
        t.tokens += e.usage->tokens();
        t.prompt_tokens += e.usage->prompt_tokens;
        t.cached_tokens += e.usage->cached_tokens;
        t.cost += e.usage->cost;
    }
    return t;
}

UsageTotals TreeSnapshot::subtree_usage(const CallId& id) const {
    UsageTotals t = node_usage(id);
    for (auto& child : at(id).children) {
        auto c = subtree_usage(child);
        t.duration += c.duration;
        t.tokens += c.tokens;
        t.prompt_tokens += c.prompt_tokens;
        t.cached_tokens += c.cached_tokens;
        t.cost += c.cost;
    }
    return t;
}

UsageTotals TreeSnapshot::totals() const {
    if (order_.empty()) return {};
    return subtree_usage(order_.front());
}

std::vector<Event> TreeSnapshot::all_events() const {
    std::vector<Event> out;
    for (auto& [_, node] : nodes_) out.insert(out.end(), node.events.begin(), node.events.end());
    std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.event_id < b.event_id; });
    return out;
}

// ---------------------------------------------------------------------------
// EventStore

EventStore::EventStore(std::uint64_t id_seed) : id_seed_(id_seed), epoch_(SteadyClock::now()) {}

std::unique_ptr<EventStore> EventStore::from_snapshot(const TreeSnapshot& snapshot) {
    auto store = std::make_unique<EventStore>();
    store->nodes_ = snapshot.nodes_;
    store->order_ = snapshot.order_;
    if (!store->order_.empty()) store->root_ = store->order_.front();
    store->log_ = snapshot.all_events();
    store->next_event_id_ = store->log_.empty() ? 1 : store->log_.back().event_id + 1;
    Millis latest = snapshot.taken_at_;
    store->clock_ = [latest] { return latest; };
    return store;
}

Millis EventStore::now() const {
    if (clock_) return clock_();
    return std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - epoch_).count();
}

void EventStore::set_clock(ClockFn clock) {
    std::lock_guard lock(mu_);
    clock_ = std::move(clock);
}

CallId EventStore::next_call_id() {
    for (;;) {
        auto h = splitmix64(id_seed_ * 0x100000001B3ULL + ++id_counter_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "agent_%08x", static_cast<unsigned>(h & 0xffffffffu));
        if (!nodes_.count(buf)) return buf;
    }
}

void EventStore::bump() {
    ++version_;
    cv_.notify_all();
}

CallId EventStore::open_call(const std::optional<CallId>& parent, const std::string& agent_name) {
    std::lock_guard lock(mu_);
    ExecutionNode node;
    node.agent_name = agent_name;
    node.start = now();
    if (parent) {
        auto it = nodes_.find(*parent);
        if (it == nodes_.end()) fail(ErrorCode::not_found, "unknown parent call id: " + *parent);
        if (it->second.terminal()) fail(ErrorCode::conflict, "parent call " + *parent + " is not running");
        node.parent = *parent;
        node.ordinal = static_cast<int>(it->second.children.size()) + 1;
        node.start = std::max(node.start, it->second.start);
    } else if (root_) {
        fail(ErrorCode::conflict, "a root call already exists");
    }
    node.call_id = next_call_id();
    auto id = node.call_id;
    if (parent) nodes_.at(*parent).children.push_back(id);
    else root_ = id;
    order_.push_back(id);
    nodes_.emplace(id, std::move(node));
    bump();
    return id;
}

void EventStore::append_locked(ExecutionNode& node, Event event) {
    event.event_id = next_event_id_++;
    event.call_id = node.call_id;
    Millis t = now();
    if (!node.events.empty()) t = std::max(t, node.events.back().timestamp);
    t = std::max(t, node.start);
    event.timestamp = t;
    node.events.push_back(event);
    log_.push_back(std::move(event));
}

void EventStore::close_call(const CallId& id, NodeStatus status, std::optional<std::string> result,
                            const std::string& reason, const std::string& source) {
    std::lock_guard lock(mu_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail(ErrorCode::not_found, "close of unknown call id: " + id);
    auto& node = it->second;
    if (node.terminal()) fail(ErrorCode::conflict, "call " + id + " already closed (" + to_string(node.status) + ")");
    if (status == NodeStatus::running) fail(ErrorCode::invalid_argument, "cannot close a call as running");
    for (auto& child : node.children)
        if (!nodes_.at(child).terminal())
            fail(ErrorCode::conflict, "call " + id + " still has running child " + child);
    if (status == NodeStatus::returned && !result) result = std::string();
    if (status == NodeStatus::cancelled || status == NodeStatus::timed_out) {
        bool has = std::any_of(node.events.begin(), node.events.end(),
                               [](const Event& e) { return e.kind == EventKind::cancellation; });
        if (!has) {
            Event e;
            e.kind = EventKind::cancellation;
            e.payload.text = reason.empty() ? std::string(to_string(status)) : reason;
            e.payload.source = source;
            append_locked(node, std::move(e));
        }
    }
    Millis end = now();
    if (!node.events.empty()) end = std::max(end, node.events.back().timestamp);
    for (auto& child : node.children) end = std::max(end, *nodes_.at(child).end);
    node.end = std::max(end, node.start);
    node.status = status;
    node.result = std::move(result);
    bump();
}

EventId EventStore::record_event(const CallId& id, Event event) {
    if (event.usage) event.usage->validate();
    std::lock_guard lock(mu_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail(ErrorCode::not_found, "unknown call id: " + id);
    if (it->second.terminal()) fail(ErrorCode::conflict, "call " + id + " is already " + to_string(it->second.status));
    append_locked(it->second, std::move(event));
    bump();
    return next_event_id_ - 1;
}

EventId EventStore::record(const CallId& id, EventKind kind, Payload payload, std::optional<Usage> usage) {
    Event e;
    e.kind = kind;
    e.payload = std::move(payload);
    e.usage = std::move(usage);
    return record_event(id, std::move(e));
}

TreeSnapshot EventStore::snapshot() const {
    std::lock_guard lock(mu_);
    TreeSnapshot s;
    s.nodes_ = nodes_;
    s.order_ = order_;
    s.taken_at_ = now();
    return s;
}

std::vector<Event> EventStore::events_since(EventId since, std::size_t limit) const {
    std::lock_guard lock(mu_);
    std::vector<Event> out;
    // log_ is sorted by event_id, which starts at 1 and has no gaps.
    auto first = std::upper_bound(log_.begin(), log_.end(), since,
                                  [](EventId v, const Event& e) { return v < e.event_id; });
    for (auto it = first; it != log_.end() && out.size() < limit; ++it) out.push_back(*it);
    return out;
}

std::vector<Event> EventStore::wait_events_since(EventId since, Deadline deadline, std::size_t limit) const {
    {
        std::unique_lock lock(mu_);
        auto ready = [&] { return !log_.empty() && log_.back().event_id > since; };
        if (deadline) cv_.wait_until(lock, *deadline, ready);
        else cv_.wait(lock, ready);
    }
    return events_since(since, limit);
}

std::optional<CallId> EventStore::root_id() const {
    std::lock_guard lock(mu_);
    return root_;
}

std::optional<NodeStatus> EventStore::status(const CallId& id) const {
    std::lock_guard lock(mu_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return std::nullopt;
    return it->second.status;
}

bool EventStore::running(const CallId& id) const {
    return status(id) == NodeStatus::running;
}

std::optional<CallId> EventStore::parent_of(const CallId& id) const {
    std::lock_guard lock(mu_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail(ErrorCode::not_found, "unknown call id: " + id);
    return it->second.parent;
}

std::vector<CallId> EventStore::running_descendants(const CallId& id) const {
    std::lock_guard lock(mu_);
    std::vector<CallId> out;
    std::function<void(const CallId&)> visit = [&](const CallId& c) {
        for (auto& child : nodes_.at(c).children) {
            visit(child);
            if (!nodes_.at(child).terminal()) out.push_back(child);
        }
    };
    if (!nodes_.count(id)) fail(ErrorCode::not_found, "unknown call id: " + id);
    visit(id);
    return out;
}

std::size_t EventStore::event_count() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

std::size_t EventStore::notification_count(const CallId& id) const {
    std::lock_guard lock(mu_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return 0;
    return static_cast<std::size_t>(std::count_if(it->second.events.begin(), it->second.events.end(), [](const Event& e) {
        return e.kind == EventKind::overseer_notification;
    }));
}

std::uint64_t EventStore::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

std::uint64_t EventStore::wait_for_change(std::uint64_t seen, Deadline deadline) const {
    std::unique_lock lock(mu_);
    auto changed = [&] { return version_ != seen; };
    if (deadline) cv_.wait_until(lock, *deadline, changed);
    else cv_.wait(lock, changed);
    return version_;
}

} // namespace ouro::events
