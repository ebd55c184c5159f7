#pragma once

#include "common/cancel.hpp"
#include "events/event.hpp"

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace ouro::events {

// Point-in-time copy of the callgraph. Later appends to the store never touch it.
class TreeSnapshot {
public:
    TreeSnapshot() = default;
    // `nodes` in creation order; children lists must already be filled in.
    static TreeSnapshot from_nodes(std::vector<ExecutionNode> nodes, Millis taken_at);

    bool empty() const { return order_.empty(); }
    const ExecutionNode* root() const;
    const ExecutionNode* find(const CallId& id) const;
    const ExecutionNode& at(const CallId& id) const;
    // Nodes in creation order.
    std::vector<const ExecutionNode*> nodes() const;
    std::size_t node_count() const { return order_.size(); }
    std::size_t event_count() const;
    Millis taken_at() const { return taken_at_; }

    // "1", "1.2", "1.2.1", ...
    std::string ordinal_path(const CallId& id) const;
    int depth(const CallId& id) const;
    bool is_ancestor(const CallId& ancestor, const CallId& node) const;

    // Node-local usage (events recorded on this node only).
    UsageTotals node_usage(const CallId& id) const;
    // Node plus all descendants.
    UsageTotals subtree_usage(const CallId& id) const;
    UsageTotals totals() const;
    // Duration of a node; running nodes are measured up to taken_at().
    Millis node_duration(const ExecutionNode& n) const;

    // Every event in global id order.
    std::vector<Event> all_events() const;

private:
    friend class EventStore;
    std::map<CallId, ExecutionNode> nodes_;
    std::vector<CallId> order_;
    Millis taken_at_ = 0;
};

// Thread-safe event-sourced record of a run. All mutation goes through here.
class EventStore {
public:
    using ClockFn = std::function<Millis()>;

    // `id_seed` fixes generated call ids so scripted runs are reproducible.
    explicit EventStore(std::uint64_t id_seed = 0);
    EventStore(const EventStore&) = delete;
    EventStore& operator=(const EventStore&) = delete;

    // Rebuilds a store from a persisted tree (ids and timestamps preserved).
    static std::unique_ptr<EventStore> from_snapshot(const TreeSnapshot& snapshot);

    CallId open_call(const std::optional<CallId>& parent, const std::string& agent_name);
    // Cancelled and timed-out closes append a cancellation event when the node has none.
    void close_call(const CallId& id, NodeStatus status, std::optional<std::string> result = {},
                    const std::string& reason = {}, const std::string& source = "runtime");

    // Assigns event_id, call_id and timestamp. Throws not_found / conflict / invalid_argument.
    EventId record_event(const CallId& id, Event event);
    EventId record(const CallId& id, EventKind kind, Payload payload, std::optional<Usage> usage = {});

    TreeSnapshot snapshot() const;
    std::vector<Event> events_since(EventId since, std::size_t limit = 10'000) const;
    // Waits until an event newer than `since` exists or the deadline passes.
    std::vector<Event> wait_events_since(EventId since, Deadline deadline, std::size_t limit = 10'000) const;

    std::optional<CallId> root_id() const;
    std::optional<NodeStatus> status(const CallId& id) const;
    bool running(const CallId& id) const;
    std::optional<CallId> parent_of(const CallId& id) const;
    std::vector<CallId> running_descendants(const CallId& id) const; // deepest first
    std::size_t event_count() const;
    // Number of overseer_notification events on a node.
    std::size_t notification_count(const CallId& id) const;

    // Monotonic change counter plus a way to block on it.
    std::uint64_t version() const;
    std::uint64_t wait_for_change(std::uint64_t seen, Deadline deadline) const;

    Millis now() const;
    void set_clock(ClockFn clock);

private:
    CallId next_call_id();
    void bump();
    void append_locked(ExecutionNode& node, Event event);

    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::map<CallId, ExecutionNode> nodes_;
    std::vector<CallId> order_;
    std::vector<Event> log_; // global append order == event_id order
    std::optional<CallId> root_;
    EventId next_event_id_ = 1;
    std::uint64_t id_seed_;
    std::uint64_t id_counter_ = 0;
    std::uint64_t version_ = 0;
    SteadyClock::time_point epoch_;
    ClockFn clock_;
};

} // namespace ouro::events
