#pragma once

#include "events/event_store.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>

namespace ouro::events {

using json = nlohmann::ordered_json;

json to_json(const Usage& usage);
Usage usage_from_json(const json& j);
json to_json(const Event& event);
Event event_from_json(const json& j);

// Node with its children nested under "children".
json node_to_json(const TreeSnapshot& tree, const ExecutionNode& node);
// {"taken_at": s, "totals": {...}, "root": node|null}
json tree_to_json(const TreeSnapshot& tree);
TreeSnapshot tree_from_json(const json& j);

// One Event object per line, in event_id order.
void write_event_log(std::ostream& out, const std::vector<Event>& events);
std::vector<Event> read_event_log(std::istream& in);

void save_tree(const std::filesystem::path& path, const TreeSnapshot& tree);
TreeSnapshot load_tree(const std::filesystem::path& path);

} // namespace ouro::events
