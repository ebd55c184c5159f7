#pragma once

#include "events/event_store.hpp"

#include <string>

namespace ouro::events {

inline constexpr std::size_t kDefaultTruncation = 80;

// Human/overseer-readable execution tree. Pure function of its inputs.
//
//   EXECUTION TREE
//   ==============
//   1 main [agent_1a2b3c4d] (134.4s | 95752 tokens (cached 0.57))
//      [Stats] Events: 1 tool calls, 6 messages
//      [Assistant] t+0.1s | "I'll orchestrate the solution to this problem foll..."
//      1.1 reasoning_agent [agent_...] (...)
//      [Tool] calculate | 0.0s → Success
//   ...
//   Total Duration: 249.9s
//   Total Tokens: 407766 (of which cached 232952)
//   Total Cost: $0.712
//
// Token counts on node lines are node-local; the footer sums the whole tree.
std::string render_trace(const TreeSnapshot& tree, std::size_t truncation = kDefaultTruncation);

// Newlines removed, cut to `max_chars` bytes on a UTF-8 boundary, "..." appended.
std::string elide(const std::string& text, std::size_t max_chars);

} // namespace ouro::events
