#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ouro::context {

// Line-level unified diff (Myers). Lines keep their terminators so a missing final
// newline survives the roundtrip via the usual "\ No newline at end of file" marker.
//
// Returns "" when the inputs are equal.
std::string unified_diff(std::string_view before, std::string_view after, const std::string& path,
                         int context_lines = 3);

// Applies a diff produced by unified_diff. Throws Error(parse) when a hunk does not
// match `base` at its stated position.
std::string apply_unified_diff(std::string_view base, std::string_view diff);

// Longest common subsequence length over lines (terminators ignored).
std::size_t lcs_lines(const std::vector<std::string>& a, const std::vector<std::string>& b);

} // namespace ouro::context
