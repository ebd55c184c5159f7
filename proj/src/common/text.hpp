#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ouro::text {

std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// Largest n <= max_bytes such that s[0, n) does not end in the middle of a UTF-8 sequence.
std::size_t utf8_prefix_length(std::string_view s, std::size_t max_bytes);

// Prompt templates use `{slot}` placeholders; `{{` and `}}` are literal braces.
std::set<std::string> template_slots(std::string_view tmpl);
// Throws Error(config) naming the first slot missing from `values`.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

} // namespace ouro::text
