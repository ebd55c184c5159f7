#include "common/text.hpp"

#include "common/error.hpp"

#include <cctype>

namespace ouro::text {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::size_t utf8_prefix_length(std::string_view s, std::size_t max_bytes) {
    if (max_bytes >= s.size()) return s.size();
    std::size_t n = max_bytes;
    // Back off over continuation bytes so we cut before a lead byte.
    while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
    return n;
}

namespace {

template <typename OnText, typename OnSlot>
void scan_template(std::string_view tmpl, OnText on_text, OnSlot on_slot) {
    std::size_t i = 0;
    while (i < tmpl.size()) {
        char c = tmpl[i];
        if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            on_text("{");
            i += 2;
        } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            on_text("}");
            i += 2;
        } else if (c == '{') {
            auto close = tmpl.find('}', i + 1);
            if (close == std::string_view::npos) fail(ErrorCode::config, "unterminated template slot");
            auto name = tmpl.substr(i + 1, close - i - 1);
            bool ok = !name.empty();
            for (char ch : name) ok = ok && (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_');
            if (!ok) fail(ErrorCode::config, "malformed template slot {" + std::string(name) + "}");
            on_slot(std::string(name));
            i = close + 1;
        } else {
            auto next = tmpl.find_first_of("{}", i);
            if (next == i) next = i + 1;
            if (next == std::string_view::npos) next = tmpl.size();
            on_text(tmpl.substr(i, next - i));
            i = next;
        }
    }
}

} // namespace

std::set<std::string> template_slots(std::string_view tmpl) {
    std::set<std::string> slots;
    scan_template(tmpl, [](std::string_view) {}, [&](std::string name) { slots.insert(std::move(name)); });
    return slots;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    scan_template(
        tmpl, [&](std::string_view t) { out += t; },
        [&](const std::string& name) {
            auto it = values.find(name);
            if (it == values.end()) fail(ErrorCode::config, "unresolved template slot {" + name + "}");
            out += it->second;
        });
    return out;
}

} // namespace ouro::text
