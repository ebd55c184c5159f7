#include "context/unified_diff.hpp"

#include "common/error.hpp"
#include "common/text.hpp"

#include <algorithm>
#include <cstdlib>

namespace ouro::context {

namespace {

constexpr std::string_view kNoNewline = "\\ No newline at end of file";

// Each element keeps its trailing '\n' (absent only on an unterminated last line).
std::vector<std::string_view> raw_lines(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto nl = s.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? s.size() : nl + 1;
        out.push_back(s.substr(pos, end - pos));
        pos = end;
    }
    return out;
}

enum class Op { equal, remove, insert };

struct Edit {
    Op op;
    std::size_t a; // index into old lines (equal/remove)
    std::size_t b; // index into new lines (equal/insert)
};

// Greedy forward Myers with a stored trace, then backtrack into an edit script.
template <typename T>
std::vector<Edit> myers(const std::vector<T>& a, const std::vector<T>& b) {
    const long n = static_cast<long>(a.size()), m = static_cast<long>(b.size());
    const long max = n + m;
    const long offset = max + 1;
    std::vector<long> v(static_cast<std::size_t>(2 * max + 3), 0);
    // trace[d] holds v[-d..d] as it stood before round d.
    std::vector<std::vector<long>> trace;
    long final_d = 0;
    bool found = false;
    for (long d = 0; d <= max && !found; ++d) {
        trace.emplace_back(v.begin() + (offset - d), v.begin() + (offset + d + 1));
        for (long k = -d; k <= d; k += 2) {
            long x;
            if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) x = v[offset + k + 1];
            else x = v[offset + k - 1] + 1;
            long y = x - k;
            while (x < n && y < m && a[x] == b[y]) ++x, ++y;
            v[offset + k] = x;
            if (x >= n && y >= m) {
                final_d = d;
                found = true;
                break;
            }
        }
    }

    std::vector<Edit> script;
    long x = n, y = m;
    for (long d = final_d; d > 0; --d) {
        const auto& pv = trace[static_cast<std::size_t>(d)];
        auto at = [&](long k) { return pv[static_cast<std::size_t>(k + d)]; };
        long k = x - y;
        long prev_k = (k == -d || (k != d && at(k - 1) < at(k + 1))) ? k + 1 : k - 1;
        long prev_x = at(prev_k);
        long prev_y = prev_x - prev_k;
        while (x > prev_x && y > prev_y) {
            --x, --y;
            script.push_back({Op::equal, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
        }
        if (x == prev_x) script.push_back({Op::insert, static_cast<std::size_t>(x), static_cast<std::size_t>(prev_y)});
        else script.push_back({Op::remove, static_cast<std::size_t>(prev_x), static_cast<std::size_t>(y)});
        x = prev_x;
        y = prev_y;
    }
    while (x > 0 && y > 0) {
        --x, --y;
        script.push_back({Op::equal, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
    }
    std::reverse(script.begin(), script.end());
    return script;
}

std::string range(std::size_t start, std::size_t count) {
    // GNU conventions: an empty range names the line before it; ",1" is omitted.
    std::size_t first = count == 0 ? start : start + 1;
    if (count == 1) return std::to_string(first);
    return std::to_string(first) + "," + std::to_string(count);
}

void emit_line(std::string& out, char tag, std::string_view line) {
    out += tag;
    out += line;
    if (line.empty() || line.back() != '\n') {
        out += '\n';
        out += kNoNewline;
        out += '\n';
    }
}

} // namespace

std::string unified_diff(std::string_view before, std::string_view after, const std::string& path,
                         int context_lines) {
    if (before == after) return {};
    auto a = raw_lines(before);
    auto b = raw_lines(after);
    auto script = myers(a, b);
    const std::size_t ctx = static_cast<std::size_t>(std::max(0, context_lines));

    std::string out = "--- a/" + path + "\n+++ b/" + path + "\n";
    std::size_t i = 0;
    while (i < script.size()) {
        while (i < script.size() && script[i].op == Op::equal) ++i;
        if (i == script.size()) break;
        // Hunk spans [lo, hi) of the script: changes plus surrounding context, merging
        // change runs separated by at most 2*ctx equal lines.
        std::size_t lo = i >= ctx ? i - ctx : 0;
        std::size_t hi = i;
        for (;;) {
            while (hi < script.size() && script[hi].op != Op::equal) ++hi;
            std::size_t run = 0;
            while (hi + run < script.size() && script[hi + run].op == Op::equal) ++run;
            if (hi + run < script.size() && run <= 2 * ctx) {
                hi += run;
                continue;
            }
            hi += std::min(run, ctx);
            break;
        }
        std::size_t a_start = script[lo].a;
        std::size_t b_start = script[lo].b;
        std::size_t a_count = 0, b_count = 0;
        std::string body;
        for (std::size_t j = lo; j < hi; ++j) {
            const auto& e = script[j];
            switch (e.op) {
            case Op::equal:
                emit_line(body, ' ', a[e.a]);
                ++a_count, ++b_count;
                break;
            case Op::remove:
                emit_line(body, '-', a[e.a]);
                ++a_count;
                break;
            case Op::insert:
                emit_line(body, '+', b[e.b]);
                ++b_count;
                break;
            }
        }
        out += "@@ -" + range(a_start, a_count) + " +" + range(b_start, b_count) + " @@\n";
        out += body;
        i = hi;
    }
    return out;
}

std::string apply_unified_diff(std::string_view base, std::string_view diff) {
    if (diff.empty()) return std::string(base);
    auto src = raw_lines(base);
    auto lines = text::split_lines(diff);
    std::string out;
    std::size_t cursor = 0; // next unconsumed line of src
    std::size_t i = 0;
    while (i < lines.size() && !text::starts_with(lines[i], "@@")) ++i;

    auto parse_range = [](std::string_view r, std::size_t& start, std::size_t& count) {
        auto comma = r.find(',');
        start = static_cast<std::size_t>(std::strtoul(std::string(r.substr(0, comma)).c_str(), nullptr, 10));
        count = comma == std::string_view::npos
                    ? 1
                    : static_cast<std::size_t>(std::strtoul(std::string(r.substr(comma + 1)).c_str(), nullptr, 10));
    };

    while (i < lines.size()) {
        const std::string& header = lines[i];
        auto minus = header.find('-');
        auto plus = header.find(" +", minus);
        auto end = header.find(" @@", plus);
        if (!text::starts_with(header, "@@ -") || plus == std::string::npos || end == std::string::npos)
            fail(ErrorCode::parse, "malformed hunk header: " + header);
        std::size_t a_start, a_count, b_start, b_count;
        parse_range(std::string_view(header).substr(minus + 1, plus - minus - 1), a_start, a_count);
        parse_range(std::string_view(header).substr(plus + 2, end - plus - 2), b_start, b_count);
        std::size_t first = a_count == 0 ? a_start : a_start - 1;
        if (first < cursor || first > src.size()) fail(ErrorCode::parse, "hunk out of range: " + header);
        for (; cursor < first; ++cursor) out += src[cursor];
        ++i;

        std::size_t seen_a = 0, seen_b = 0;
        while (i < lines.size() && !text::starts_with(lines[i], "@@")) {
            const std::string& l = lines[i];
            if (l.empty()) fail(ErrorCode::parse, "empty line inside hunk");
            char tag = l[0];
            std::string content = l.substr(1) + "\n";
            bool no_newline = i + 1 < lines.size() && lines[i + 1] == kNoNewline;
            if (no_newline) content.pop_back();
            if (tag == ' ' || tag == '-') {
                if (cursor >= src.size() || src[cursor] != content)
                    fail(ErrorCode::parse, "hunk does not match at line " + std::to_string(cursor + 1));
                ++cursor;
                ++seen_a;
            }
            if (tag == ' ' || tag == '+') {
                out += content;
                ++seen_b;
            }
            if (tag != ' ' && tag != '-' && tag != '+') fail(ErrorCode::parse, "bad hunk line: " + l);
            i += no_newline ? 2 : 1;
        }
        if (seen_a != a_count || seen_b != b_count) fail(ErrorCode::parse, "hunk length mismatch: " + header);
    }
    for (; cursor < src.size(); ++cursor) out += src[cursor];
    return out;
}

std::size_t lcs_lines(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    auto script = myers(a, b);
    return static_cast<std::size_t>(std::count_if(script.begin(), script.end(), [](const Edit& e) { return e.op == Op::equal; }));
}

} // namespace ouro::context
