#include "oversight/overseer.hpp"

#include "common/error.hpp"
#include "common/text.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <thread>

namespace ouro::oversight {

namespace {

constexpr std::string_view kOpen = "<OVERSEER_JUDGEMENT>";
constexpr std::string_view kClose = "</OVERSEER_JUDGEMENT>";

std::optional<std::string> field(std::string_view block, const std::string& tag) {
    auto open = "<" + tag + ">";
    auto close = "</" + tag + ">";
    auto a = block.find(open);
    if (a == std::string_view::npos) return std::nullopt;
    a += open.size();
    auto b = block.find(close, a);
    if (b == std::string_view::npos) fail(ErrorCode::parse, "unterminated <" + tag + "> in judgement");
    return text::trim(block.substr(a, b - a));
}

std::optional<std::string> non_empty(std::optional<std::string> v) {
    if (v && v->empty()) return std::nullopt;
    return v;
}

bool parse_flag(const std::string& tag, const std::string& v) {
    std::string lower;
    for (char c : v) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "true") return true;
    if (lower == "false") return false;
    fail(ErrorCode::parse, "judgement field <" + tag + "> must be true or false, got '" + v + "'");
}

std::string required(std::string_view block, const std::string& tag) {
    auto v = field(block, tag);
    if (!v) fail(ErrorCode::parse, "judgement is missing <" + tag + ">");
    return *v;
}

bool optional_flag(std::string_view block, const std::string& tag) {
    auto v = non_empty(field(block, tag));
    return v ? parse_flag(tag, *v) : false;
}

} // namespace

Judgement parse_judgement(std::string_view text) {
    auto start = text.find(kOpen);
    if (start == std::string_view::npos) fail(ErrorCode::parse, "no <OVERSEER_JUDGEMENT> block found");
    start += kOpen.size();
    auto end = std::min(text.find(kClose, start), text.find(kOpen, start));
    auto block = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);

    Judgement j;
    j.making_progress = parse_flag("making_progress", required(block, "making_progress"));
    j.is_looping = parse_flag("is_looping", required(block, "is_looping"));
    j.currently_running_agent = non_empty(field(block, "currently_running_agent"));
    j.needs_notification_reasoning = non_empty(field(block, "needs_notification_reasoning"));
    j.needs_notification = optional_flag(block, "needs_notification");
    j.agent_to_notify = non_empty(field(block, "agent_to_notify"));
    j.notification_content = non_empty(field(block, "notification_content"));
    j.force_cancel_agent = optional_flag(block, "force_cancel_agent");
    j.force_cancel_agent_id = non_empty(field(block, "force_cancel_agent_id"));
    j.notes_for_next_iteration = non_empty(field(block, "notes_for_next_iteration"));

    auto type = required(block, "next_check_type");
    if (type == "time") j.next_check_type = CheckType::time;
    else if (type == "events") j.next_check_type = CheckType::events;
    else fail(ErrorCode::parse, "next_check_type must be time or events, got '" + type + "'");
    auto delay = required(block, "next_check_delay");
    try {
        std::size_t used = 0;
        j.next_check_delay = std::stod(delay, &used);
        if (used != delay.size() || !(j.next_check_delay >= 0)) throw std::invalid_argument("");
    } catch (const std::exception&) {
        fail(ErrorCode::parse, "next_check_delay is not a non-negative number: '" + delay + "'");
    }

    if (j.needs_notification && (!j.agent_to_notify || !j.notification_content))
        fail(ErrorCode::parse, "needs_notification without agent_to_notify and notification_content");
    if (j.force_cancel_agent && !j.force_cancel_agent_id)
        fail(ErrorCode::parse, "force_cancel_agent without force_cancel_agent_id");
    return j;
}

std::string format_timestamp(WallClock::time_point t) {
    auto secs = WallClock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M:%S UTC", &tm);
    return buf;
}

std::string build_overseer_prompt(const std::string& tmpl, const std::string& examples, const std::string& tree_text,
                                  const OverseerState& state, WallClock::time_point now) {
    return text::fill_template(
        tmpl, {{"overseer_examples", examples},
               {"graph_repr", tree_text},
               {"previous_notes", state.previous_notes.empty() ? std::string("No notes.") : state.previous_notes},
               {"complete_stop_token", std::string(protocol::kCompleteClose)},
               {"last_check_time", state.last_check_time ? format_timestamp(*state.last_check_time) : "N/A"},
               {"current_time", format_timestamp(now)}});
}

const char* to_string(Intervention::Kind k) {
    switch (k) {
    case Intervention::Kind::notified: return "notified";
    case Intervention::Kind::cancelled: return "cancelled";
    case Intervention::Kind::downgraded: return "downgraded";
    case Intervention::Kind::dropped: return "dropped";
    }
    return "?";
}

std::vector<Intervention> apply_judgement(const Judgement& j, runtime::Runtime& rt, OverseerState& state) {
    using K = Intervention::Kind;
    std::vector<Intervention> out;
    std::vector<std::string> dropped_notes;

    // Decided before this judgement's own notification lands: the target must have had
    // a chance to read a warning.
    bool may_cancel = j.force_cancel_agent && state.notified[*j.force_cancel_agent_id] >= 1;

    auto deliver = [&](const CallId& target, const std::string& msg, K kind) {
        try {
            rt.notify(target, msg, "overseer");
            ++state.notified[target];
            out.push_back({kind, target, msg});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::conflict && e.code() != ErrorCode::not_found) throw;
            out.push_back({K::dropped, target, e.what()});
            dropped_notes.push_back("Notification to " + target + " dropped: " + e.what());
        }
    };

    if (j.needs_notification) deliver(*j.agent_to_notify, *j.notification_content, K::notified);

    if (j.force_cancel_agent) {
        const auto& target = *j.force_cancel_agent_id;
        if (may_cancel) {
            auto reason = j.needs_notification_reasoning.value_or("cancelled by the overseer");
            try {
                rt.cancel(target, reason, "overseer");
                out.push_back({K::cancelled, target, reason});
            } catch (const Error& e) {
                if (e.code() != ErrorCode::conflict && e.code() != ErrorCode::not_found) throw;
                out.push_back({K::dropped, target, e.what()});
                dropped_notes.push_back("Cancellation of " + target + " dropped: " + e.what());
            }
        } else if (!(j.needs_notification && *j.agent_to_notify == target)) {
            std::string msg = "The overseer considers that you are not making progress and will cancel you if "
                              "this continues. Change course, or finish by writing <COMPLETE></COMPLETE>.";
            if (j.needs_notification_reasoning) msg += "\nReason: " + *j.needs_notification_reasoning;
            deliver(target, msg, K::downgraded);
        } else {
            out.push_back({K::downgraded, target, "cancellation deferred until the notification has been seen"});
        }
    }

    state.previous_notes = j.notes_for_next_iteration.value_or("");
    for (auto& n : dropped_notes) {
        if (!state.previous_notes.empty()) state.previous_notes += "\n";
        state.previous_notes += n;
    }
    return out;
}

Overseer::Overseer(runtime::Runtime& rt, llm::Gateway& judge, OverseerPolicy policy)
    : rt_(rt), judge_(judge), policy_(std::move(policy)) {
    if (!policy_.clock) policy_.clock = [] { return WallClock::now(); };
    if (policy_.time_scale <= 0) fail(ErrorCode::invalid_argument, "time_scale must be positive");
    if (policy_.min_delay > policy_.max_delay) fail(ErrorCode::invalid_argument, "min_delay exceeds max_delay");
}

std::chrono::milliseconds Overseer::scaled(std::chrono::milliseconds d) const {
    return std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(d.count()) * policy_.time_scale));
}

bool Overseer::root_done() const {
    auto root = rt_.store().root_id();
    return root && !rt_.store().running(*root);
}

bool Overseer::wait(CheckType type, double amount, const CancelToken& stop) {
    auto& store = rt_.store();
    std::chrono::milliseconds span = policy_.max_delay;
    std::size_t target_events = 0;
    if (type == CheckType::time) {
        auto ms = std::chrono::milliseconds(static_cast<std::int64_t>(amount * 1000.0));
        span = std::clamp(ms, policy_.min_delay, policy_.max_delay);
    } else {
        target_events = store.event_count() + static_cast<std::size_t>(std::max(1.0, amount));
    }
    auto deadline = SteadyClock::now() + scaled(span);
    for (;;) {
        if (stop.cancelled() || root_done()) return false;
        if (type == CheckType::events && store.event_count() >= target_events) return true;
        auto now = SteadyClock::now();
        if (now >= deadline) return true;
        auto v = store.version();
        store.wait_for_change(v, std::min(deadline, now + std::chrono::milliseconds(50)));
    }
}

void Overseer::note(std::string line) {
    std::lock_guard lock(mu_);
    log_.push_back(std::move(line));
}

void Overseer::observe(const CancelToken& stop) {
    // Seconds, so the initial delay goes through the same clamp as judge-chosen delays.
    CheckType type = CheckType::time;
    double amount = static_cast<double>(policy_.initial_delay.count()) / 1000.0;
    auto& store = rt_.store();
    for (;;) {
        while (!store.root_id()) {
            if (stop.cancelled()) return;
            store.wait_for_change(store.version(), SteadyClock::now() + std::chrono::milliseconds(20));
        }
        if (!wait(type, amount, stop)) return;

        auto snap = store.snapshot();
        if (snap.root() && snap.root()->terminal()) return;
        auto now = policy_.clock();
        OverseerState st = state();
        auto prompt = build_overseer_prompt(rt_.codebase().overseer_prompt(), rt_.codebase().overseer_examples(),
                                            events::render_trace(snap, policy_.truncation), st, now);
        {
            std::lock_guard lock(mu_);
            ++checks_;
        }
        llm::CompletionRequest req{policy_.model, {{"user", prompt}}, {}, policy_.max_tokens, "overseer"};
        Judgement j;
        try {
            auto resp = llm::complete_with_retry(judge_, req, {std::nullopt, stop});
            {
                std::lock_guard lock(mu_);
                usage_ += resp.usage;
            }
            j = parse_judgement(resp.text);
        } catch (const Error& e) {
            if (stop.cancelled()) return;
            note(std::string("judgement skipped: ") + e.what());
            continue; // keep the previous schedule
        }
        if (root_done()) return;

        std::vector<Intervention> applied;
        {
            std::lock_guard lock(mu_);
            applied = apply_judgement(j, rt_, state_);
            state_.last_check_time = now;
            interventions_.insert(interventions_.end(), applied.begin(), applied.end());
        }
        for (auto& a : applied) note(std::string(to_string(a.kind)) + " " + a.target + ": " + a.text);
        type = j.next_check_type;
        amount = j.next_check_delay;
    }
}

OverseerState Overseer::state() const {
    std::lock_guard lock(mu_);
    return state_;
}

std::vector<Intervention> Overseer::interventions() const {
    std::lock_guard lock(mu_);
    return interventions_;
}

std::size_t Overseer::checks() const {
    std::lock_guard lock(mu_);
    return checks_;
}

std::vector<std::string> Overseer::log() const {
    std::lock_guard lock(mu_);
    return log_;
}

events::Usage Overseer::usage() const {
    std::lock_guard lock(mu_);
    return usage_;
}

} // namespace ouro::oversight
