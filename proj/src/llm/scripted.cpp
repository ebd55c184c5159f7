#include "llm/scripted.hpp"

#include "common/error.hpp"
#include "common/fs_util.hpp"

#include "json.hpp"

namespace ouro::llm {

namespace {

constexpr std::size_t kRecentPrompts = 64;

using json = nlohmann::json;

ScriptStep step_from_json(const json& j, std::size_t index) {
    ScriptReply r;
    r.text = j.value("text", "");
    if (j.contains("stop")) {
        auto s = j["stop"].get<std::string>();
        if (s == "end_of_turn") r.stop = protocol::StopReason::end_of_turn();
        else if (s == "length") r.stop = protocol::StopReason::length();
        else r.stop = protocol::StopReason::stop(s);
    }
    if (j.contains("usage")) {
        auto& u = j["usage"];
        r.usage = Usage{u.value("prompt_tokens", std::int64_t{0}), u.value("completion_tokens", std::int64_t{0}),
                        u.value("cached_tokens", std::int64_t{0}), Money()};
    }
    r.latency = std::chrono::milliseconds(j.value("latency_ms", 0));
    r.stall = j.value("stall", false);
    r.transport_error = j.value("transport_error", false);

    std::vector<Predicate> preds;
    if (j.contains("expect_contains")) {
        auto& e = j["expect_contains"];
        if (e.is_string()) preds.push_back(context_contains(e.get<std::string>()));
        else
            for (auto& s : e) preds.push_back(context_contains(s.get<std::string>()));
    }
    if (j.contains("caller")) preds.push_back(caller_is(j["caller"].get<std::string>()));
    if (j.contains("model")) preds.push_back(model_is(j["model"].get<std::string>()));
    auto label = j.value("label", "step " + std::to_string(index + 1));
    return expect(preds.empty() ? Predicate() : all_of(std::move(preds)), std::move(r), std::move(label));
}

} // namespace

ScriptStep reply(std::string text, std::string label) {
    ScriptReply r;
    r.text = std::move(text);
    return reply(std::move(r), std::move(label));
}

ScriptStep reply(ScriptReply r, std::string label) { return expect({}, std::move(r), std::move(label)); }

ScriptStep expect(Predicate p, ScriptReply r, std::string label) {
    return {std::move(label), std::move(p), [r = std::move(r)](const CompletionRequest&) { return r; }};
}

Predicate context_contains(std::string needle) {
    return [needle = std::move(needle)](const CompletionRequest& req) {
        return request_text(req).find(needle) != std::string::npos;
    };
}

Predicate caller_is(std::string caller) {
    return [caller = std::move(caller)](const CompletionRequest& req) { return req.caller == caller; };
}

Predicate model_is(std::string model) {
    return [model = std::move(model)](const CompletionRequest& req) { return req.model == model; };
}

Predicate all_of(std::vector<Predicate> ps) {
    return [ps = std::move(ps)](const CompletionRequest& req) {
        for (auto& p : ps)
            if (p && !p(req)) return false;
        return true;
    };
}

std::string request_text(const CompletionRequest& request) {
    std::string out;
    for (auto& m : request.messages) out += "<<" + m.role + ">>\n" + m.content + "\n";
    return out;
}

std::int64_t synth_tokens(std::size_t chars) { return static_cast<std::int64_t>((chars + 3) / 4); }

std::size_t common_prefix(std::string_view a, std::string_view b) {
    std::size_t n = std::min(a.size(), b.size()), i = 0;
    while (i < n && a[i] == b[i]) ++i;
    return i;
}

std::pair<std::string, protocol::StopReason> apply_stops(std::string text, const std::vector<std::string>& stops) {
    std::size_t best = std::string::npos;
    std::string matched;
    for (auto& s : stops) {
        if (s.empty()) continue;
        auto at = text.find(s);
        if (at < best) best = at, matched = s;
    }
    if (best == std::string::npos) return {std::move(text), protocol::StopReason::end_of_turn()};
    text.resize(best);
    return {std::move(text), protocol::StopReason::stop(matched)};
}

ScriptedGateway::ScriptedGateway(std::vector<ScriptStep> steps) : steps_(steps.begin(), steps.end()) {}

std::shared_ptr<ScriptedGateway> ScriptedGateway::from_policy(Responder policy) {
    auto g = std::make_shared<ScriptedGateway>();
    g->policy_ = std::move(policy);
    return g;
}

std::shared_ptr<ScriptedGateway> ScriptedGateway::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(fsx::read_file(path));
    } catch (const json::exception& e) {
        fail(ErrorCode::config, "script " + path.string() + " is not valid JSON: " + e.what());
    }
    const json& steps = j.is_array() ? j : j.value("steps", json::array());
    std::vector<ScriptStep> out;
    try {
        for (std::size_t i = 0; i < steps.size(); ++i) out.push_back(step_from_json(steps[i], i));
    } catch (const json::exception& e) {
        fail(ErrorCode::config, "script " + path.string() + ": " + e.what());
    }
    return std::make_shared<ScriptedGateway>(std::move(out));
}

void ScriptedGateway::push(ScriptStep step) {
    std::lock_guard lock(mu_);
    steps_.push_back(std::move(step));
}

CompletionResponse ScriptedGateway::complete(const CompletionRequest& request, const CallOptions& options) {
    ScriptReply r;
    std::int64_t cached_chars = 0;
    const std::string prompt = request_text(request);
    {
        std::lock_guard lock(mu_);
        std::size_t index = ++calls_;
        requests_.push_back(request);
        if (!steps_.empty()) {
            auto step = std::move(steps_.front());
            steps_.pop_front();
            if (step.expect && !step.expect(request)) {
                auto msg = "scripted gateway: call " + std::to_string(index) + " (" +
                           (step.label.empty() ? "unlabelled" : step.label) + ", caller " + request.caller +
                           ") did not match the expected context";
                failures_.push_back(msg);
                fail(ErrorCode::script, msg);
            }
            r = step.respond(request);
        } else if (policy_) {
            r = policy_(request);
        } else {
            auto msg = "scripted gateway: script exhausted at call " + std::to_string(index) + " (caller " +
                       request.caller + ")";
            failures_.push_back(msg);
            fail(ErrorCode::script, msg);
        }
        std::size_t best = 0;
        for (auto& p : recent_prompts_) best = std::max(best, common_prefix(p, prompt));
        cached_chars = static_cast<std::int64_t>(best);
        recent_prompts_.push_back(prompt);
        if (recent_prompts_.size() > kRecentPrompts) recent_prompts_.pop_front();
    }

    if (r.latency.count() > 0) interruptible_sleep(r.latency, options);
    if (r.stall) {
        options.cancel.wait_until(options.deadline);
        if (options.cancel.cancelled()) fail(ErrorCode::cancelled, options.cancel.reason());
        fail(ErrorCode::timeout, "model call stalled past the deadline");
    }
    if (r.transport_error) fail(ErrorCode::transport, "scripted transport failure");

    CompletionResponse resp;
    if (r.stop) {
        resp.text = std::move(r.text);
        resp.stop = *r.stop;
    } else {
        std::tie(resp.text, resp.stop) = apply_stops(std::move(r.text), request.stop);
    }
    if (r.usage) {
        resp.usage = *r.usage;
    } else {
        resp.usage.prompt_tokens = synth_tokens(prompt.size());
        resp.usage.cached_tokens = std::min(resp.usage.prompt_tokens, cached_chars / 4);
        resp.usage.completion_tokens = synth_tokens(resp.text.size());
    }
    resp.usage.validate();
    return resp;
}

std::size_t ScriptedGateway::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t ScriptedGateway::remaining() const {
    std::lock_guard lock(mu_);
    return steps_.size();
}

std::vector<CompletionRequest> ScriptedGateway::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

std::vector<std::string> ScriptedGateway::failures() const {
    std::lock_guard lock(mu_);
    return failures_;
}

} // namespace ouro::llm
