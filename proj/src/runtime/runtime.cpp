#include "runtime/runtime.hpp"

#include "common/error.hpp"
#include "common/text.hpp"

namespace ouro::runtime {

using events::EventKind;
using events::NodeStatus;
using events::Payload;

void Budget::validate() const {
    if (wall_clock.count() <= 0) fail(ErrorCode::invalid_argument, "budget wall clock must be positive");
    if (dollars.pico() <= 0) fail(ErrorCode::invalid_argument, "budget dollars must be positive");
    if (max_completions <= 0) fail(ErrorCode::invalid_argument, "budget completion cap must be positive");
}

const char* to_string(RunStatus s) {
    switch (s) {
    case RunStatus::returned: return "returned";
    case RunStatus::cancelled: return "cancelled";
    case RunStatus::timed_out: return "timed_out";
    case RunStatus::budget_exhausted: return "budget_exhausted";
    }
    return "?";
}

namespace {

std::string seconds_text(std::chrono::milliseconds ms) {
    auto s = ms.count() / 1000.0;
    auto out = std::to_string(s);
    while (!out.empty() && out.back() == '0') out.pop_back();
    if (!out.empty() && out.back() == '.') out.pop_back();
    return out + "s";
}

std::string stopped_text(const std::string& agent, const AgentResult& r) {
    switch (r.status) {
    case RunStatus::returned: return r.value;
    case RunStatus::cancelled: return "Agent " + agent + " was cancelled: " + r.value;
    case RunStatus::timed_out: return "Agent " + agent + " timed out: " + r.value;
    case RunStatus::budget_exhausted: return "Agent " + agent + " ran out of budget: " + r.value;
    }
    return r.value;
}

} // namespace

Runtime::Runtime(const Codebase& codebase, llm::Gateway& gateway, events::EventStore& store,
                 tools::Workspace& workspace, RuntimeOptions options)
    : codebase_(codebase), gateway_(gateway), store_(store), workspace_(workspace), options_(options) {
    if (options_.max_depth < 1) fail(ErrorCode::invalid_argument, "max_depth must be at least 1");
}

AgentResult Runtime::run(const std::string& problem, const Budget& budget) {
    return start(codebase_.entry(), problem, budget);
}

AgentResult Runtime::run_agent(const std::string& agent_name, const std::string& problem, const Budget& budget) {
    return start(agent_name, problem, budget);
}

AgentResult Runtime::start(const std::string& agent_name, const std::string& problem, const Budget& budget) {
    budget.validate();
    const auto& def = codebase_.agent(agent_name);
    RunState run;
    run.initial_request = problem;
    run.wall_clock = budget.wall_clock;
    run.deadline = SteadyClock::now() + budget.wall_clock;
    run.dollar_limit = budget.dollars;
    run.max_completions = budget.max_completions;

    std::map<std::string, std::string> slots;
    for (auto& a : def.args) slots[a.name] = problem;
    for (auto& s : kCoreSlots) slots[s] = problem;
    auto id = store_.open_call(std::nullopt, def.name);
    return execute(def, id, 1, slots, run);
}

std::shared_ptr<Runtime::Control> Runtime::control(const CallId& id) {
    std::lock_guard lock(mu_);
    auto& c = controls_[id];
    if (!c) c = std::make_shared<Control>();
    return c;
}

std::deque<std::string> Runtime::drain_inbox(const CallId& id) {
    auto c = control(id);
    std::lock_guard lock(mu_);
    std::deque<std::string> out;
    out.swap(c->inbox);
    return out;
}

AgentResult Runtime::finish(const CallId& id, RunStatus status, std::string value, std::optional<std::string> answer) {
    AgentResult r{status, std::move(value), {}, std::move(answer), id};
    try {
        switch (status) {
        case RunStatus::returned: store_.close_call(id, NodeStatus::returned, r.value); break;
        case RunStatus::timed_out: store_.close_call(id, NodeStatus::timed_out, std::nullopt, r.value); break;
        case RunStatus::cancelled:
        case RunStatus::budget_exhausted: store_.close_call(id, NodeStatus::cancelled, std::nullopt, r.value); break;
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::conflict) throw;
        // Closed concurrently by cancel(); that close wins.
        r = {RunStatus::cancelled, control(id)->cancel.reason(), {}, std::nullopt, id};
    }
    r.usage = store_.snapshot().subtree_usage(id);
    return r;
}

AgentResult Runtime::execute(const AgentDefinition& def, const CallId& id, int depth,
                             const std::map<std::string, std::string>& slots, RunState& run) {
    auto ctl = control(id);
    // Closes the node itself, so no parent ever outlives a running child in the store.
    auto cancelled_result = [&] {
        std::string source;
        {
            std::lock_guard lock(mu_);
            source = ctl->cancel_source.empty() ? "runtime" : ctl->cancel_source;
        }
        try {
            store_.close_call(id, NodeStatus::cancelled, std::nullopt, ctl->cancel.reason(), source);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::conflict) throw;
        }
        AgentResult r{RunStatus::cancelled, ctl->cancel.reason(), {}, std::nullopt, id};
        r.usage = store_.snapshot().subtree_usage(id);
        return r;
    };
    // Recording fails only when the node was closed under us.
    auto record = [&](EventKind kind, Payload p, std::optional<events::Usage> usage = {}) {
        try {
            store_.record(id, kind, std::move(p), usage);
            return true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::conflict) throw;
            return false;
        }
    };

    try {
        const bool have_archive = archive_ != nullptr;
        auto tool_reg = codebase_.tool_registry(def, have_archive);
        auto agent_reg = codebase_.agent_registry(def);
        auto stops = protocol::stop_sequences(tool_reg, agent_reg);
        context::ContextState ctx(codebase_.system_section(def, have_archive), codebase_.core_prompt(def, slots));
        tools::ToolContext tctx{workspace_,   ctx,           depth == 1, archive_, ctl->cancel, run.deadline,
                                codebase_.dir(), options_.command_timeout};
        tools::refresh_views(tctx);
        const bool can_act = !tool_reg.empty() || !agent_reg.empty();
        auto timeout_reason = "wall-clock limit of " + seconds_text(run.wall_clock) + " reached";

        for (int completions = 0;;) {
            if (ctl->cancel.cancelled()) return cancelled_result();
            for (auto& m : drain_inbox(id)) ctx.append(context::notification_block(m));
            if (expired(run.deadline)) return finish(id, RunStatus::timed_out, timeout_reason);
            if (run.spent >= run.dollar_limit)
                return finish(id, RunStatus::budget_exhausted,
                              "dollar budget of $" + run.dollar_limit.to_string() + " exhausted");
            if (completions >= run.max_completions)
                return finish(id, RunStatus::budget_exhausted,
                              "completion limit of " + std::to_string(run.max_completions) + " reached");

            llm::CompletionRequest req{def.model, ctx.assemble().messages(), stops, options_.max_tokens, def.name};
            llm::CompletionResponse resp;
            try {
                resp = llm::complete_with_retry(gateway_, req, {run.deadline, ctl->cancel}, options_.retry);
            } catch (const Error& e) {
                if (ctl->cancel.cancelled()) return cancelled_result();
                if (e.code() == ErrorCode::timeout || expired(run.deadline))
                    return finish(id, RunStatus::timed_out, timeout_reason);
                return finish(id, RunStatus::cancelled, std::string("model call failed: ") + e.what());
            }
            ++completions;
            run.spent += resp.usage.cost;

            std::string generation = resp.text;
            if (resp.stop.kind == protocol::StopKind::stop_sequence) generation += resp.stop.sequence;
            if (!record(EventKind::assistant_message, {.text = generation}, resp.usage)) return cancelled_result();
            ctx.append(context::assistant_block(generation));

            auto parsed = protocol::parse_generation(resp.text, resp.stop, tool_reg, agent_reg);
            if (auto* err = std::get_if<protocol::ParseError>(&parsed)) {
                auto name = err->name.empty() ? std::string("parser") : err->name;
                if (!record(EventKind::tool_result, {.text = err->message, .name = name, .success = false}))
                    return cancelled_result();
                ctx.append(context::tool_result_block(name, false, err->message));
                continue;
            }
            auto& action = std::get<protocol::ParsedAction>(parsed);

            switch (action.kind) {
            case protocol::ActionKind::complete:
                return finish(id, RunStatus::returned, text::trim(action.trailing_text));
            case protocol::ActionKind::plain_text:
                if (!can_act) return finish(id, RunStatus::returned, text::trim(action.trailing_text));
                continue;
            case protocol::ActionKind::tool_call: {
                if (!record(EventKind::tool_call, {.name = action.name, .args = action.args})) return cancelled_result();
                auto r = codebase_.toolkit().invoke(action.name, action.args, tctx);
                if (ctl->cancel.cancelled()) return cancelled_result();
                if (!record(EventKind::tool_result, {.text = r.content, .name = action.name, .success = r.success}))
                    return cancelled_result();
                ctx.append(context::tool_result_block(action.name, r.success, r.content));
                tools::refresh_views(tctx);
                if (r.terminal) {
                    switch (r.terminal->kind) {
                    case tools::TerminalKind::submit_answer:
                        return finish(id, RunStatus::returned, r.terminal->value, r.terminal->value);
                    case tools::TerminalKind::return_result:
                        return finish(id, RunStatus::returned, r.terminal->value);
                    case tools::TerminalKind::early_exit:
                        return finish(id, RunStatus::returned, "Exited early: " + r.terminal->value);
                    }
                }
                continue;
            }
            case protocol::ActionKind::agent_call: {
                if (depth + 1 > options_.max_depth) {
                    auto msg = "Cannot call " + action.name + ": the agent nesting limit of " +
                               std::to_string(options_.max_depth) + " levels has been reached.";
                    if (!record(EventKind::agent_result, {.text = msg, .name = action.name, .success = false}))
                        return cancelled_result();
                    ctx.append(context::agent_result_block(action.name, msg));
                    continue;
                }
                const auto& sub = codebase_.agent(action.name);
                CallId child;
                try {
                    child = store_.open_call(id, sub.name);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::conflict) throw;
                    return cancelled_result();
                }
                if (!record(EventKind::agent_call, {.name = sub.name, .args = action.args, .target = child})) {
                    try {
                        store_.close_call(child, NodeStatus::cancelled, std::nullopt, ctl->cancel.reason());
                    } catch (const Error&) {
                    }
                    return cancelled_result();
                }
                std::map<std::string, std::string> child_slots;
                for (auto& a : sub.args) child_slots[a.name] = protocol::arg(action.args, a.name).value_or("");
                std::string instruction;
                if (auto v = protocol::arg(action.args, "problem_to_solve")) instruction = *v;
                else if (!action.args.empty()) instruction = action.args.front().second;
                child_slots["problem_statement"] = instruction;
                child_slots["problem_to_solve"] = instruction;
                child_slots["initial_request"] = run.initial_request;

                auto res = execute(sub, child, depth + 1, child_slots, run);
                if (ctl->cancel.cancelled()) return cancelled_result();
                auto result_text = stopped_text(sub.name, res);
                if (!record(EventKind::agent_result, {.text = result_text,
                                                      .name = sub.name,
                                                      .success = res.status == RunStatus::returned,
                                                      .target = child}))
                    return cancelled_result();
                ctx.append(context::agent_result_block(sub.name, result_text));
                tools::refresh_views(tctx);
                continue;
            }
            }
        }
    } catch (const Error& e) {
        if (ctl->cancel.cancelled()) return cancelled_result();
        return finish(id, RunStatus::cancelled, std::string("runtime error: ") + e.what());
    }
}

void Runtime::notify(const CallId& id, const std::string& message, const std::string& source) {
    if (!store_.status(id)) fail(ErrorCode::not_found, "unknown call id: " + id);
    auto c = control(id);
    std::lock_guard lock(mu_);
    try {
        if (!store_.running(id)) fail(ErrorCode::conflict, "");
        store_.record(id, EventKind::overseer_notification, {.text = message, .source = source});
    } catch (const Error& e) {
        if (e.code() != ErrorCode::conflict) throw;
        fail(ErrorCode::conflict, "Agents that have already returned cannot receive notifications");
    }
    c->inbox.push_back(message);
}

void Runtime::cancel(const CallId& id, const std::string& reason, const std::string& source) {
    auto st = store_.status(id);
    if (!st) fail(ErrorCode::not_found, "unknown call id: " + id);
    if (*st != NodeStatus::running) fail(ErrorCode::conflict, "call " + id + " is already terminal");

    // The parent hears about it before its child's execution unwinds, so the notice is
    // drained at the parent's next step rather than racing it.
    if (auto parent = store_.parent_of(id)) {
        auto msg = "Your sub-agent " + store_.snapshot().at(id).agent_name + " (" + id + ") was cancelled by the " +
                   source + ": " + reason;
        try {
            notify(*parent, msg, source);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::conflict) throw;
        }
    }

    // A descendant may open a child between listing and closing; sweep until stable.
    for (int attempt = 0; attempt < 10; ++attempt) {
        auto targets = store_.running_descendants(id);
        targets.push_back(id);
        for (auto& t : targets) {
            auto c = control(t);
            {
                std::lock_guard lock(mu_);
                if (c->cancel_source.empty()) c->cancel_source = source;
            }
            c->cancel.cancel(reason);
        }
        bool settled = true;
        for (auto& t : targets) {
            try {
                store_.close_call(t, NodeStatus::cancelled, std::nullopt, reason, source);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::conflict) throw;
                if (store_.running(t)) settled = false;
            }
        }
        if (settled) break;
    }
}

} // namespace ouro::runtime
