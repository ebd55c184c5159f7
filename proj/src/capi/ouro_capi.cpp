#include "ouro/ouro.h"

#include "bench/generators.hpp"
#include "bench/harness.hpp"
#include "common/error.hpp"
#include "common/fs_util.hpp"
#include "events/render.hpp"
#include "events/serialize.hpp"
#include "llm/config.hpp"
#include "meta/meta_loop.hpp"
#include "oversight/overseer.hpp"
#include "runtime/runtime.hpp"
#include "serve/control_server.hpp"

#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

using namespace ouro;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

thread_local std::string g_last_error;

ouro_status status_of(ErrorCode c) {
    switch (c) {
    case ErrorCode::invalid_argument: return OURO_ERR_INVALID_ARGUMENT;
    case ErrorCode::not_found: return OURO_ERR_NOT_FOUND;
    case ErrorCode::conflict: return OURO_ERR_CONFLICT;
    case ErrorCode::config: return OURO_ERR_CONFIG;
    case ErrorCode::io: return OURO_ERR_IO;
    case ErrorCode::parse: return OURO_ERR_PARSE;
    case ErrorCode::cancelled: return OURO_ERR_CANCELLED;
    case ErrorCode::timeout: return OURO_ERR_TIMEOUT;
    case ErrorCode::transport: return OURO_ERR_TRANSPORT;
    case ErrorCode::script: return OURO_ERR_SCRIPT;
    case ErrorCode::internal: return OURO_ERR_INTERNAL;
    }
    return OURO_ERR_INTERNAL;
}

template <class F>
ouro_status guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return OURO_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return OURO_ERR_PARSE;
    } catch (const fs::filesystem_error& e) {
        g_last_error = e.what();
        return OURO_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return OURO_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return OURO_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) fail(ErrorCode::invalid_argument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void apply_budget(runtime::Budget& b, double seconds, const char* dollars, int max_completions) {
    runtime::Budget next = b;
    if (seconds > 0) next.wall_clock = std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000));
    if (dollars) next.dollars = Money::parse(dollars);
    if (max_completions > 0) next.max_completions = max_completions;
    next.validate();
    b = next;
}

std::vector<events::Event> all_events(const events::EventStore& store, events::EventId since = 0) {
    std::vector<events::Event> out;
    for (;;) {
        auto page = store.events_since(since);
        if (page.empty()) return out;
        since = page.back().event_id;
        out.insert(out.end(), std::make_move_iterator(page.begin()), std::make_move_iterator(page.end()));
    }
}

} // namespace

struct ouro_session {
    fs::path agent_dir;
    std::optional<runtime::Codebase> codebase;
    llm::GatewayConfig config;
    std::shared_ptr<llm::GatewayRouter> router;
    runtime::Budget budget;
    runtime::Budget meta_budget{std::chrono::minutes(30), Money::from_cents(2000), 200};
    bool overseer = true;
    std::optional<std::chrono::milliseconds> overseer_delay;
    fs::path workspace;
    std::size_t workers = 1;
    ouro_log_fn log_fn = nullptr;
    void* log_user = nullptr;
    std::unique_ptr<serve::ControlServer> server;
    std::mutex mu;
    ouro_run* served = nullptr; // guarded by mu

    llm::Gateway* judge() {
        if (!overseer || config.overseer_model.empty()) return nullptr;
        return router.get();
    }
    oversight::OverseerPolicy policy() const {
        oversight::OverseerPolicy p;
        p.model = config.overseer_model;
        if (overseer_delay) {
            p.initial_delay = *overseer_delay;
            p.min_delay = std::min(p.min_delay, *overseer_delay);
        }
        return p;
    }
    void log(const std::string& line) {
        if (log_fn) log_fn(line.c_str(), log_user);
    }
    std::function<void(events::EventStore*, runtime::Runtime*)> attach() {
        if (!server) return {};
        return [this](events::EventStore* store, runtime::Runtime* rt) { server->set_run(store, rt); };
    }
    bench::BenchOptions bench_options() {
        bench::BenchOptions o;
        o.limits.time = budget.wall_clock;
        o.limits.cost_cap = budget.dollars;
        o.limits.max_completions = budget.max_completions;
        o.workers = workers;
        o.judge = judge();
        o.overseer = policy();
        o.on_result = [this](const bench::ProblemResult& r) {
            std::ostringstream line;
            line << r.benchmark_id << "/" << r.problem_id << " " << r.status << " score=" << r.metrics.score
                 << " utility=" << r.utility;
            if (!r.error.empty()) line << " error=" << r.error;
            log(line.str());
        };
        // Several workers would fight over the one served run.
        if (workers == 1) o.on_run = attach();
        return o;
    }
};

struct ouro_run {
    ouro_session* session = nullptr;
    std::unique_ptr<tools::Workspace> ws;
    std::unique_ptr<events::EventStore> store;
    std::unique_ptr<runtime::Runtime> rt;
    std::thread runner;

    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    runtime::AgentResult result;
    std::optional<Error> error;

    bool finished() {
        std::lock_guard lock(mu);
        return done;
    }
    void require_finished() {
        if (!finished()) fail(ErrorCode::conflict, "run has not finished");
        if (error) throw *error;
    }
};

struct ouro_server {
    std::unique_ptr<events::EventStore> store;
    std::unique_ptr<meta::Archive> archive;
    std::unique_ptr<serve::ControlServer> server;
};

extern "C" {

const char* ouro_version(void) { return "0.1.0"; }

const char* ouro_status_name(ouro_status status) {
    switch (status) {
    case OURO_OK: return "ok";
    case OURO_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case OURO_ERR_NOT_FOUND: return "not_found";
    case OURO_ERR_CONFLICT: return "conflict";
    case OURO_ERR_CONFIG: return "config";
    case OURO_ERR_IO: return "io";
    case OURO_ERR_PARSE: return "parse";
    case OURO_ERR_CANCELLED: return "cancelled";
    case OURO_ERR_TIMEOUT: return "timeout";
    case OURO_ERR_TRANSPORT: return "transport";
    case OURO_ERR_SCRIPT: return "script";
    case OURO_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* ouro_last_error(void) { return g_last_error.c_str(); }

void ouro_string_free(char* s) { std::free(s); }

ouro_status ouro_session_open(const char* agent_dir, const char* gateway_config, ouro_session** out) {
    return guard([&] {
        need(agent_dir, "agent_dir");
        need(gateway_config, "gateway_config");
        need(out, "out");
        auto s = std::make_unique<ouro_session>();
        s->agent_dir = fs::absolute(agent_dir);
        s->codebase = runtime::Codebase::load(s->agent_dir);
        s->config = llm::GatewayConfig::load(gateway_config);
        s->router = s->config.build();
        for (auto& name : s->codebase->agent_names()) {
            auto& model = s->codebase->agent(name).model;
            if (!s->router->has(model))
                fail(ErrorCode::config, std::string(gateway_config) + ": no model \"" + model + "\" for agent " + name);
        }
        s->workspace = fs::current_path();
        *out = s.release();
    });
}

void ouro_session_close(ouro_session* session) {
    if (!session) return;
    if (session->server) session->server->stop();
    delete session;
}

ouro_status ouro_session_set_budget(ouro_session* session, double seconds, const char* dollars, int max_completions) {
    return guard([&] {
        need(session, "session");
        apply_budget(session->budget, seconds, dollars, max_completions);
    });
}

ouro_status ouro_session_set_meta_budget(ouro_session* session, double seconds, const char* dollars,
                                         int max_completions) {
    return guard([&] {
        need(session, "session");
        apply_budget(session->meta_budget, seconds, dollars, max_completions);
    });
}

ouro_status ouro_session_set_overseer(ouro_session* session, int enabled) {
    return guard([&] {
        need(session, "session");
        session->overseer = enabled != 0;
    });
}

ouro_status ouro_session_set_overseer_delay(ouro_session* session, double seconds) {
    return guard([&] {
        need(session, "session");
        if (!(seconds > 0)) fail(ErrorCode::invalid_argument, "overseer delay must be positive");
        session->overseer_delay = std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000));
    });
}

ouro_status ouro_session_set_workspace(ouro_session* session, const char* dir) {
    return guard([&] {
        need(session, "session");
        need(dir, "dir");
        fs::create_directories(dir);
        session->workspace = fs::canonical(dir);
    });
}

ouro_status ouro_session_set_workers(ouro_session* session, int workers) {
    return guard([&] {
        need(session, "session");
        if (workers < 1) fail(ErrorCode::invalid_argument, "workers must be at least 1");
        session->workers = static_cast<std::size_t>(workers);
    });
}

ouro_status ouro_session_serve(ouro_session* session, const char* host, int port, int* bound_port) {
    return guard([&] {
        need(session, "session");
        if (session->server) fail(ErrorCode::conflict, "session is already serving");
        serve::ServeOptions o;
        if (host) o.host = host;
        o.port = port;
        auto server = std::make_unique<serve::ControlServer>(o);
        int p = server->start();
        session->server = std::move(server);
        if (bound_port) *bound_port = p;
    });
}

ouro_status ouro_session_set_log(ouro_session* session, ouro_log_fn fn, void* user) {
    return guard([&] {
        need(session, "session");
        session->log_fn = fn;
        session->log_user = user;
    });
}

ouro_status ouro_run_start(ouro_session* session, const char* problem, ouro_run** out) {
    return guard([&] {
        need(session, "session");
        need(problem, "problem");
        need(out, "out");
        auto run = std::make_unique<ouro_run>();
        run->session = session;
        run->ws = std::make_unique<tools::Workspace>(session->workspace);
        run->store = std::make_unique<events::EventStore>();
        run->rt = std::make_unique<runtime::Runtime>(*session->codebase, *session->router, *run->store, *run->ws);
        if (session->server) {
            std::lock_guard lock(session->mu);
            session->server->set_run(run->store.get(), run->rt.get());
            session->served = run.get();
        }
        auto* r = run.get();
        r->runner = std::thread([r, problem = std::string(problem)] {
            auto* s = r->session;
            std::optional<oversight::Overseer> overseer;
            std::thread watcher;
            CancelToken stop;
            if (auto* judge = s->judge()) {
                overseer.emplace(*r->rt, *judge, s->policy());
                watcher = std::thread([&] { overseer->observe(stop); });
            }
            runtime::AgentResult result;
            std::optional<Error> error;
            try {
                result = r->rt->run(problem, s->budget);
            } catch (const Error& e) {
                error = e;
            } catch (const std::exception& e) {
                error = Error(ErrorCode::internal, e.what());
            }
            stop.cancel("run finished");
            if (watcher.joinable()) watcher.join();
            {
                std::lock_guard lock(r->mu);
                r->result = std::move(result);
                r->error = std::move(error);
                r->done = true;
            }
            r->cv.notify_all();
        });
        *out = run.release();
    });
}

ouro_status ouro_run_wait(ouro_run* run, int timeout_ms, int* finished) {
    return guard([&] {
        need(run, "run");
        std::unique_lock lock(run->mu);
        if (timeout_ms < 0)
            run->cv.wait(lock, [&] { return run->done; });
        else
            run->cv.wait_for(lock, std::chrono::milliseconds(timeout_ms), [&] { return run->done; });
        if (finished) *finished = run->done ? 1 : 0;
    });
}

ouro_status ouro_run_result(ouro_run* run, ouro_run_status* status, char** answer) {
    return guard([&] {
        need(run, "run");
        run->require_finished();
        if (status) *status = static_cast<ouro_run_status>(run->result.status);
        if (answer) *answer = dup(run->result.answer.value_or(run->result.value));
    });
}

ouro_status ouro_run_root_id(ouro_run* run, char** call_id) {
    return guard([&] {
        need(run, "run");
        need(call_id, "call_id");
        auto root = run->store->root_id();
        if (!root) fail(ErrorCode::not_found, "run has no root call yet");
        *call_id = dup(*root);
    });
}

ouro_status ouro_run_tree_json(ouro_run* run, char** out) {
    return guard([&] {
        need(run, "run");
        need(out, "out");
        *out = dup(events::tree_to_json(run->store->snapshot()).dump());
    });
}

ouro_status ouro_run_trace_text(ouro_run* run, char** out) {
    return guard([&] {
        need(run, "run");
        need(out, "out");
        *out = dup(events::render_trace(run->store->snapshot()));
    });
}

ouro_status ouro_run_events_json(ouro_run* run, uint64_t since, char** out) {
    return guard([&] {
        need(run, "run");
        need(out, "out");
        json arr = json::array();
        for (auto& e : all_events(*run->store, since)) arr.push_back(events::to_json(e));
        *out = dup(arr.dump());
    });
}

ouro_status ouro_run_notify(ouro_run* run, const char* call_id, const char* message) {
    return guard([&] {
        need(run, "run");
        need(call_id, "call_id");
        need(message, "message");
        if (!*message) fail(ErrorCode::invalid_argument, "message must not be empty");
        if (!run->store->status(call_id)) fail(ErrorCode::not_found, std::string("unknown call id: ") + call_id);
        run->rt->notify(call_id, message, "human");
    });
}

ouro_status ouro_run_cancel(ouro_run* run, const char* call_id, const char* reason, int force) {
    return guard([&] {
        need(run, "run");
        need(call_id, "call_id");
        std::string id = call_id;
        if (!run->store->status(id)) fail(ErrorCode::not_found, "unknown call id: " + id);
        if (!force && run->store->running(id) && run->store->notification_count(id) == 0)
            fail(ErrorCode::conflict, "call " + id + " has not been notified yet; notify it first or force");
        run->rt->cancel(id, reason && *reason ? reason : "cancelled by a human overseer", "human");
    });
}

ouro_status ouro_run_save(ouro_run* run, const char* dir) {
    return guard([&] {
        need(run, "run");
        need(dir, "dir");
        fs::path out(dir);
        fs::create_directories(out);
        auto snap = run->store->snapshot();
        fsx::write_file_atomic(out / "trace.txt", events::render_trace(snap));
        events::save_tree(out / "tree.json", snap);
        std::ofstream log(out / "events.jsonl", std::ios::binary | std::ios::trunc);
        if (!log) fail(ErrorCode::io, "cannot write " + (out / "events.jsonl").string());
        events::write_event_log(log, all_events(*run->store));
    });
}

void ouro_run_free(ouro_run* run) {
    if (!run) return;
    if (!run->finished()) {
        if (auto root = run->store->root_id()) {
            try {
                run->rt->cancel(*root, "run handle freed", "human");
            } catch (const Error&) {
            }
        }
    }
    if (run->runner.joinable()) run->runner.join();
    auto* s = run->session;
    if (s->server) {
        std::lock_guard lock(s->mu);
        if (s->served == run) {
            s->server->set_run(nullptr, nullptr);
            s->served = nullptr;
        }
    }
    delete run;
}

ouro_status ouro_bench_run(ouro_session* session, const char* tasks_path, const char* out_dir, char** report_json) {
    return guard([&] {
        need(session, "session");
        need(tasks_path, "tasks_path");
        auto tasks = bench::load_tasks(tasks_path);
        auto options = session->bench_options();
        if (out_dir) {
            fs::create_directories(out_dir);
            options.trace_dir = fs::path(out_dir) / "traces";
        }
        auto report = bench::run_benchmark(*session->codebase, *session->router, tasks, options);
        auto j = report.to_json();
        if (out_dir) {
            fsx::write_file_atomic(fs::path(out_dir) / "report.json", j.dump(2) + "\n");
            fsx::write_file_atomic(fs::path(out_dir) / "table.txt", report.table());
        }
        if (report_json) *report_json = dup(j.dump());
    });
}

ouro_status ouro_report_table(const char* report_json, char** table) {
    return guard([&] {
        need(report_json, "report_json");
        need(table, "table");
        *table = dup(bench::Report::from_json(json::parse(report_json)).table());
    });
}

ouro_status ouro_meta_run(ouro_session* session, const char* archive_dir, const char* tasks_path, int iterations,
                          int* final_index) {
    return guard([&] {
        need(session, "session");
        need(archive_dir, "archive_dir");
        need(tasks_path, "tasks_path");
        auto tasks = bench::load_tasks(tasks_path);
        meta::Archive archive(fs::absolute(archive_dir));
        meta::MetaOptions options;
        options.bench = session->bench_options();
        options.meta_budget = session->meta_budget;
        options.judge = session->judge();
        options.overseer = session->policy();
        options.log = [session](const std::string& line) { session->log(line); };
        options.on_run = session->attach();
        if (session->server) session->server->set_archive(&archive);
        struct Detach {
            ouro_session* s;
            ~Detach() {
                if (s->server) s->server->set_archive(nullptr);
            }
        } detach{session};
        std::vector<meta::MetaOutcome> outcomes;
        int last = meta::run_meta_loop(archive, session->agent_dir, tasks, *session->router, iterations, options,
                                       &outcomes);
        if (final_index) *final_index = last;
    });
}

ouro_status ouro_archive_json(const char* archive_dir, char** out) {
    return guard([&] {
        need(archive_dir, "archive_dir");
        need(out, "out");
        if (!fs::is_directory(archive_dir)) fail(ErrorCode::not_found, std::string("no archive at ") + archive_dir);
        meta::Archive archive(fs::absolute(archive_dir));
        *out = dup(json{{"iterations", archive.summaries()}}.dump());
    });
}

ouro_status ouro_build_repo(const char* script_json_path, const char* dest) {
    return guard([&] {
        need(script_json_path, "script_json_path");
        need(dest, "dest");
        bench::build_repo(dest, bench::load_repo_script(script_json_path));
    });
}

ouro_status ouro_gen_file_edit(const char* repo, size_t count, uint64_t seed, const char* out_path, size_t* written) {
    return guard([&] {
        need(repo, "repo");
        need(out_path, "out_path");
        auto tasks = bench::gen_file_edit_tasks(repo, count, seed);
        bench::save_tasks(out_path, tasks);
        if (written) *written = tasks.size();
    });
}

ouro_status ouro_gen_symbol(const char* repo, size_t count, uint64_t seed, const char* out_path, size_t* written) {
    return guard([&] {
        need(repo, "repo");
        need(out_path, "out_path");
        auto tasks = bench::gen_symbol_tasks(repo, count, seed);
        bench::save_tasks(out_path, tasks);
        if (written) *written = tasks.size();
    });
}

ouro_status ouro_server_open(const char* tree_json_path, const char* archive_dir, const char* host, int port,
                             ouro_server** out, int* bound_port) {
    return guard([&] {
        need(out, "out");
        auto s = std::make_unique<ouro_server>();
        serve::ServeOptions o;
        if (host) o.host = host;
        o.port = port;
        s->server = std::make_unique<serve::ControlServer>(o);
        if (tree_json_path) {
            s->store = events::EventStore::from_snapshot(events::load_tree(tree_json_path));
            s->server->set_run(s->store.get(), nullptr);
        }
        if (archive_dir) {
            if (!fs::is_directory(archive_dir))
                fail(ErrorCode::not_found, std::string("no archive at ") + archive_dir);
            s->archive = std::make_unique<meta::Archive>(fs::absolute(archive_dir));
            s->server->set_archive(s->archive.get());
        }
        int p = s->server->start();
        if (bound_port) *bound_port = p;
        *out = s.release();
    });
}

void ouro_server_close(ouro_server* server) {
    if (!server) return;
    server->server->stop();
    delete server;
}

} // extern "C"
