#include "ouro/ouro.h"

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

using json = nlohmann::json;

namespace {

enum Exit { ok = 0, agent_failure = 1, config_error = 2 };

// Statuses that point at the operator's inputs rather than at the agent.
bool is_config(ouro_status s) {
    switch (s) {
    case OURO_ERR_INVALID_ARGUMENT:
    case OURO_ERR_NOT_FOUND:
    case OURO_ERR_CONFIG:
    case OURO_ERR_PARSE:
    case OURO_ERR_CONFLICT:
    case OURO_ERR_IO: return true;
    default: return false;
    }
}

struct Failure {
    int code;
};

void check(ouro_status s, const std::string& what) {
    if (s == OURO_OK) return;
    std::cerr << "ouro: " << what << ": " << ouro_last_error() << " (" << ouro_status_name(s) << ")\n";
    throw Failure{is_config(s) ? config_error : agent_failure};
}

std::string take(char* s) {
    std::string out = s ? s : "";
    ouro_string_free(s);
    return out;
}

struct SessionDeleter {
    void operator()(ouro_session* s) const { ouro_session_close(s); }
};
struct RunDeleter {
    void operator()(ouro_run* r) const { ouro_run_free(r); }
};
struct ServerDeleter {
    void operator()(ouro_server* s) const { ouro_server_close(s); }
};
using Session = std::unique_ptr<ouro_session, SessionDeleter>;

struct Common {
    std::string config;
    std::string agent_dir = "agents/initial";
    bool no_overseer = false;
    double overseer_delay = 0;
    double seconds = 0;
    std::string dollars;
    int max_completions = 0;
    int port = -1;
    std::string host = "127.0.0.1";
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Gateway config (JSON)")->required();
    cmd->add_option("--agent-dir", c.agent_dir, "Agent codebase directory")->capture_default_str();
    cmd->add_flag("--no-overseer", c.no_overseer, "Run without the asynchronous overseer");
    cmd->add_option("--overseer-delay", c.overseer_delay, "Seconds before the overseer's first check");
    cmd->add_option("--time", c.seconds, "Wall-clock limit per run, seconds");
    cmd->add_option("--dollars", c.dollars, "Cost limit per run, dollars");
    cmd->add_option("--max-completions", c.max_completions, "Completion cap per agent call");
    cmd->add_option("--port", c.port, "Serve the control API on this port while working (0 picks one)");
    cmd->add_option("--host", c.host, "Control API bind address")->capture_default_str();
    cmd->add_flag("-q,--quiet", c.quiet, "Suppress progress lines");
}

void check_port(int port) {
    if (port == -1 || port == 0 || (port >= 1024 && port <= 65535)) return;
    std::cerr << "ouro: --port must be 0 or in [1024, 65535], got " << port << "\n";
    throw Failure{config_error};
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

Session open_session(const Common& c) {
    check_port(c.port);
    ouro_session* raw = nullptr;
    check(ouro_session_open(c.agent_dir.c_str(), c.config.c_str(), &raw), "cannot open session");
    Session s(raw);
    check(ouro_session_set_budget(s.get(), c.seconds, c.dollars.empty() ? nullptr : c.dollars.c_str(),
                                  c.max_completions),
          "bad budget");
    check(ouro_session_set_overseer(s.get(), c.no_overseer ? 0 : 1), "overseer");
    if (c.overseer_delay > 0) check(ouro_session_set_overseer_delay(s.get(), c.overseer_delay), "overseer delay");
    if (!c.quiet) check(ouro_session_set_log(s.get(), log_line, nullptr), "log");
    if (c.port >= 0) {
        int bound = 0;
        check(ouro_session_serve(s.get(), c.host.c_str(), c.port, &bound), "cannot serve");
        std::cerr << "control API on http://" << c.host << ":" << bound << "\n";
    }
    return s;
}

int wait_for_signal() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
}

int post(const std::string& host, int port, const std::string& path, const json& body) {
    httplib::Client client(host, port);
    auto r = client.Post(path, body.dump(), "application/json");
    if (!r) {
        std::cerr << "ouro: cannot reach the control API at " << host << ":" << port << "\n";
        return config_error;
    }
    if (r->status == 200) {
        std::cout << r->body << "\n";
        return ok;
    }
    std::cerr << "ouro: HTTP " << r->status << ": " << r->body << "\n";
    return r->status == 400 ? config_error : agent_failure;
}

} // namespace

int main(int argc, char** argv) {
    // Blocked in every thread so `serve` can sigwait for a clean shutdown.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);

    CLI::App app{"Self-improving coding agent"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ouro_version()));

    Common run_opts;
    std::string prompt, workspace, out_dir = "ouro-run";
    auto* run = app.add_subcommand("run", "Run the entry agent on one prompt");
    add_common(run, run_opts);
    run->add_option("-p,--prompt", prompt, "Problem statement")->required();
    run->add_option("--workspace", workspace, "Directory the agent works in (default: current directory)");
    run->add_option("--out", out_dir, "Where trace.txt, tree.json and events.jsonl go")->capture_default_str();

    Common bench_opts;
    std::string tasks, bench_out;
    int workers = 1;
    bool print_json = false;
    auto* bench = app.add_subcommand("bench", "Evaluate the agent on a task file");
    add_common(bench, bench_opts);
    bench->add_option("--bench,--tasks", tasks, "Tasks file (JSONL)")->required();
    bench->add_option("--out", bench_out, "Directory for report.json, table.txt and traces");
    bench->add_option("--workers", workers, "Tasks run in parallel")->capture_default_str();
    bench->add_flag("--json", print_json, "Print the report as JSON instead of a table");

    Common meta_opts;
    std::string meta_tasks, archive_dir = "archive", meta_dollars;
    int iterations = 1, meta_workers = 1, meta_max = 0;
    double meta_seconds = 0;
    auto* meta = app.add_subcommand("meta", "Run the self-improvement loop");
    add_common(meta, meta_opts);
    meta->add_option("--bench,--tasks", meta_tasks, "Evaluation tasks (JSONL)")->required();
    meta->add_option("--archive", archive_dir, "Archive directory; an existing one is resumed")->capture_default_str();
    meta->add_option("-n,--iterations", iterations, "Improvement rounds to run")->capture_default_str();
    meta->add_option("--workers", meta_workers, "Evaluation tasks run in parallel")->capture_default_str();
    meta->add_option("--meta-time", meta_seconds, "Wall-clock limit per meta-agent run, seconds");
    meta->add_option("--meta-dollars", meta_dollars, "Cost limit per meta-agent run, dollars");
    meta->add_option("--meta-max-completions", meta_max, "Completion cap per meta-agent call");

    std::string serve_tree, serve_archive, serve_host = "127.0.0.1";
    int serve_port = 8765;
    auto* serve = app.add_subcommand("serve", "Serve the control API over a saved run and/or an archive");
    serve->add_option("--tree", serve_tree, "tree.json written by `ouro run`");
    serve->add_option("--archive", serve_archive, "Archive directory");
    serve->add_option("--port", serve_port, "Port (0 picks one)")->capture_default_str();
    serve->add_option("--host", serve_host, "Bind address")->capture_default_str();

    std::string c_host = "127.0.0.1", call_id, message, reason;
    int c_port = 8765;
    bool force = false;
    auto* notify = app.add_subcommand("notify", "Send a message to a running agent call");
    notify->add_option("--port", c_port, "Control API port")->capture_default_str();
    notify->add_option("--host", c_host, "Control API host")->capture_default_str();
    notify->add_option("--call-id", call_id, "Target call")->required();
    notify->add_option("-m,--message", message, "Message text")->required();
    auto* cancel = app.add_subcommand("cancel", "Cancel a running agent call");
    cancel->add_option("--port", c_port, "Control API port")->capture_default_str();
    cancel->add_option("--host", c_host, "Control API host")->capture_default_str();
    cancel->add_option("--call-id", call_id, "Target call")->required();
    cancel->add_option("--reason", reason, "Reason shown to the parent");
    cancel->add_flag("--force", force, "Cancel even if the call was never notified");

    std::string script, dest;
    auto* build = app.add_subcommand("build-repo", "Build a fixture git repository from a JSON script");
    build->add_option("--script", script, "Repository script (JSON)")->required();
    build->add_option("--dest", dest, "New repository directory")->required();

    std::string repo, gen_out;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    auto* gen_edit = app.add_subcommand("gen-file-edit", "Generate file-editing tasks from git history");
    auto* gen_sym = app.add_subcommand("gen-symbol", "Generate symbol-location tasks from a repository");
    for (auto* g : {gen_edit, gen_sym}) {
        g->add_option("--repo", repo, "Git repository")->required();
        g->add_option("--count", count, "Tasks to generate (0 = all candidates)")->capture_default_str();
        g->add_option("--seed", seed, "Sampling seed")->capture_default_str();
        g->add_option("--out", gen_out, "Output JSONL")->required();
    }

    std::string list_archive = "archive";
    auto* archive = app.add_subcommand("archive", "Print the archive summaries as JSON");
    archive->add_option("--archive", list_archive, "Archive directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (*run) {
            auto s = open_session(run_opts);
            if (!workspace.empty()) check(ouro_session_set_workspace(s.get(), workspace.c_str()), "workspace");
            ouro_run* raw = nullptr;
            check(ouro_run_start(s.get(), prompt.c_str(), &raw), "cannot start");
            std::unique_ptr<ouro_run, RunDeleter> r(raw);
            check(ouro_run_wait(r.get(), -1, nullptr), "wait");
            check(ouro_run_save(r.get(), out_dir.c_str()), "cannot save the trace");
            ouro_run_status st;
            char* answer = nullptr;
            check(ouro_run_result(r.get(), &st, &answer), "run failed");
            auto text = take(answer);
            if (st != OURO_RUN_RETURNED) {
                const char* names[] = {"returned", "cancelled", "timed_out", "budget_exhausted"};
                std::cerr << "ouro: run " << names[st] << ": " << text << "\n";
                return agent_failure;
            }
            std::cout << text << "\n";
            std::cerr << "trace: " << out_dir << "/trace.txt\n";
            return ok;
        }
        if (*bench) {
            auto s = open_session(bench_opts);
            check(ouro_session_set_workers(s.get(), workers), "workers");
            char* report = nullptr;
            check(ouro_bench_run(s.get(), tasks.c_str(), bench_out.empty() ? nullptr : bench_out.c_str(), &report),
                  "benchmark failed");
            auto j = take(report);
            if (print_json) {
                std::cout << json::parse(j).dump(2) << "\n";
            } else {
                char* table = nullptr;
                check(ouro_report_table(j.c_str(), &table), "report");
                std::cout << take(table);
            }
            return ok;
        }
        if (*meta) {
            auto s = open_session(meta_opts);
            check(ouro_session_set_workers(s.get(), meta_workers), "workers");
            check(ouro_session_set_meta_budget(s.get(), meta_seconds,
                                               meta_dollars.empty() ? nullptr : meta_dollars.c_str(), meta_max),
                  "bad meta budget");
            int last = 0;
            check(ouro_meta_run(s.get(), archive_dir.c_str(), meta_tasks.c_str(), iterations, &last),
                  "meta-loop failed");
            char* summary = nullptr;
            check(ouro_archive_json(archive_dir.c_str(), &summary), "archive");
            std::cout << json::parse(take(summary)).dump(2) << "\n";
            std::cerr << "latest iteration: " << last << "\n";
            return ok;
        }
        if (*serve) {
            check_port(serve_port);
            pthread_sigmask(SIG_BLOCK, &set, nullptr);
            ouro_server* raw = nullptr;
            int bound = 0;
            check(ouro_server_open(serve_tree.empty() ? nullptr : serve_tree.c_str(),
                                   serve_archive.empty() ? nullptr : serve_archive.c_str(), serve_host.c_str(),
                                   serve_port, &raw, &bound),
                  "cannot serve");
            std::unique_ptr<ouro_server, ServerDeleter> server(raw);
            std::cout << "control API on http://" << serve_host << ":" << bound << std::endl;
            wait_for_signal();
            return ok;
        }
        if (*notify) return post(c_host, c_port, "/api/notify", {{"call_id", call_id}, {"message", message}});
        if (*cancel)
            return post(c_host, c_port, "/api/cancel", {{"call_id", call_id}, {"reason", reason}, {"force", force}});
        if (*build) {
            check(ouro_build_repo(script.c_str(), dest.c_str()), "cannot build the repository");
            return ok;
        }
        if (*gen_edit || *gen_sym) {
            std::size_t written = 0;
            auto fn = *gen_edit ? ouro_gen_file_edit : ouro_gen_symbol;
            check(fn(repo.c_str(), count, seed, gen_out.c_str(), &written), "cannot generate tasks");
            std::cerr << "wrote " << written << " tasks to " << gen_out << "\n";
            return ok;
        }
        if (*archive) {
            char* summary = nullptr;
            check(ouro_archive_json(list_archive.c_str(), &summary), "archive");
            std::cout << json::parse(take(summary)).dump(2) << "\n";
            return ok;
        }
    } catch (const Failure& f) {
        return f.code;
    }
    return ok;
}
