#include "doctest.h"

#include "cli/process.hpp"

#include "httplib.h"
#include "json.hpp"

#include <csignal>
#include <sstream>

using namespace cli_test;
using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::vector<json> read_jsonl(const fs::path& p) {
    std::vector<json> out;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

std::size_t overseer_events(const fs::path& events) {
    std::size_t n = 0;
    for (auto& e : read_jsonl(events)) {
        auto source = e.value("payload", json::object()).value("source", "");
        if (e["kind"] == "overseer_notification" && source != "human") ++n;
    }
    return n;
}

std::vector<std::string> run_args(const std::string& config, const std::string& prompt) {
    return {"run", "-p", prompt, "--config", fixture("cli/" + config).string(), "--agent-dir", agents_dir().string()};
}

// Each key maps to the JSON types it may take.
void check_shape(const json& obj, const std::map<std::string, std::vector<json::value_t>>& shape) {
    REQUIRE(obj.is_object());
    CHECK(obj.size() == shape.size());
    for (auto& [key, types] : shape) {
        INFO("field " << key);
        REQUIRE(obj.contains(key));
        auto t = obj[key].type();
        bool okay = false;
        for (auto want : types)
            okay = okay || t == want ||
                   (want == json::value_t::number_float &&
                    (t == json::value_t::number_integer || t == json::value_t::number_unsigned)) ||
                   (want == json::value_t::number_unsigned && t == json::value_t::number_integer &&
                    obj[key].get<std::int64_t>() >= 0);
        CHECK(okay);
    }
}

} // namespace

TEST_CASE("run prints the scripted answer and writes the trace") {
    TempDir tmp;
    auto args = run_args("gateway.json", "say hi");
    args.insert(args.end(), {"--overseer-delay", "0.2", "--out", "out"});
    auto r = run_cli(args, tmp.path);
    INFO(r.err);
    CHECK(r.code == 0);
    CHECK(r.out == "hi\n");
    CHECK(fs::exists(tmp.path / "out/trace.txt"));
    CHECK(fs::exists(tmp.path / "out/tree.json"));
    CHECK(slurp(tmp.path / "out/trace.txt").find("EXECUTION TREE") != std::string::npos);
    // The overseer had time to check once and nudged the root.
    CHECK(overseer_events(tmp.path / "out/events.jsonl") == 1);

    auto tree = json::parse(slurp(tmp.path / "out/tree.json"));
    CHECK(tree["root"]["status"] == "returned");
    CHECK(tree["root"]["result"] == "hi");
}

TEST_CASE("--no-overseer leaves no overseer events") {
    TempDir tmp;
    auto args = run_args("gateway.json", "say hi");
    args.insert(args.end(), {"--overseer-delay", "0.2", "--out", "out", "--no-overseer"});
    auto r = run_cli(args, tmp.path);
    CHECK(r.code == 0);
    CHECK(overseer_events(tmp.path / "out/events.jsonl") == 0);
}

TEST_CASE("configuration errors exit 2 and name the culprit") {
    TempDir tmp;
    auto missing = (tmp.path / "nowhere" / "gateway.json").string();
    auto r = run_cli({"run", "-p", "say hi", "--config", missing, "--agent-dir", agents_dir().string()}, tmp.path);
    CHECK(r.code == 2);
    CHECK(r.err.find(missing) != std::string::npos);

    r = run_cli({"run", "-p", "x", "--config", fixture("cli/gateway.json").string(), "--agent-dir",
                 (tmp.path / "no-agent").string()},
                tmp.path);
    CHECK(r.code == 2);

    r = run_cli({"bench", "--bench", (tmp.path / "missing.jsonl").string(), "--config",
                 fixture("cli/bench_gateway.json").string(), "--agent-dir", agents_dir().string()},
                tmp.path);
    CHECK(r.code == 2);
    CHECK(r.err.find("missing.jsonl") != std::string::npos);

    auto bad_port = run_args("gateway.json", "x");
    bad_port.insert(bad_port.end(), {"--port", "80"});
    CHECK(run_cli(bad_port, tmp.path).code == 2);
    CHECK(run_cli({"run"}, tmp.path).code == 2);
    CHECK(run_cli({"frobnicate"}, tmp.path).code == 2);
}

TEST_CASE("a script that runs dry is an agent failure") {
    TempDir tmp;
    // The bench script answers once; a second request finds it exhausted.
    auto cfg = fixture("cli/bench_gateway.json").string();
    auto r = run_cli({"run", "-p", "Something else entirely", "--config", cfg, "--agent-dir", agents_dir().string(),
                      "--out", "out"},
                     tmp.path);
    CHECK(r.code == 1);
    CHECK(r.out.empty());
}

TEST_CASE("bench prints one row per benchmark and writes a well-formed report") {
    TempDir tmp;
    auto r = run_cli({"bench", "--bench", fixture("cli/tasks_one.jsonl").string(), "--config",
                      fixture("cli/bench_gateway.json").string(), "--agent-dir", agents_dir().string(), "--out",
                      "report", "-q"},
                     tmp.path);
    INFO(r.err);
    REQUIRE(r.code == 0);
    std::istringstream table(r.out);
    int rows = 0;
    for (std::string line; std::getline(table, line);)
        if (line.rfind("arith ", 0) == 0) ++rows;
    CHECK(rows == 1);
    CHECK(slurp(tmp.path / "report/table.txt") == r.out);
    CHECK(fs::exists(tmp.path / "report/traces/arith/two_plus_two.trace.txt"));

    using V = json::value_t;
    auto report = json::parse(slurp(tmp.path / "report/report.json"));
    check_shape(report, {{"p_score", {V::number_float}},
                         {"utility", {V::number_float}},
                         {"rows", {V::array}},
                         {"problems", {V::array}}});
    REQUIRE(report["rows"].size() == 1);
    check_shape(report["rows"][0], {{"benchmark_id", {V::string}},
                                    {"problems", {V::number_unsigned}},
                                    {"accuracy", {V::number_float}},
                                    {"cost", {V::number_float}},
                                    {"time", {V::number_float}},
                                    {"tokens", {V::number_float}},
                                    {"cached_pct", {V::number_float}},
                                    {"utility", {V::number_float}},
                                    {"timeouts", {V::number_unsigned}}});
    REQUIRE(report["problems"].size() == 1);
    auto& p = report["problems"][0];
    check_shape(p, {{"benchmark_id", {V::string}},
                    {"problem_id", {V::string}},
                    {"score", {V::number_float}},
                    {"cost", {V::string}},
                    {"time", {V::number_float}},
                    {"tokens", {V::number_unsigned}},
                    {"cached_fraction", {V::number_float}},
                    {"timed_out", {V::boolean}},
                    {"utility", {V::number_float}},
                    {"status", {V::string}},
                    {"answer", {V::string}},
                    {"error", {V::string}}});
    CHECK(p["score"] == 1.0);
    CHECK(p["answer"] == "4");
    CHECK(p["tokens"] == 920);
    // 900 prompt tokens at $3/M plus 20 completion tokens at $15/M.
    CHECK(p["cost"] == "0.003");
    CHECK(report["rows"][0]["accuracy"] == 1.0);
}

TEST_CASE("meta records iterations and resumes") {
    TempDir tmp;
    std::vector<std::string> args{"meta",
                                  "-n",
                                  "1",
                                  "--bench",
                                  fixture("cli/tasks_one.jsonl").string(),
                                  "--config",
                                  fixture("cli/meta_gateway.json").string(),
                                  "--agent-dir",
                                  agents_dir().string(),
                                  "--archive",
                                  "archive",
                                  "-q"};
    auto r = run_cli(args, tmp.path);
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(fs::is_directory(tmp.path / "archive/0"));
    CHECK(fs::is_directory(tmp.path / "archive/1"));
    CHECK_FALSE(fs::exists(tmp.path / "archive/2"));
    auto first = json::parse(r.out)["iterations"];
    REQUIRE(first.size() == 2);
    CHECK(first[0]["evaluated"] == true);
    CHECK(first[1]["evaluated"] == false);
    CHECK(first[1]["generated_by"] == 0);
    CHECK(first[1]["description"] == "Answers tersely.");

    r = run_cli(args, tmp.path);
    REQUIRE(r.code == 0);
    auto second = json::parse(r.out)["iterations"];
    REQUIRE(second.size() == 3);
    CHECK(second[1]["evaluated"] == true);
    CHECK(second[2]["index"] == 2);
    // Iterations tie on utility only if their costs match; either way the parent was evaluated.
    CHECK((second[2]["generated_by"] == 0 || second[2]["generated_by"] == 1));
    CHECK(first[0]["utility"] == second[0]["utility"]);

    auto listed = run_cli({"archive", "--archive", "archive"}, tmp.path);
    CHECK(listed.code == 0);
    CHECK(json::parse(listed.out)["iterations"].size() == 3);
}

TEST_CASE("human interventions on a live run through the CLI client") {
    TempDir tmp;
    auto args = run_args("stall_gateway.json", "do it");
    args.insert(args.begin(), cli_path().string());
    args.insert(args.end(), {"--port", "0", "--out", "out", "--no-overseer"});
    Process run(args, tmp.path, tmp.path);
    auto port = run.await(std::regex(R"(control API on http://127\.0\.0\.1:(\d+))"), 10s);
    REQUIRE(port);

    httplib::Client c("127.0.0.1", std::stoi(*port));
    std::string child;
    for (int i = 0; i < 500 && child.empty(); ++i) {
        if (auto res = c.Get("/api/tree"); res && res->status == 200) {
            auto tree = json::parse(res->body);
            if (tree["root"].is_object() && !tree["root"]["children"].empty())
                child = tree["root"]["children"][0]["call_id"];
        }
        if (child.empty()) std::this_thread::sleep_for(20ms);
    }
    REQUIRE_FALSE(child.empty());

    auto cancel = [&](bool force) {
        std::vector<std::string> a{"cancel", "--port", *port, "--call-id", child, "--reason", "spinning"};
        if (force) a.push_back("--force");
        return run_cli(a, tmp.path);
    };
    auto refused = cancel(false);
    CHECK(refused.code == 1);
    CHECK(refused.err.find("409") != std::string::npos);
    auto done = cancel(true);
    CHECK(done.code == 0);

    auto r = run.wait(30s);
    INFO(r.err);
    CHECK(r.code == 0);
    CHECK(r.out == "stopped\n");
    auto tree = json::parse(slurp(tmp.path / "out/tree.json"));
    CHECK(tree["root"]["children"][0]["status"] == "cancelled");

    // Nothing listens any more.
    auto gone = run_cli({"notify", "--port", *port, "--call-id", child, "-m", "hello"}, tmp.path);
    CHECK(gone.code == 2);
}

TEST_CASE("serve replays a saved run and an archive") {
    TempDir tmp;
    auto args = run_args("gateway.json", "say hi");
    args.insert(args.end(), {"--no-overseer", "--out", "out"});
    REQUIRE(run_cli(args, tmp.path).code == 0);
    auto root = json::parse(slurp(tmp.path / "out/tree.json"))["root"]["call_id"].get<std::string>();

    Process serve({cli_path().string(), "serve", "--tree", "out/tree.json", "--port", "0"}, tmp.path, tmp.path);
    auto port = serve.await(std::regex(R"(control API on http://127\.0\.0\.1:(\d+))"), 10s);
    REQUIRE(port);
    httplib::Client c("127.0.0.1", std::stoi(*port));
    auto tree = c.Get("/api/tree");
    REQUIRE(tree);
    CHECK(json::parse(tree->body)["root"]["result"] == "hi");
    CHECK(json::parse(c.Get("/api/archive")->body)["iterations"].empty());
    auto notify = run_cli({"notify", "--port", *port, "--call-id", root, "-m", "hello"}, tmp.path);
    CHECK(notify.code == 1);
    CHECK(notify.err.find("409") != std::string::npos);

    // A second server cannot take the same port.
    auto clash = run_cli({"serve", "--tree", "out/tree.json", "--port", *port}, tmp.path);
    CHECK(clash.code == 2);

    serve.signal(SIGTERM);
    CHECK(serve.wait(10s).code == 0);
}

TEST_CASE("fixture repository and task generation") {
    TempDir tmp;
    auto r = run_cli({"build-repo", "--script", fixture("minirepo.json").string(), "--dest", "repo"}, tmp.path);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(tmp.path / "repo/.git"));

    r = run_cli({"gen-file-edit", "--repo", "repo", "--count", "3", "--seed", "7", "--out", "edit.jsonl"}, tmp.path);
    CHECK(r.code == 0);
    auto edits = read_jsonl(tmp.path / "edit.jsonl");
    CHECK(edits.size() == 3);
    r = run_cli({"gen-file-edit", "--repo", "repo", "--count", "3", "--seed", "7", "--out", "again.jsonl"}, tmp.path);
    CHECK(slurp(tmp.path / "edit.jsonl") == slurp(tmp.path / "again.jsonl"));

    r = run_cli({"gen-symbol", "--repo", "repo", "--count", "2", "--out", "sym.jsonl"}, tmp.path);
    CHECK(r.code == 0);
    auto syms = read_jsonl(tmp.path / "sym.jsonl");
    REQUIRE(syms.size() == 2);
    CHECK(syms[0]["answer_spec"]["kind"] == "symbol_location");

    r = run_cli({"gen-symbol", "--repo", "repo", "--count", "100000", "--out", "many.jsonl"}, tmp.path);
    CHECK(r.code == 2);
}
