#include "tools/shell.hpp"

#include "common/error.hpp"
#include "common/text.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace ouro::tools {

namespace {

using namespace std::chrono_literals;

struct Fd {
    int fd = -1;
    ~Fd() { reset(); }
    void reset() {
        if (fd >= 0) ::close(fd);
        fd = -1;
    }
};

} // namespace

CommandResult run_command(const std::string& command, const CommandOptions& options) {
    auto started = SteadyClock::now();
    Deadline deadline = earliest(options.deadline, started + options.timeout);

    // stdin comes from an unlinked temp file so the child never blocks on us.
    Fd in;
    {
        char tmpl[] = "/tmp/ouro-stdin-XXXXXX";
        in.fd = ::mkstemp(tmpl);
        if (in.fd < 0) fail(ErrorCode::io, std::string("mkstemp: ") + std::strerror(errno));
        ::unlink(tmpl);
        std::size_t off = 0;
        while (off < options.stdin_data.size()) {
            auto n = ::write(in.fd, options.stdin_data.data() + off, options.stdin_data.size() - off);
            if (n < 0) fail(ErrorCode::io, std::string("write stdin: ") + std::strerror(errno));
            off += static_cast<std::size_t>(n);
        }
        ::lseek(in.fd, 0, SEEK_SET);
    }

    int pipefd[2];
    if (::pipe2(pipefd, O_CLOEXEC) != 0) fail(ErrorCode::io, std::string("pipe: ") + std::strerror(errno));
    Fd out_r, out_w;
    out_r.fd = pipefd[0];
    out_w.fd = pipefd[1];

    std::string cwd = options.cwd.empty() ? std::string(".") : options.cwd.string();
    pid_t pid = ::fork();
    if (pid < 0) fail(ErrorCode::io, std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(in.fd, 0);
        ::dup2(out_w.fd, 1);
        ::dup2(out_w.fd, 2);
        if (::chdir(cwd.c_str()) != 0) _exit(127);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    ::setpgid(pid, pid); // also done in the child; whichever runs first wins
    out_w.reset();
    in.reset();

    CommandResult r;
    char buf[16384];
    bool child_done = false;
    int status = 0;
    auto kill_group = [&] { ::kill(-pid, SIGKILL); };
    std::optional<SteadyClock::time_point> drain_until;

    for (;;) {
        if (!child_done) {
            pid_t w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid) {
                child_done = true;
                // Background grandchildren may keep the pipe open; give them a moment.
                drain_until = SteadyClock::now() + 200ms;
            }
        }
        if (!child_done || out_r.fd >= 0) {
            if (options.cancel && options.cancel->cancelled()) {
                r.cancelled = true;
                kill_group();
                break;
            }
            if (expired(deadline)) {
                r.timed_out = true;
                kill_group();
                break;
            }
        }
        if (out_r.fd < 0) {
            if (child_done) break;
            std::this_thread::sleep_for(10ms);
            continue;
        }
        if (drain_until && SteadyClock::now() > *drain_until) {
            kill_group();
            break;
        }
        pollfd p{out_r.fd, POLLIN, 0};
        int rc = ::poll(&p, 1, 20);
        if (rc < 0 && errno != EINTR) fail(ErrorCode::io, std::string("poll: ") + std::strerror(errno));
        if (rc > 0) {
            auto n = ::read(out_r.fd, buf, sizeof buf);
            if (n > 0) {
                r.total_bytes += static_cast<std::size_t>(n);
                if (r.output.size() < options.output_cap)
                    r.output.append(buf, std::min<std::size_t>(static_cast<std::size_t>(n), options.output_cap - r.output.size()));
            } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
                out_r.reset();
            }
        }
    }
    if (!child_done) {
        ::waitpid(pid, &status, 0);
    }
    if (!r.timed_out && !r.cancelled) {
        if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
        else if (WIFSIGNALED(status)) r.exit_code = 128 + WTERMSIG(status);
    }
    if (r.total_bytes > r.output.size()) {
        r.truncated = true;
        r.output.resize(text::utf8_prefix_length(r.output, r.output.size()));
        r.output += "\n[output truncated: showing " + std::to_string(r.output.size()) + " of " +
                    std::to_string(r.total_bytes) + " bytes]\n";
    }
    r.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - started);
    return r;
}

} // namespace ouro::tools
