#include "mctsops/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mctsops/errors.hpp"

namespace mctsops {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }

    int get() const { return fd_; }
    void reset() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

struct Pipe {
    Fd read;
    Fd write;
};

std::optional<Pipe> make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) {
        return std::nullopt;
    }
    return Pipe{Fd(fds[0]), Fd(fds[1])};
}

// Removes the per-execution workspace on scope exit.
class Workspace {
public:
    Workspace() {
        std::string tmpl = (fs::temp_directory_path() / "mctsops-exec-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) != nullptr) {
            path_ = tmpl;
        }
    }
    ~Workspace() {
        if (!path_.empty()) {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
    }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    bool valid() const { return !path_.empty(); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::optional<std::string> resolve_executable(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        return ::access(name.c_str(), X_OK) == 0 ? std::optional<std::string>(name) : std::nullopt;
    }
    const char* path_env = std::getenv("PATH");
    std::stringstream dirs(path_env ? path_env : "/usr/local/bin:/usr/bin:/bin");
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) {
            continue;
        }
        const std::string candidate = dir + "/" + name;
        if (::access(candidate.c_str(), X_OK) == 0) {
            return candidate;
        }
    }
    return std::nullopt;
}

std::vector<std::string> split_command(const std::string& cmd) {
    std::istringstream in(cmd);
    std::vector<std::string> out;
    std::string word;
    while (in >> word) {
        out.push_back(word);
    }
    return out;
}

void append_capped(std::string& sink, bool& truncated, const char* data, std::size_t n, std::size_t cap) {
    if (sink.size() < cap) {
        const std::size_t take = std::min(n, cap - sink.size());
        sink.append(data, take);
        if (take < n) {
            truncated = true;
        }
    } else if (n > 0) {
        truncated = true;
    }
}

ExecutionResult spawn_failure(std::string message, Clock::time_point start) {
    ExecutionResult r;
    r.status = ExecStatus::spawn_error;
    r.stderr_text = std::move(message);
    r.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

void strip_prefix(std::string& text, const std::string& prefix) {
    std::size_t pos = 0;
    while ((pos = text.find(prefix, pos)) != std::string::npos) {
        text.erase(pos, prefix.size());
    }
}

}  // namespace

std::string_view to_string(ExecStatus status) {
    switch (status) {
        case ExecStatus::ok:
            return "ok";
        case ExecStatus::nonzero_exit:
            return "nonzero_exit";
        case ExecStatus::timeout:
            return "timeout";
        case ExecStatus::spawn_error:
            return "spawn_error";
    }
    return "spawn_error";
}

Sandbox::Sandbox(SandboxConfig config)
    : config_(std::move(config)), argv_prefix_(split_command(config_.interpreter_cmd)),
      slots_(std::max(1, config_.max_concurrent)) {
    if (argv_prefix_.empty()) {
        throw ConfigError("sandbox.interpreter_cmd is empty");
    }
    if (!(config_.limits.timeout_s > 0.0) || config_.limits.capture_bytes == 0) {
        throw ConfigError("sandbox limits must be positive");
    }
    if (config_.max_concurrent < 1) {
        throw ConfigError("sandbox.max_concurrent must be >= 1");
    }
}

ExecutionResult Sandbox::execute(std::string_view code) const {
    return execute(code, config_.limits);
}

ExecutionResult Sandbox::execute(std::string_view code, const ExecLimits& limits) const {
    if (!(limits.timeout_s > 0.0) || limits.capture_bytes == 0) {
        throw ContractViolation("execution limits must be positive");
    }
    SemaphoreGuard slot(slots_);
    const auto start = Clock::now();

    Workspace ws;
    if (!ws.valid()) {
        return spawn_failure("cannot create workspace directory", start);
    }
    const fs::path script = ws.path() / "candidate.py";
    {
        std::ofstream out(script, std::ios::binary);
        out.write(code.data(), static_cast<std::streamsize>(code.size()));
        if (!out) {
            return spawn_failure("cannot write script to workspace", start);
        }
    }
    const auto exe = resolve_executable(argv_prefix_.front());
    if (!exe) {
        return spawn_failure("interpreter not found: " + argv_prefix_.front(), start);
    }

    std::vector<std::string> args = argv_prefix_;
    args.push_back(script.string());
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);

    std::vector<std::string> env_strings;
    for (const auto& name : config_.env_allowlist) {
        if (const char* v = std::getenv(name.c_str())) {
            env_strings.push_back(name + "=" + v);
        }
    }
    std::vector<char*> envp;
    for (auto& e : env_strings) {
        envp.push_back(e.data());
    }
    envp.push_back(nullptr);

    auto out_pipe = make_pipe();
    auto err_pipe = make_pipe();
    auto exec_pipe = make_pipe();
    if (!out_pipe || !err_pipe || !exec_pipe) {
        return spawn_failure("cannot create pipes", start);
    }
    const std::string workdir = ws.path().string();

    const pid_t pid = ::fork();
    if (pid < 0) {
        return spawn_failure(std::string("fork failed: ") + std::strerror(errno), start);
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(out_pipe->write.get(), STDOUT_FILENO);
        ::dup2(err_pipe->write.get(), STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
        }
        if (::chdir(workdir.c_str()) == 0) {
            ::execve(exe->c_str(), argv.data(), envp.data());
        }
        const int err = errno;
        [[maybe_unused]] auto n = ::write(exec_pipe->write.get(), &err, sizeof err);
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    out_pipe->write.reset();
    err_pipe->write.reset();
    exec_pipe->write.reset();

    int exec_errno = 0;
    ssize_t got;
    do {
        got = ::read(exec_pipe->read.get(), &exec_errno, sizeof exec_errno);
    } while (got < 0 && errno == EINTR);
    if (got == static_cast<ssize_t>(sizeof exec_errno)) {
        int status = 0;
        ::waitpid(pid, &status, 0);
        return spawn_failure("cannot start interpreter: " + std::string(std::strerror(exec_errno)), start);
    }

    ExecutionResult result;
    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(limits.timeout_s));
    bool timed_out = false;
    bool exited = false;
    int wait_status = 0;
    std::array<pollfd, 2> fds{pollfd{out_pipe->read.get(), POLLIN, 0}, pollfd{err_pipe->read.get(), POLLIN, 0}};
    std::array<bool, 2> open{true, true};
    char buf[8192];

    auto drain_once = [&](int wait_ms) {
        nfds_t count = 0;
        std::array<pollfd, 2> active{};
        std::array<int, 2> which{};
        for (int i = 0; i < 2; ++i) {
            if (open[static_cast<std::size_t>(i)]) {
                active[count] = fds[static_cast<std::size_t>(i)];
                which[count] = i;
                ++count;
            }
        }
        if (count == 0) {
            return;
        }
        if (::poll(active.data(), count, wait_ms) <= 0) {
            return;
        }
        for (nfds_t k = 0; k < count; ++k) {
            if ((active[k].revents & (POLLIN | POLLHUP | POLLERR)) == 0) {
                continue;
            }
            const int i = which[k];
            const ssize_t n = ::read(active[k].fd, buf, sizeof buf);
            if (n <= 0) {
                if (n == 0 || errno != EINTR) {
                    open[static_cast<std::size_t>(i)] = false;
                }
                continue;
            }
            if (i == 0) {
                append_capped(result.stdout_text, result.stdout_truncated, buf, static_cast<std::size_t>(n),
                              limits.capture_bytes);
            } else {
                append_capped(result.stderr_text, result.stderr_truncated, buf, static_cast<std::size_t>(n),
                              limits.capture_bytes);
            }
        }
    };

    while (!exited) {
        const auto now = Clock::now();
        if (now >= deadline) {
            timed_out = true;
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &wait_status, 0);
            exited = true;
            break;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        drain_once(static_cast<int>(std::clamp<long long>(left, 1, 20)));
        const pid_t w = ::waitpid(pid, &wait_status, WNOHANG);
        if (w == pid) {
            exited = true;
        }
    }
    // Reap anything the script left behind in its process group, then collect
    // what is still buffered in the pipes.
    ::kill(-pid, SIGKILL);
    const auto drain_deadline = Clock::now() + std::chrono::milliseconds(500);
    while ((open[0] || open[1]) && Clock::now() < drain_deadline) {
        drain_once(20);
    }

    // Tracebacks name the script by absolute path; drop the per-run directory
    // so identical scripts produce identical output.
    strip_prefix(result.stdout_text, workdir + "/");
    strip_prefix(result.stderr_text, workdir + "/");

    result.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    if (timed_out) {
        result.status = ExecStatus::timeout;
        return result;
    }
    if (WIFEXITED(wait_status)) {
        result.exit_code = WEXITSTATUS(wait_status);
    } else if (WIFSIGNALED(wait_status)) {
        result.exit_code = 128 + WTERMSIG(wait_status);
    }
    result.status = result.exit_code == 0 ? ExecStatus::ok : ExecStatus::nonzero_exit;
    return result;
}

}  // namespace mctsops
