#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "mctsops/errors.hpp"
#include "mctsops/sandbox.hpp"
#include "support.hpp"

using namespace mctsops;

namespace {

// Number of live processes whose command line contains `marker`.
int processes_with(const std::string& marker) {
    int n = 0;
    for (const auto& entry : std::filesystem::directory_iterator("/proc")) {
        const auto name = entry.path().filename().string();
        if (name.find_first_not_of("0123456789") != std::string::npos) {
            continue;
        }
        std::ifstream in(entry.path() / "cmdline", std::ios::binary);
        std::string cmd((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::ifstream stat_in(entry.path() / "stat");
        std::string stat;
        std::getline(stat_in, stat);
        const auto close = stat.rfind(')');
        const bool zombie = close != std::string::npos && close + 2 < stat.size() && stat[close + 2] == 'Z';
        if (!zombie && cmd.find(marker) != std::string::npos) {
            ++n;
        }
    }
    return n;
}

bool wait_until_gone(const std::string& marker) {
    for (int i = 0; i < 100; ++i) {
        if (processes_with(marker) == 0) {
            return true;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return false;
}

}  // namespace

TEST_CASE("ok, nonzero exit and timeout") {
    const Sandbox sandbox(testing::fast_sandbox());

    const auto ok = sandbox.execute("print(\"total=0.0\")\n");
    CHECK(ok.status == ExecStatus::ok);
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("total=0.0") != std::string::npos);

    const auto syntax = sandbox.execute("x = [1, 2\nprint(x)\n");
    CHECK(syntax.status == ExecStatus::nonzero_exit);
    CHECK(syntax.exit_code != 0);
    CHECK_FALSE(syntax.stderr_text.empty());

    const auto exit3 = sandbox.execute("import sys\nsys.exit(3)\n");
    CHECK(exit3.status == ExecStatus::nonzero_exit);
    CHECK(exit3.exit_code == 3);

    const auto loop = sandbox.execute("while True:\n    pass\n", ExecLimits{2.0, 64 * 1024});
    CHECK(loop.status == ExecStatus::timeout);
    CHECK(loop.wall_time >= 2.0);
    CHECK_FALSE(loop.ok());
}

TEST_CASE("tracebacks do not depend on the workspace path") {
    const Sandbox sandbox(testing::fast_sandbox());
    const auto a = sandbox.execute("print(1/0)\n");
    const auto b = sandbox.execute("print(1/0)\n");
    CHECK(a.stderr_text == b.stderr_text);
    CHECK(a.stderr_text.find("candidate.py") != std::string::npos);
    CHECK(a.stderr_text.find("mctsops-exec") == std::string::npos);
}

TEST_CASE("classification is stable across runs") {
    const Sandbox sandbox(testing::fast_sandbox());
    for (const char* code : {"print(1)\n", "raise ValueError('x')\n", "def f(:\n"}) {
        const auto first = sandbox.execute(code).status;
        for (int i = 0; i < 4; ++i) {
            CHECK(sandbox.execute(code).status == first);
        }
    }
}

TEST_CASE("concurrent executions are isolated") {
    const Sandbox sandbox(testing::fast_sandbox());
    std::vector<std::future<ExecutionResult>> runs;
    // Each script reads back its own marker file and counts the prefix in its
    // own source, which holds it twice.
    for (int i = 0; i < 16; ++i) {
        const std::string code = "import time\nopen('candidate.txt', 'w').write('sentinel-" + std::to_string(i) +
                                 "')\ntime.sleep(0.05)\nprint(open('candidate.txt').read())\n"
                                 "print(open(__file__).read().count('sentinel-'))\n";
        runs.push_back(std::async(std::launch::async, [&sandbox, code] { return sandbox.execute(code); }));
    }
    for (int i = 0; i < 16; ++i) {
        const auto r = runs[static_cast<std::size_t>(i)].get();
        REQUIRE(r.status == ExecStatus::ok);
        CHECK(r.stdout_text == "sentinel-" + std::to_string(i) + "\n2\n");
    }
}

TEST_CASE("no processes survive a timeout") {
    const Sandbox sandbox(testing::fast_sandbox());
    const std::string marker = "mctsops-orphan-" + std::to_string(::getpid());
    const std::string code = "import subprocess, sys, time\n"
                             "subprocess.Popen([sys.executable, '-c', 'import time; time.sleep(60)', '" +
                             marker + "'])\nwhile True:\n    time.sleep(0.01)\n";
    const auto r = sandbox.execute(code, ExecLimits{1.0, 64 * 1024});
    CHECK(r.status == ExecStatus::timeout);
    CHECK(wait_until_gone(marker));
}

TEST_CASE("background children are reaped when the script exits") {
    const Sandbox sandbox(testing::fast_sandbox());
    const std::string marker = "mctsops-leftover-" + std::to_string(::getpid());
    const std::string code = "import subprocess, sys\n"
                             "subprocess.Popen([sys.executable, '-c', 'import time; time.sleep(60)', '" +
                             marker + "'], stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)\nprint('done')\n";
    const auto r = sandbox.execute(code);
    CHECK(r.status == ExecStatus::ok);
    CHECK(wait_until_gone(marker));
}

TEST_CASE("output beyond the capture limit is truncated and flagged") {
    const Sandbox sandbox(testing::fast_sandbox());
    const auto r = sandbox.execute("import sys\nprint('x' * 200000)\nsys.stderr.write('e' * 5000)\n",
                                   ExecLimits{10.0, 1024});
    CHECK(r.status == ExecStatus::ok);
    CHECK(r.stdout_text.size() == 1024);
    CHECK(r.stdout_truncated);
    CHECK(r.stderr_text.size() == 1024);
    CHECK(r.stderr_truncated);

    const auto small = sandbox.execute("print('short')\n");
    CHECK_FALSE(small.stdout_truncated);
}

TEST_CASE("missing interpreter is a spawn error") {
    SandboxConfig cfg = testing::fast_sandbox();
    cfg.interpreter_cmd = "no-such-interpreter-xyz";
    const Sandbox sandbox(cfg);
    const auto r = sandbox.execute("print(1)\n");
    CHECK(r.status == ExecStatus::spawn_error);
    CHECK_FALSE(r.exit_code);
    CHECK_FALSE(r.stderr_text.empty());
}

TEST_CASE("environment is reduced to the allowlist") {
    ::setenv("MCTSOPS_TEST_SECRET", "hunter2", 1);
    const Sandbox sandbox(testing::fast_sandbox());
    const auto r = sandbox.execute(
        "import os\nprint(os.environ.get('MCTSOPS_TEST_SECRET', 'absent'))\nprint('PATH' in os.environ)\n");
    CHECK(r.stdout_text == "absent\nTrue\n");
    ::unsetenv("MCTSOPS_TEST_SECRET");
}

TEST_CASE("the slot limit serializes executions") {
    SandboxConfig cfg = testing::fast_sandbox();
    cfg.max_concurrent = 1;
    const Sandbox sandbox(cfg);
    const auto start = std::chrono::steady_clock::now();
    auto a = std::async(std::launch::async, [&] { return sandbox.execute("import time\ntime.sleep(0.3)\n"); });
    auto b = std::async(std::launch::async, [&] { return sandbox.execute("import time\ntime.sleep(0.3)\n"); });
    CHECK(a.get().ok());
    CHECK(b.get().ok());
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= 0.6);
}

TEST_CASE("invalid configuration") {
    SandboxConfig empty;
    empty.interpreter_cmd = "  ";
    CHECK_THROWS_AS(Sandbox{empty}, ConfigError);
    SandboxConfig slots;
    slots.max_concurrent = 0;
    CHECK_THROWS_AS(Sandbox{slots}, ConfigError);
    const Sandbox sandbox(testing::fast_sandbox());
    CHECK_THROWS_AS(sandbox.execute("print(1)", ExecLimits{0.0, 10}), ContractViolation);
}
