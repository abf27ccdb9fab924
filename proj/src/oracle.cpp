#include "repcrash/oracle.hpp"

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

extern char** environ;

namespace repcrash {

namespace fs = std::filesystem;

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kConsistent: return "Consistent";
    case Verdict::kInconsistent: return "Inconsistent";
    case Verdict::kOracleError: return "OracleError";
  }
  return "?";
}

CheckResult run_checker(const CheckerSpec& checker, const fs::path& scratch) {
  CheckResult result;
  if (checker.argv.empty()) {
    result.oracle_output = "no checker command";
    return result;
  }
  std::vector<std::string> args = checker.argv;
  args.push_back(scratch.string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  int pipefd[2];
  if (pipe(pipefd) != 0) {
    result.oracle_output = std::string("pipe: ") + std::strerror(errno);
    return result;
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addclose(&actions, pipefd[0]);
  posix_spawn_file_actions_adddup2(&actions, pipefd[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, pipefd[1], STDERR_FILENO);
  posix_spawn_file_actions_addclose(&actions, pipefd[1]);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  // Own process group so a timeout can kill the checker's children too.
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  pid_t pid = 0;
  int rc = posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  close(pipefd[1]);
  if (rc != 0) {
    close(pipefd[0]);
    result.oracle_output = "cannot start " + args[0] + ": " + std::strerror(rc);
    return result;
  }

  const auto deadline = std::chrono::steady_clock::now() + checker.timeout;
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{pipefd[0], POLLIN, 0};
    int n = poll(&pfd, 1, static_cast<int>(left.count()));
    if (n < 0 && errno == EINTR) continue;
    if (n == 0) {
      timed_out = true;
      break;
    }
    ssize_t got = read(pipefd[0], buf, sizeof buf);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) break;
    result.oracle_output.append(buf, static_cast<std::size_t>(got));
  }
  close(pipefd[0]);

  if (timed_out) kill(-pid, SIGKILL);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) {
    result.oracle_output += "checker timed out after " +
                            std::to_string(checker.timeout.count()) + " ms";
    return result;
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    result.verdict = result.exit_code == 0 ? Verdict::kConsistent
                                           : Verdict::kInconsistent;
  } else {
    result.verdict = Verdict::kInconsistent;
    if (WIFSIGNALED(status)) {
      result.oracle_output += "checker killed by signal " +
                              std::to_string(WTERMSIG(status));
    }
  }
  return result;
}

CheckResult run_oracle(const CrashState& image, const CheckerSpec& checker,
                       const fs::path& scratch) {
  std::error_code ec;
  fs::remove_all(scratch, ec);
  image.materialize(scratch);
  return run_checker(checker, scratch);
}

}  // namespace repcrash
