#include <chrono>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "sciagent/errors.hpp"
#include "sciagent/tools.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

Json to_json(const ToolResult& result) {
  Json j{{"tool_name", result.tool_name},
         {"stdout", result.stdout_text},
         {"stderr", result.stderr_text},
         {"artifacts", result.artifacts},
         {"timed_out", result.timed_out},
         {"metadata", result.metadata}};
  j["exit_code"] = result.exit_code ? Json(*result.exit_code) : Json(nullptr);
  return j;
}

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0) throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    for (int f : fd) {
      if (f >= 0) ::close(f);
    }
  }
  void close_end(int i) {
    if (fd[i] >= 0) ::close(fd[i]);
    fd[i] = -1;
  }
};

bool inside(const std::filesystem::path& root, const std::filesystem::path& p) {
  auto rel = std::filesystem::weakly_canonical(p).lexically_relative(std::filesystem::weakly_canonical(root));
  return !rel.empty() && *rel.begin() != "..";
}

}  // namespace

ToolResult run_cmd(const CommandRequest& request, const SafetyVerdict& verdict,
                   const std::filesystem::path& workspace, const CommandPolicy& policy) {
  if (!verdict.allowed()) throw GateViolation("command was not approved by the safety gate");
  if (verdict.command() != request.command) {
    throw GateViolation("safety verdict is bound to a different command");
  }
  if (request.command.empty()) throw PreconditionError("empty command");
  const auto working_dir = request.working_dir.empty() ? workspace : request.working_dir;
  if (!inside(workspace, working_dir)) {
    throw PathEscape("working directory " + working_dir.string() + " is outside the workspace");
  }
  std::error_code ec;
  std::filesystem::create_directories(workspace / ".tmp", ec);

  auto env_strings = policy.child_environment(workspace);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::string shell = "/bin/sh";
  std::string dash_c = "-c";
  std::string command = request.command;
  char* argv[] = {shell.data(), dash_c.data(), command.data(), nullptr};
  const std::string dir = working_dir.string();

  Pipe out, err;
  pid_t pid = ::fork();
  if (pid < 0) throw SpawnFailure(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, 0);
    ::dup2(out.fd[1], 1);
    ::dup2(err.fd[1], 2);
    if (::chdir(dir.c_str()) != 0) ::_exit(126);
    ::execve(shell.c_str(), argv, envp.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  out.close_end(1);
  err.close_end(1);

  ToolResult result;
  result.tool_name = "run_cmd";
  std::string* sinks[2] = {&result.stdout_text, &result.stderr_text};
  int fds[2] = {out.fd[0], err.fd[0]};
  bool truncated = false;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(static_cast<long>(policy.timeout_seconds * 1000));
  char buf[8192];
  int open_fds = 2;
  while (open_fds > 0) {
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd pfds[2];
    int n = 0;
    int which[2];
    for (int i = 0; i < 2; ++i) {
      if (fds[i] >= 0) {
        pfds[n] = {fds[i], POLLIN, 0};
        which[n++] = i;
      }
    }
    int rc = ::poll(pfds, static_cast<nfds_t>(n), static_cast<int>(std::min<long>(remaining.count(), 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int k = 0; k < n; ++k) {
      if (!(pfds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      int i = which[k];
      ssize_t got = ::read(fds[i], buf, sizeof buf);
      if (got <= 0) {
        fds[i] = -1;
        --open_fds;
        continue;
      }
      auto& sink = *sinks[i];
      std::size_t room = policy.max_output_bytes > sink.size() ? policy.max_output_bytes - sink.size() : 0;
      if (static_cast<std::size_t>(got) > room) truncated = true;
      sink.append(buf, std::min(room, static_cast<std::size_t>(got)));
    }
  }

  int status = 0;
  if (result.timed_out) {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &status, 0);
  } else {
    // Output closed; the shell may still be running with closed pipes.
    while (true) {
      pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        result.timed_out = true;
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        break;
      }
      ::usleep(2000);
    }
  }
  // Stray grandchildren in the group go too.
  ::kill(-pid, SIGKILL);

  if (result.timed_out) {
    result.metadata["timeout_seconds"] = policy.timeout_seconds;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  if (truncated) result.metadata["output_truncated"] = true;
  result.metadata["command"] = request.command;

  if (result.exit_code && *result.exit_code == 127) {
    throw SpawnFailure("command not found (exit 127): " + trim(result.stderr_text));
  }
  if (result.exit_code && *result.exit_code == 126 && result.stdout_text.empty() && result.stderr_text.empty()) {
    throw SpawnFailure("cannot enter working directory " + dir);
  }

  std::string reply;
  if (result.timed_out) {
    reply += "Command timed out after " + std::to_string(static_cast<long>(policy.timeout_seconds)) + " s.\n";
  } else {
    reply += "Exit code: " + std::to_string(result.exit_code.value_or(-1)) + "\n";
  }
  reply += "STDOUT:\n" + result.stdout_text + "\nSTDERR:\n" + result.stderr_text;
  result.reply = reply;
  return result;
}

}  // namespace sciagent
