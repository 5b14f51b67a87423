#include <algorithm>
#include <array>
#include <cstdlib>
#include <set>

#include "sciagent/errors.hpp"
#include "sciagent/tools.hpp"

namespace sciagent {

SafetyVerdict SafetyVerdict::from_reply(std::string command, std::string raw_reply) {
  bool allowed = raw_reply.find(kSafeMarker) != std::string::npos &&
                 raw_reply.find(kUnsafeMarker) == std::string::npos && !command.empty();
  return SafetyVerdict(std::move(command), std::move(raw_reply), allowed);
}

SafetyVerdict SafetyVerdict::blocked(std::string command, std::string reason) {
  return SafetyVerdict(std::move(command), std::move(reason), false);
}

Json to_json(const SafetyVerdict& verdict) {
  return {{"command", verdict.command()}, {"verdict", verdict.verdict_name()}, {"raw_reply", verdict.raw_reply()}};
}

namespace {

struct SimpleCommand {
  std::vector<std::string> words;
  std::vector<std::string> redirect_targets;
};

// Shell-ish splitting: quotes and backslashes are honoured, control
// operators split commands, redirection operators capture their target.
std::vector<SimpleCommand> split_commands(const std::string& line) {
  std::vector<SimpleCommand> out(1);
  std::string word;
  bool in_word = false;
  bool pending_redirect = false;

  auto flush = [&] {
    if (!in_word) return;
    if (pending_redirect) {
      out.back().redirect_targets.push_back(word);
      pending_redirect = false;
    } else {
      out.back().words.push_back(word);
    }
    word.clear();
    in_word = false;
  };

  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '\'') {
      auto close = line.find('\'', i + 1);
      if (close == std::string::npos) close = line.size();
      word += line.substr(i + 1, close - i - 1);
      in_word = true;
      i = close;
    } else if (c == '"') {
      std::size_t j = i + 1;
      for (; j < line.size() && line[j] != '"'; ++j) {
        if (line[j] == '\\' && j + 1 < line.size()) ++j;
        word.push_back(line[j]);
      }
      in_word = true;
      i = j;
    } else if (c == '\\' && i + 1 < line.size()) {
      word.push_back(line[++i]);
      in_word = true;
    } else if (c == ' ' || c == '\t') {
      flush();
    } else if (c == ';' || c == '|' || c == '&' || c == '\n' || c == '(' || c == ')') {
      if (c == '&' && i + 1 < line.size() && line[i + 1] == '>') {
        flush();
        pending_redirect = true;
        ++i;
        if (i + 1 < line.size() && line[i + 1] == '>') ++i;
        continue;
      }
      flush();
      pending_redirect = false;
      out.emplace_back();
    } else if (c == '>') {
      // "2>" / "1>" prefixes belong to the operator, not to a word.
      if (in_word && (word == "1" || word == "2")) {
        word.clear();
        in_word = false;
      } else {
        flush();
      }
      if (i + 1 < line.size() && (line[i + 1] == '>' || line[i + 1] == '|')) ++i;
      if (i + 1 < line.size() && line[i + 1] == '&') {
        // >&2 style fd duplication
        ++i;
        while (i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1]))) ++i;
        continue;
      }
      pending_redirect = true;
    } else {
      word.push_back(c);
      in_word = true;
    }
  }
  flush();
  std::erase_if(out, [](const SimpleCommand& c) { return c.words.empty() && c.redirect_targets.empty(); });
  return out;
}

std::string basename_of(const std::string& word) {
  auto slash = word.rfind('/');
  return slash == std::string::npos ? word : word.substr(slash + 1);
}

bool within(const std::filesystem::path& root, const std::filesystem::path& p) {
  auto rel = p.lexically_normal().lexically_relative(root.lexically_normal());
  if (rel.empty()) return false;
  auto first = *rel.begin();
  return first != "..";
}

// True when `arg` names a location outside the workspace, or cannot be
// judged statically (variables, command substitution, home directory).
bool escapes(const std::string& arg, const std::filesystem::path& workspace) {
  if (arg.empty()) return false;
  if (arg.find('$') != std::string::npos || arg.find('`') != std::string::npos) return true;
  if (arg.front() == '~') return true;
  static const std::set<std::string> harmless{"/dev/null", "/dev/stdout", "/dev/stderr"};
  if (harmless.contains(arg)) return false;
  std::filesystem::path p(arg);
  if (p.is_absolute()) return !within(workspace, p) && p.lexically_normal() != workspace.lexically_normal();
  auto joined = (workspace / p).lexically_normal();
  return !(within(workspace, joined) || joined == workspace.lexically_normal());
}

const std::set<std::string> kEscalation{"sudo", "su", "doas", "pkexec", "chroot", "runuser", "setpriv", "setcap"};
const std::set<std::string> kSystemPackageManagers{
    "apt", "apt-get", "aptitude", "dpkg", "yum", "dnf", "zypper", "pacman", "apk", "brew",
    "snap", "port", "conda", "mamba", "micromamba", "rpm", "flatpak", "nix-env"};
const std::set<std::string> kMutatingVerbs{"install", "uninstall", "remove", "update", "upgrade", "add", "rm", "i"};
const std::set<std::string> kPathWriters{"rm", "rmdir", "unlink", "shred", "mv", "cp", "ln", "touch", "mkdir",
                                         "tee", "truncate", "chmod", "chown", "chgrp", "install", "rsync", "cd",
                                         "pushd", "scp", "tar", "unzip"};

std::optional<std::string> check_simple(const SimpleCommand& cmd, const std::filesystem::path& workspace) {
  for (const auto& target : cmd.redirect_targets) {
    if (escapes(target, workspace)) return "redirects output outside the workspace: " + target;
  }
  std::size_t first = 0;
  while (first < cmd.words.size() && cmd.words[first].find('=') != std::string::npos &&
         cmd.words[first].front() != '-') {
    ++first;
  }
  if (first >= cmd.words.size()) return std::nullopt;
  std::vector<std::string> words(cmd.words.begin() + static_cast<long>(first), cmd.words.end());
  while (!words.empty() && (words.front() == "env" || words.front() == "nohup" || words.front() == "time" ||
                            words.front() == "exec" || words.front() == "command")) {
    words.erase(words.begin());
  }
  if (words.empty()) return std::nullopt;
  const std::string prog = basename_of(words.front());

  if (kEscalation.contains(prog)) return "privilege escalation (" + prog + ")";
  if (kSystemPackageManagers.contains(prog)) return "system package manager (" + prog + ")";

  auto has_word = [&](std::initializer_list<const char*> needles) {
    for (std::size_t i = 1; i < words.size(); ++i) {
      for (const char* n : needles) {
        if (words[i] == n) return true;
      }
    }
    return false;
  };
  bool is_pip = prog == "pip" || prog == "pip3" || prog == "pipx" || prog == "uv" ||
                (prog.starts_with("python") && words.size() > 2 && words[1] == "-m" &&
                 (words[2] == "pip" || words[2] == "ensurepip"));
  if (is_pip && has_word({"install", "uninstall", "download", "sync", "add", "remove"})) {
    return "package installation (" + prog + ")";
  }
  if ((prog == "npm" || prog == "yarn" || prog == "pnpm") && has_word({"-g", "--global", "global"})) {
    return "global package installation (" + prog + ")";
  }
  if ((prog == "gem" || prog == "cargo" || prog == "go" || prog == "opam" || prog == "cabal") && words.size() > 1 &&
      kMutatingVerbs.contains(words[1])) {
    return "package installation (" + prog + ")";
  }
  for (const auto& w : words) {
    if (w.find("Pkg.add") != std::string::npos || w.find("Pkg.rm") != std::string::npos ||
        w.find("Pkg.update") != std::string::npos || w.find("install.packages") != std::string::npos) {
      return "package installation from an interpreter";
    }
  }
  if (prog == "chmod") {
    for (std::size_t i = 1; i < words.size(); ++i) {
      const auto& w = words[i];
      if (w.find('s') != std::string::npos && (w.find('+') != std::string::npos || w.find('=') != std::string::npos)) {
        return "setuid/setgid bit change";
      }
      if (w.size() == 4 && std::all_of(w.begin(), w.end(), ::isdigit) && w[0] != '0') {
        return "setuid/setgid bit change";
      }
    }
  }

  bool writes_paths = kPathWriters.contains(prog);
  if (prog == "dd") {
    for (const auto& w : words) {
      if (w.starts_with("of=") && escapes(w.substr(3), workspace)) return "dd writes outside the workspace";
    }
  }
  if (prog == "find" && has_word({"-delete", "-exec", "-execdir", "-ok"})) writes_paths = true;
  if (prog == "sed" && has_word({"-i", "--in-place"})) writes_paths = true;
  if (prog == "git" && words.size() > 1 && (words[1] == "clone" || words[1] == "-C")) writes_paths = true;
  if (writes_paths) {
    for (std::size_t i = 1; i < words.size(); ++i) {
      const auto& w = words[i];
      if (w.starts_with("-") && w != "-") {
        auto eq = w.find('=');
        if (eq != std::string::npos && escapes(w.substr(eq + 1), workspace)) {
          return prog + " touches a path outside the workspace: " + w;
        }
        continue;
      }
      if (escapes(w, workspace)) return prog + " touches a path outside the workspace: " + w;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> CommandPolicy::denial_reason(const std::string& command,
                                                         const std::filesystem::path& workspace) const {
  if (command.find('\0') != std::string::npos) return "command contains a NUL byte";
  // Command substitution can hide any of the patterns below.
  if (command.find("$(") != std::string::npos || command.find('`') != std::string::npos) {
    for (const auto& esc : kEscalation) {
      if (command.find(esc + " ") != std::string::npos) return "privilege escalation inside substitution";
    }
  }
  for (const auto& simple : split_commands(command)) {
    if (auto reason = check_simple(simple, workspace)) return reason;
  }
  return std::nullopt;
}

std::vector<std::string> CommandPolicy::child_environment(const std::filesystem::path& workspace) const {
  std::vector<std::string> env;
  for (const auto& name : env_allow) {
    if (name == "HOME" || name == "TMPDIR") continue;
    if (const char* v = std::getenv(name.c_str())) env.push_back(name + "=" + v);
  }
  env.push_back("HOME=" + workspace.string());
  env.push_back("TMPDIR=" + (workspace / ".tmp").string());
  return env;
}

SafetyVerdict safety_check(Session& session, const std::string& command, const std::filesystem::path& workspace,
                           const CommandPolicy& policy) {
  if (command.empty()) throw PreconditionError("safety_check needs a nonempty command");
  SafetyVerdict verdict = SafetyVerdict::blocked(command, "");
  Json extra = Json::object();
  if (auto reason = policy.denial_reason(command, workspace)) {
    verdict = SafetyVerdict::blocked(command, "policy: " + *reason);
    extra["policy_denial"] = *reason;
  } else {
    std::vector<ChatMessage> request{ChatMessage::user(session.prompts().safety + command)};
    try {
      auto reply = session.call(request, {}, "safety_check");
      verdict = SafetyVerdict::from_reply(command, reply.message.content);
    } catch (const std::exception& e) {
      verdict = SafetyVerdict::blocked(command, std::string("safety check failed: ") + e.what());
      extra["backend_failure"] = true;
    }
  }
  Json payload = to_json(verdict);
  payload.update(extra);
  session.transcript().append(EventKind::safety_verdict, payload);
  return verdict;
}

}  // namespace sciagent
