#include <sstream>

#include <sys/stat.h>

#include "sciagent/errors.hpp"
#include "sciagent/tools.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

namespace fs = std::filesystem;

fs::path resolve_in_workspace(const fs::path& workspace, const std::string& relative) {
  if (relative.empty()) throw PathEscape("empty path");
  if (relative.find('\0') != std::string::npos) throw PathEscape("path contains a NUL byte");
  fs::path rel(relative);
  if (rel.is_absolute() || rel.has_root_name()) throw PathEscape("absolute path '" + relative + "' refused");
  auto normal = rel.lexically_normal();
  if (normal.empty() || normal == "." || *normal.begin() == "..") {
    throw PathEscape("path '" + relative + "' leaves the workspace");
  }
  auto root = fs::weakly_canonical(workspace);
  auto target = root / normal;
  // Symlinks anywhere along the existing prefix must not lead outside.
  auto resolved = fs::weakly_canonical(target);
  auto check = resolved.lexically_relative(root);
  if (check.empty() || *check.begin() == ".." || check == ".") {
    throw PathEscape("path '" + relative + "' resolves outside the workspace");
  }
  return resolved;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

enum class Op { keep, del, ins };

// Myers' O(ND) shortest edit script.
std::vector<Op> edit_script(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int max = n + m;
  const int offset = max + 1;
  std::vector<int> v(static_cast<std::size_t>(2 * max + 3), 0);
  std::vector<std::vector<int>> trace;
  int found_d = -1;
  for (int d = 0; d <= max && found_d < 0; ++d) {
    trace.push_back(v);
    for (int k = -d; k <= d; k += 2) {
      int x;
      if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) {
        x = v[offset + k + 1];
      } else {
        x = v[offset + k - 1] + 1;
      }
      int y = x - k;
      while (x < n && y < m && a[static_cast<std::size_t>(x)] == b[static_cast<std::size_t>(y)]) {
        ++x;
        ++y;
      }
      v[offset + k] = x;
      if (x >= n && y >= m) {
        found_d = d;
        break;
      }
    }
  }
  std::vector<Op> ops;
  int x = n, y = m;
  for (int d = found_d; d > 0; --d) {
    const auto& pv = trace[static_cast<std::size_t>(d)];
    int k = x - y;
    int prev_k = (k == -d || (k != d && pv[offset + k - 1] < pv[offset + k + 1])) ? k + 1 : k - 1;
    int prev_x = pv[offset + prev_k];
    int prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      ops.push_back(Op::keep);
      --x;
      --y;
    }
    ops.push_back(x == prev_x ? Op::ins : Op::del);
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    ops.push_back(Op::keep);
    --x;
    --y;
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

std::string range(int start, int count) {
  // unified format: empty ranges report the line before
  if (count == 0) return std::to_string(start) + ",0";
  if (count == 1) return std::to_string(start + 1);
  return std::to_string(start + 1) + "," + std::to_string(count);
}

}  // namespace

std::string unified_diff(const std::string& before, const std::string& after, const std::string& from_label,
                         const std::string& to_label, int context) {
  if (before == after) return {};
  auto a = split_lines(before);
  auto b = split_lines(after);
  auto ops = edit_script(a, b);

  struct Line {
    Op op;
    int ai, bi;
  };
  std::vector<Line> lines;
  int ai = 0, bi = 0;
  for (auto op : ops) {
    lines.push_back({op, ai, bi});
    if (op != Op::ins) ++ai;
    if (op != Op::del) ++bi;
  }

  std::ostringstream os;
  os << "--- " << from_label << "\n+++ " << to_label << "\n";
  std::size_t i = 0;
  const auto total = lines.size();
  while (i < total) {
    while (i < total && lines[i].op == Op::keep) ++i;
    if (i >= total) break;
    std::size_t start = i >= static_cast<std::size_t>(context) ? i - static_cast<std::size_t>(context) : 0;
    std::size_t end = i;
    // extend while the next change is within 2*context lines
    while (true) {
      std::size_t j = end;
      while (j < total && lines[j].op != Op::keep) ++j;
      std::size_t k = j;
      while (k < total && lines[k].op == Op::keep && k - j < static_cast<std::size_t>(2 * context)) ++k;
      if (k < total && lines[k].op != Op::keep) {
        end = k;
        continue;
      }
      end = std::min(total, j + static_cast<std::size_t>(context));
      break;
    }
    int a_start = lines[start].ai, b_start = lines[start].bi, a_count = 0, b_count = 0;
    for (std::size_t t = start; t < end; ++t) {
      if (lines[t].op != Op::ins) ++a_count;
      if (lines[t].op != Op::del) ++b_count;
    }
    os << "@@ -" << range(a_start, a_count) << " +" << range(b_start, b_count) << " @@\n";
    for (std::size_t t = start; t < end; ++t) {
      switch (lines[t].op) {
        case Op::keep: os << ' ' << a[static_cast<std::size_t>(lines[t].ai)] << "\n"; break;
        case Op::del: os << '-' << a[static_cast<std::size_t>(lines[t].ai)] << "\n"; break;
        case Op::ins: os << '+' << b[static_cast<std::size_t>(lines[t].bi)] << "\n"; break;
      }
    }
    i = end;
  }
  return os.str();
}

ToolResult write_code(const fs::path& workspace, const std::string& relative, const std::string& content) {
  auto target = resolve_in_workspace(workspace, relative);
  auto rel = target.lexically_relative(fs::weakly_canonical(workspace)).generic_string();
  ToolResult result;
  result.tool_name = "write_code";
  std::string before;
  bool existed = fs::exists(target);
  if (existed) {
    if (fs::is_directory(target)) throw IoFailure("'" + rel + "' is a directory");
    auto perms = fs::status(target).permissions();
    if ((perms & fs::perms::owner_write) == fs::perms::none) {
      throw IoFailure("'" + rel + "' is read-only (user input) and cannot be overwritten");
    }
    before = read_file(target);
  }
  write_file_atomic(target, content);
  result.artifacts.push_back(rel);
  result.metadata["path"] = rel;
  result.metadata["created"] = !existed;
  result.metadata["bytes"] = content.size();
  result.metadata["diff"] = existed ? unified_diff(before, content, "a/" + rel, "b/" + rel) : std::string();
  result.reply = (existed ? "Updated " : "Wrote ") + rel + " (" + std::to_string(content.size()) + " bytes)";
  return result;
}

}  // namespace sciagent
