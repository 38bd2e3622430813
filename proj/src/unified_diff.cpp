#include "sibfix/unified_diff.hpp"

#include <algorithm>
#include <vector>

namespace sibfix {

namespace {

enum class Op { Equal, Delete, Insert };

// Lines keep their trailing '\n' so a missing final newline is a difference.
std::vector<std::string_view> split_keep(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    lines.push_back(text.substr(start, end - start));
    start = end;
  }
  return lines;
}

std::vector<Op> myers(const std::vector<std::string_view>& a,
                      const std::vector<std::string_view>& b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  const int max = n + m;
  const int offset = max + 1;
  std::vector<int> v(2 * max + 3, 0);
  std::vector<std::vector<int>> trace;
  int final_d = 0;
  for (int d = 0; d <= max; ++d) {
    trace.push_back(v);
    bool done = false;
    for (int k = -d; k <= d; k += 2) {
      int x;
      if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) {
        x = v[offset + k + 1];
      } else {
        x = v[offset + k - 1] + 1;
      }
      int y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[offset + k] = x;
      if (x >= n && y >= m) {
        done = true;
        break;
      }
    }
    if (done) {
      final_d = d;
      break;
    }
  }

  std::vector<Op> ops;
  int x = n;
  int y = m;
  for (int d = final_d; d > 0; --d) {
    const auto& vd = trace[d];
    const int k = x - y;
    int prev_k;
    if (k == -d || (k != d && vd[offset + k - 1] < vd[offset + k + 1])) {
      prev_k = k + 1;
    } else {
      prev_k = k - 1;
    }
    const int prev_x = vd[offset + prev_k];
    const int prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      ops.push_back(Op::Equal);
      --x;
      --y;
    }
    ops.push_back(x == prev_x ? Op::Insert : Op::Delete);
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    ops.push_back(Op::Equal);
    --x;
    --y;
  }
  std::reverse(ops.begin(), ops.end());

  // Within each change run, list deletions before insertions.
  for (std::size_t i = 0; i < ops.size();) {
    if (ops[i] == Op::Equal) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < ops.size() && ops[j] != Op::Equal) ++j;
    std::stable_partition(ops.begin() + i, ops.begin() + j, [](Op o) { return o == Op::Delete; });
    i = j;
  }
  return ops;
}

void emit_line(std::string& out, char prefix, std::string_view line) {
  out.push_back(prefix);
  if (!line.empty() && line.back() == '\n') {
    out.append(line);
  } else {
    out.append(line);
    out += "\n\\ No newline at end of file\n";
  }
}

std::string range(int start, int count) {
  if (count == 1) return std::to_string(start);
  if (count == 0) return std::to_string(start - 1) + ",0";
  return std::to_string(start) + "," + std::to_string(count);
}

}  // namespace

std::string unified_diff(std::string_view old_text, std::string_view new_text,
                         std::string_view old_label, std::string_view new_label, int context) {
  const auto a = split_keep(old_text);
  const auto b = split_keep(new_text);
  const auto ops = myers(a, b);
  if (std::all_of(ops.begin(), ops.end(), [](Op o) { return o == Op::Equal; })) return {};

  // Positions (old index, new index) before each op.
  std::vector<std::pair<int, int>> pos(ops.size() + 1);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    pos[i + 1] = pos[i];
    if (ops[i] != Op::Insert) ++pos[i + 1].first;
    if (ops[i] != Op::Delete) ++pos[i + 1].second;
  }

  std::string out;
  out += "--- " + std::string(old_label) + "\n";
  out += "+++ " + std::string(new_label) + "\n";

  const int total = static_cast<int>(ops.size());
  int i = 0;
  while (i < total) {
    while (i < total && ops[i] == Op::Equal) ++i;
    if (i >= total) break;
    int start = std::max(0, i - context);
    int end = i;
    // Extend over changes separated by at most 2 * context equal lines.
    while (true) {
      while (end < total && ops[end] != Op::Equal) ++end;
      int gap = end;
      while (gap < total && ops[gap] == Op::Equal) ++gap;
      if (gap < total && gap - end <= 2 * context) {
        end = gap;
        continue;
      }
      end = std::min(total, end + context);
      break;
    }
    int old_count = 0;
    int new_count = 0;
    for (int k = start; k < end; ++k) {
      if (ops[k] != Op::Insert) ++old_count;
      if (ops[k] != Op::Delete) ++new_count;
    }
    out += "@@ -" + range(pos[start].first + 1, old_count) + " +" +
           range(pos[start].second + 1, new_count) + " @@\n";
    for (int k = start; k < end; ++k) {
      switch (ops[k]) {
        case Op::Equal:
          emit_line(out, ' ', a[pos[k].first]);
          break;
        case Op::Delete:
          emit_line(out, '-', a[pos[k].first]);
          break;
        case Op::Insert:
          emit_line(out, '+', b[pos[k].second]);
          break;
      }
    }
    i = end;
  }
  return out;
}

}  // namespace sibfix
