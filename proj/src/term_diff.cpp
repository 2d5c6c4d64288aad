#include "goe/term_diff.hpp"

#include <algorithm>

#include "goe/text.hpp"

namespace goe {

std::vector<DiffOp> token_diff(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  // suffix[i][j] = LCS length of a[i..] and b[j..]
  std::vector<std::vector<std::size_t>> suffix(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      suffix[i][j] = a[i] == b[j] ? suffix[i + 1][j + 1] + 1 : std::max(suffix[i + 1][j], suffix[i][j + 1]);

  std::vector<DiffOp> ops;
  auto push = [&](DiffOp::Kind kind, const std::string* l, const std::string* r) {
    if (ops.empty() || ops.back().kind != kind) ops.push_back({kind, {}, {}});
    if (l) ops.back().left.push_back(*l);
    if (r) ops.back().right.push_back(*r);
  };

  std::size_t i = 0, j = 0;
  std::vector<std::string> gap_left, gap_right;
  auto flush_gap = [&]() {
    if (gap_left.empty() && gap_right.empty()) return;
    DiffOp::Kind kind = DiffOp::Kind::Replace;
    if (gap_left.empty()) kind = DiffOp::Kind::Insert;
    if (gap_right.empty()) kind = DiffOp::Kind::Delete;
    ops.push_back({kind, std::move(gap_left), std::move(gap_right)});
    gap_left.clear();
    gap_right.clear();
  };

  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      flush_gap();
      push(DiffOp::Kind::Equal, &a[i], &b[j]);
      ++i;
      ++j;
      continue;
    }
    bool skip_left;
    if (i == n) {
      skip_left = false;
    } else if (j == m) {
      skip_left = true;
    } else if (suffix[i + 1][j] != suffix[i][j + 1]) {
      skip_left = suffix[i + 1][j] > suffix[i][j + 1];
    } else {
      // Symmetric tie-break: drop the lexicographically larger token.
      skip_left = a[i] > b[j];
    }
    if (skip_left)
      gap_left.push_back(a[i++]);
    else
      gap_right.push_back(b[j++]);
  }
  flush_gap();
  return ops;
}

std::vector<GenderedTermPair> extract_gender_terms_by_diff(std::string_view ref_m, std::string_view ref_f) {
  std::vector<GenderedTermPair> out;
  for (const auto& op : token_diff(text::diff_tokens(ref_m), text::diff_tokens(ref_f))) {
    if (op.kind != DiffOp::Kind::Replace) continue;
    const std::size_t k = std::min(op.left.size(), op.right.size());
    for (std::size_t t = 0; t < k; ++t) out.push_back({op.left[t], op.right[t], std::nullopt});
  }
  return out;
}

}  // namespace goe
