#include "goe/postprocess.hpp"

#include <array>
#include <utility>
#include <vector>

#include "goe/text.hpp"

namespace goe {

namespace {

constexpr std::array<std::string_view, 4> kFilterTokens = {"gender", "translat", "sentence", "note"};

constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kQuotePairs = {{
    {"\"", "\""},
    {"'", "'"},
    {"«", "»"},
    {"“", "”"},
}};

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string ascii_upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  return out;
}

bool has_filter_token(std::string_view line) {
  const std::string lower = ascii_lower(line);
  for (auto tok : kFilterTokens)
    if (lower.find(tok) != std::string::npos) return true;
  return false;
}

std::vector<std::string> lines_of(std::string_view raw) {
  auto lines = text::split(raw, '\n');
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  return lines;
}

}  // namespace

std::string strip_wrapping_quotes(std::string_view s) {
  std::string cur = text::trim(s);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [open, close] : kQuotePairs) {
      if (cur.size() >= open.size() + close.size() && cur.starts_with(open) && cur.ends_with(close)) {
        cur = text::trim(std::string_view(cur).substr(open.size(), cur.size() - open.size() - close.size()));
        changed = true;
        break;
      }
    }
  }
  return cur;
}

Extraction extract_translation(std::string_view raw) {
  for (const auto& line : lines_of(raw)) {
    if (text::is_blank(line) || has_filter_token(line)) continue;
    std::string out = strip_wrapping_quotes(line);
    // A line that is only quotes collapses to nothing; keep looking.
    if (out.empty()) continue;
    return {std::move(out), false};
  }
  return {text::trim(raw), true};
}

Extraction extract_igoe_translation(std::string_view raw) {
  static constexpr std::string_view kMarker = "inflection is:";
  const std::string lower = ascii_lower(raw);
  const auto pos = lower.rfind(kMarker);
  if (pos != std::string::npos) {
    const std::string_view rest = raw.substr(pos + kMarker.size());
    for (const auto& line : lines_of(rest)) {
      if (text::is_blank(line)) continue;
      std::string out = strip_wrapping_quotes(line);
      if (!out.empty()) return {std::move(out), false};
    }
  }
  return extract_translation(raw);
}

std::string_view to_string(VerdictLabel l) { return l == VerdictLabel::Accurate ? "ACCURATE" : "INACCURATE"; }

VerdictLabel verdict_label_from_string(std::string_view s) {
  const std::string up = ascii_upper(s);
  if (up == "ACCURATE") return VerdictLabel::Accurate;
  if (up == "INACCURATE") return VerdictLabel::Inaccurate;
  throw VerdictParseError("unknown verdict label '" + std::string(s) + "'");
}

Verdict extract_lge_verdict(std::string_view raw) {
  static constexpr std::string_view kVerdictMarker = "gender accuracy:";
  static constexpr std::string_view kCommentMarker = "comment:";

  const auto lines = lines_of(raw);
  std::size_t verdict_line = lines.size();
  std::size_t marker_at = 0;
  for (std::size_t i = lines.size(); i-- > 0;) {
    const auto p = ascii_lower(lines[i]).find(kVerdictMarker);
    if (p != std::string::npos) {
      verdict_line = i;
      marker_at = p;
      break;
    }
  }
  if (verdict_line == lines.size()) throw VerdictParseError("no 'Gender Accuracy:' line");

  const std::string tail = ascii_upper(std::string_view(lines[verdict_line]).substr(marker_at + kVerdictMarker.size()));
  Verdict v;
  // INACCURATE contains ACCURATE, so it must be tested first.
  if (tail.find("INACCURATE") != std::string::npos)
    v.label = VerdictLabel::Inaccurate;
  else if (tail.find("ACCURATE") != std::string::npos)
    v.label = VerdictLabel::Accurate;
  else
    throw VerdictParseError("'Gender Accuracy:' line has neither ACCURATE nor INACCURATE");

  for (std::size_t i = 0; i <= verdict_line; ++i) {
    const auto p = ascii_lower(lines[i]).find(kCommentMarker);
    if (p == std::string::npos) continue;
    std::string comment = lines[i].substr(p + kCommentMarker.size());
    const std::size_t last = i == verdict_line ? i : verdict_line;
    if (i == verdict_line) comment = comment.substr(0, ascii_lower(comment).find(kVerdictMarker));
    for (std::size_t k = i + 1; k < last; ++k) comment += "\n" + lines[k];
    v.comment = text::trim(comment);
    break;
  }
  return v;
}

}  // namespace goe
