#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace goe {

struct Extraction {
  std::string text;
  /// Every line was filtered; `text` is the trimmed raw output.
  bool degraded = false;

  bool operator==(const Extraction&) const = default;
};

/// Line filter for chatty LLM output: drop lines mentioning "gender",
/// "translat", "sentence" or "note" (case-insensitive) and blank lines, keep
/// the first survivor with wrapping quotes removed.
Extraction extract_translation(std::string_view raw);

/// Text after the last "... inflection is:" pretext, else extract_translation.
Extraction extract_igoe_translation(std::string_view raw);

/// Removes matching wrapping quotes ("", '', «», “”) repeatedly, trimming in between.
std::string strip_wrapping_quotes(std::string_view s);

enum class VerdictLabel { Accurate, Inaccurate };
std::string_view to_string(VerdictLabel l);  // "ACCURATE" / "INACCURATE"
VerdictLabel verdict_label_from_string(std::string_view s);

struct Verdict {
  VerdictLabel label;
  std::string comment;

  bool operator==(const Verdict&) const = default;
};

class VerdictParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Verdict extract_lge_verdict(std::string_view raw);

}  // namespace goe
