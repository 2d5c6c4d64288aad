#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "goe/corpus.hpp"

namespace goe {

/// Two disjoint sets of lowercase gendered English words.
class GenderWordList {
 public:
  GenderWordList() = default;

  /// `word<TAB>M|F` per line. Blank lines and lines starting with '#' are skipped.
  static GenderWordList parse(std::string_view contents);
  static GenderWordList load(const std::filesystem::path& path);
  static const GenderWordList& builtin();

  void add(std::string word, Gender g);
  std::optional<Gender> lookup(std::string_view lowercase_word) const;
  std::size_t size() const { return masculine_.size() + feminine_.size(); }

 private:
  std::set<std::string, std::less<>> masculine_;
  std::set<std::string, std::less<>> feminine_;
};

/// Masculine iff some token is on the masculine list and none on the feminine
/// list (and symmetrically). Conflicting or missing evidence -> nullopt.
std::optional<Gender> detect_context_gender(std::string_view sentence, const GenderWordList& words);

}  // namespace goe
