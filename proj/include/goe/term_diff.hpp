#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "goe/corpus.hpp"

namespace goe {

/// One aligned span pair of a token-level diff.
struct DiffOp {
  enum class Kind { Equal, Replace, Insert, Delete } kind;
  std::vector<std::string> left;
  std::vector<std::string> right;
};

/// LCS alignment over diff tokens. Ties between skipping a left or right token
/// are broken on token values, never on argument position, so
/// diff(a, b) is the mirror image of diff(b, a).
std::vector<DiffOp> token_diff(const std::vector<std::string>& left, const std::vector<std::string>& right);

/// Gendered term pairs between the masculine and feminine references.
/// correct = masculine side; swap the arguments to build the feminine list.
/// Inside a replaced region tokens pair positionally; surplus tokens on the
/// longer side are insertions/deletions and yield no pair.
std::vector<GenderedTermPair> extract_gender_terms_by_diff(std::string_view ref_m, std::string_view ref_f);

}  // namespace goe
