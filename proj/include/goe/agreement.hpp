#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "goe/corpus.hpp"
#include "goe/postprocess.hpp"

namespace goe {

/// One line of a judgment log. Written by the LGE judge, the coverage-based
/// pseudo-rater and the annotation service.
struct JudgmentRecord {
  std::string item;  // "<sample_id>#<mapping key>"
  std::string sample_id;
  GenderMapping mapping;
  std::string rater;
  std::optional<VerdictLabel> label;  // absent when parse_failed
  std::string comment;
  bool parse_failed = false;
  nlohmann::json aspects = nlohmann::json::object();
  int revision = 0;  // >0 marks a resubmission superseding earlier lines

  bool operator==(const JudgmentRecord&) const = default;
};

std::string item_id(std::string_view sample_id, const GenderMapping& mapping);

nlohmann::ordered_json to_json(const JudgmentRecord& r);
JudgmentRecord judgment_from_json(const nlohmann::json& j);
std::vector<JudgmentRecord> read_judgment_log(const std::filesystem::path& path);
void write_judgment_log(const std::filesystem::path& path, const std::vector<JudgmentRecord>& records);

class AgreementError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using RaterLabels = std::map<std::string, VerdictLabel>;  // item -> label

/// item x rater labels; missing entries allowed.
class JudgmentMatrix {
 public:
  void set(const std::string& item, const std::string& rater, VerdictLabel label);
  std::optional<VerdictLabel> get(const std::string& item, const std::string& rater) const;

  /// Later lines win for the same (item, rater); parse failures are skipped.
  static JudgmentMatrix from_log(const std::vector<JudgmentRecord>& records);

  const std::vector<std::string>& items() const { return items_; }
  const std::vector<std::string>& raters() const { return raters_; }
  RaterLabels labels_of(const std::string& rater) const;

  bool operator==(const JudgmentMatrix&) const = default;

 private:
  std::vector<std::string> items_;
  std::vector<std::string> raters_;
  std::map<std::pair<std::string, std::string>, VerdictLabel> labels_;
};

/// Fraction of jointly labeled items with equal labels.
double percent_agreement(const RaterLabels& a, const RaterLabels& b);

/// (P_o - P_e) / (1 - P_e) with marginal-product P_e; nullopt when P_e = 1.
std::optional<double> cohen_kappa(const RaterLabels& a, const RaterLabels& b);

struct AgreementReport {
  double percent = 0.0;
  std::optional<double> kappa;
  std::size_t n_items = 0;
  std::size_t dropped = 0;  // items labeled by only one of the two raters
};

AgreementReport pairwise_agreement(const RaterLabels& a, const RaterLabels& b);

struct FleissResult {
  std::optional<double> kappa;
  std::size_t n_items = 0;
  std::size_t dropped = 0;
};

/// Over items labeled by every selected rater.
FleissResult fleiss_kappa(const JudgmentMatrix& matrix, const std::vector<std::string>& raters);

struct MajorityResult {
  std::map<std::string, VerdictLabel> labels;
  std::size_t unanimous = 0;
  std::size_t dropped = 0;
};

/// Odd number of raters; items missing any selected rater are dropped.
MajorityResult majority_vote(const JudgmentMatrix& matrix, const std::vector<std::string>& raters);

}  // namespace goe
