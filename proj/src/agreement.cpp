#include "goe/agreement.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "goe/corpus_io.hpp"
#include "goe/text.hpp"

namespace goe {

using nlohmann::json;

std::string item_id(std::string_view sample_id, const GenderMapping& mapping) {
  return std::string(sample_id) + "#" + mapping.key();
}

nlohmann::ordered_json to_json(const JudgmentRecord& r) {
  nlohmann::ordered_json j;
  j["item"] = r.item;
  j["sample_id"] = r.sample_id;
  j["mapping"] = to_json(r.mapping);
  std::vector<std::string> entities, genders;
  for (const auto& [s, g] : r.mapping.entries()) {
    entities.push_back(s);
    genders.emplace_back(to_code(g));
  }
  j["entity"] = text::join(entities, "; ");
  j["gender"] = text::join(genders, "");
  j["rater"] = r.rater;
  j["label"] = r.label ? json(std::string(to_string(*r.label))) : json(nullptr);
  j["comment"] = r.comment;
  j["parse_failed"] = r.parse_failed;
  if (!r.aspects.empty()) j["aspects"] = r.aspects;
  if (r.revision) j["revision"] = r.revision;
  return j;
}

JudgmentRecord judgment_from_json(const json& j) {
  JudgmentRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.mapping = mapping_from_json(j.at("mapping"));
  r.item = j.value("item", item_id(r.sample_id, r.mapping));
  r.rater = j.at("rater").get<std::string>();
  if (j.contains("label") && !j.at("label").is_null())
    r.label = verdict_label_from_string(j.at("label").get<std::string>());
  r.comment = j.value("comment", "");
  r.parse_failed = j.value("parse_failed", false);
  if (j.contains("aspects")) r.aspects = j.at("aspects");
  r.revision = j.value("revision", 0);
  if (!r.label && !r.parse_failed) throw AgreementError("judgment without label must set parse_failed");
  return r;
}

std::vector<JudgmentRecord> read_judgment_log(const std::filesystem::path& path) {
  std::vector<JudgmentRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(read_file(path), '\n')) {
    ++line_no;
    if (text::is_blank(line)) continue;
    try {
      out.push_back(judgment_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw AgreementError(path.string() + ":" + std::to_string(line_no) + ": corrupt judgment: " + e.what());
    }
  }
  return out;
}

void write_judgment_log(const std::filesystem::path& path, const std::vector<JudgmentRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void JudgmentMatrix::set(const std::string& item, const std::string& rater, VerdictLabel label) {
  if (std::find(items_.begin(), items_.end(), item) == items_.end()) items_.push_back(item);
  if (std::find(raters_.begin(), raters_.end(), rater) == raters_.end()) raters_.push_back(rater);
  labels_[{item, rater}] = label;
}

std::optional<VerdictLabel> JudgmentMatrix::get(const std::string& item, const std::string& rater) const {
  const auto it = labels_.find({item, rater});
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

JudgmentMatrix JudgmentMatrix::from_log(const std::vector<JudgmentRecord>& records) {
  JudgmentMatrix m;
  for (const auto& r : records)
    if (r.label) m.set(r.item, r.rater, *r.label);
  return m;
}

RaterLabels JudgmentMatrix::labels_of(const std::string& rater) const {
  RaterLabels out;
  for (const auto& [key, label] : labels_)
    if (key.second == rater) out.emplace(key.first, label);
  return out;
}

namespace {

struct PairCounts {
  // [a label][b label], index 0 = Accurate
  std::size_t cell[2][2] = {};
  std::size_t n = 0;
  std::size_t dropped = 0;
};

int idx(VerdictLabel l) { return l == VerdictLabel::Accurate ? 0 : 1; }

PairCounts count_pairs(const RaterLabels& a, const RaterLabels& b) {
  PairCounts c;
  for (const auto& [item, la] : a) {
    const auto it = b.find(item);
    if (it == b.end()) {
      ++c.dropped;
      continue;
    }
    ++c.cell[idx(la)][idx(it->second)];
    ++c.n;
  }
  for (const auto& [item, lb] : b)
    if (!a.contains(item)) ++c.dropped;
  if (c.n == 0) throw AgreementError("raters share no labeled items");
  return c;
}

}  // namespace

double percent_agreement(const RaterLabels& a, const RaterLabels& b) {
  const auto c = count_pairs(a, b);
  return static_cast<double>(c.cell[0][0] + c.cell[1][1]) / static_cast<double>(c.n);
}

std::optional<double> cohen_kappa(const RaterLabels& a, const RaterLabels& b) {
  const auto c = count_pairs(a, b);
  const double n = static_cast<double>(c.n);
  const std::size_t a_acc = c.cell[0][0] + c.cell[0][1];
  const std::size_t b_acc = c.cell[0][0] + c.cell[1][0];
  // P_e = 1 exactly when both raters are constant on the same label.
  if ((a_acc == c.n && b_acc == c.n) || (a_acc == 0 && b_acc == 0)) return std::nullopt;
  const double po = static_cast<double>(c.cell[0][0] + c.cell[1][1]) / n;
  const double pe = (static_cast<double>(a_acc) * static_cast<double>(b_acc) +
                     static_cast<double>(c.n - a_acc) * static_cast<double>(c.n - b_acc)) /
                    (n * n);
  return (po - pe) / (1.0 - pe);
}

AgreementReport pairwise_agreement(const RaterLabels& a, const RaterLabels& b) {
  const auto c = count_pairs(a, b);
  return {percent_agreement(a, b), cohen_kappa(a, b), c.n, c.dropped};
}

FleissResult fleiss_kappa(const JudgmentMatrix& matrix, const std::vector<std::string>& raters) {
  if (raters.size() < 2) throw AgreementError("Fleiss' kappa needs at least two raters");
  FleissResult res;
  std::vector<std::array<std::size_t, 2>> rows;
  for (const auto& item : matrix.items()) {
    std::array<std::size_t, 2> row{0, 0};
    bool complete = true;
    for (const auto& r : raters) {
      const auto l = matrix.get(item, r);
      if (!l) {
        complete = false;
        break;
      }
      ++row[static_cast<std::size_t>(idx(*l))];
    }
    if (complete)
      rows.push_back(row);
    else
      ++res.dropped;
  }
  if (rows.empty()) throw AgreementError("no item is labeled by every selected rater");
  res.n_items = rows.size();

  const double n = static_cast<double>(raters.size());
  const double N = static_cast<double>(rows.size());
  double p_bar = 0.0;
  double col[2] = {0.0, 0.0};
  for (const auto& row : rows) {
    double sq = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      sq += static_cast<double>(row[j] * row[j]);
      col[j] += static_cast<double>(row[j]);
    }
    p_bar += (sq - n) / (n * (n - 1.0));
  }
  p_bar /= N;
  const double p0 = col[0] / (N * n);
  const double p1 = col[1] / (N * n);
  if (col[0] == 0.0 || col[1] == 0.0) return res;  // P_e = 1
  const double pe = p0 * p0 + p1 * p1;
  res.kappa = (p_bar - pe) / (1.0 - pe);
  return res;
}

MajorityResult majority_vote(const JudgmentMatrix& matrix, const std::vector<std::string>& raters) {
  if (raters.empty() || raters.size() % 2 == 0) throw AgreementError("majority vote needs an odd number of raters");
  MajorityResult res;
  for (const auto& item : matrix.items()) {
    std::size_t acc = 0, seen = 0;
    for (const auto& r : raters) {
      const auto l = matrix.get(item, r);
      if (!l) break;
      ++seen;
      if (*l == VerdictLabel::Accurate) ++acc;
    }
    if (seen != raters.size()) {
      ++res.dropped;
      continue;
    }
    res.labels[item] = 2 * acc > raters.size() ? VerdictLabel::Accurate : VerdictLabel::Inaccurate;
    if (acc == 0 || acc == raters.size()) ++res.unanimous;
  }
  return res;
}

}  // namespace goe
