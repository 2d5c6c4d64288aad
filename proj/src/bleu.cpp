#include <cmath>
#include <map>
#include <stdexcept>

#include "goe/metrics.hpp"
#include "goe/text.hpp"

namespace goe {

namespace {

constexpr int kMaxOrder = 4;

// Keys join tokens with U+001F, which 13a tokens never contain.
std::map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& toks, int n) {
  std::map<std::string, std::size_t> counts;
  if (toks.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += toks[i + static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

std::string rstrip(const std::string& s) {
  std::size_t e = s.size();
  while (e > 0 && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' || s[e - 1] == '\r' ||
                   s[e - 1] == '\f' || s[e - 1] == '\v'))
    --e;
  return s.substr(0, e);
}

}  // namespace

BleuScore bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
  if (hyps.size() != refs.size()) throw std::invalid_argument("BLEU: hypothesis and reference counts differ");
  if (hyps.empty()) throw std::invalid_argument("BLEU: empty corpus");

  std::size_t correct[kMaxOrder] = {};
  std::size_t total[kMaxOrder] = {};
  std::size_t sys_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    const auto h = text::tokenize_13a(rstrip(hyps[s]));
    const auto r = text::tokenize_13a(rstrip(refs[s]));
    sys_len += h.size();
    ref_len += r.size();
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto hc = ngram_counts(h, n);
      const auto rc = ngram_counts(r, n);
      for (const auto& [gram, cnt] : hc) {
        total[n - 1] += cnt;
        if (auto it = rc.find(gram); it != rc.end()) correct[n - 1] += std::min(cnt, it->second);
      }
    }
  }

  BleuScore out;
  out.hyp_len = sys_len;
  out.ref_len = ref_len;
  out.brevity_penalty = 1.0;
  if (sys_len < ref_len)
    out.brevity_penalty = sys_len > 0 ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(sys_len)) : 0.0;
  out.ngram_precisions.assign(kMaxOrder, 0.0);

  bool any_correct = false;
  for (auto c : correct) any_correct = any_correct || c > 0;
  if (!any_correct) return out;

  double smooth = 1.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (total[n] == 0) break;
    if (correct[n] == 0) {
      smooth *= 2.0;
      out.ngram_precisions[n] = 100.0 / (smooth * static_cast<double>(total[n]));
    } else {
      out.ngram_precisions[n] = 100.0 * static_cast<double>(correct[n]) / static_cast<double>(total[n]);
    }
  }
  // A zero precision (no n-grams of that order at all) drives the geometric
  // mean to zero, as in the reference implementation.
  double log_sum = 0.0;
  for (double p : out.ngram_precisions) {
    if (p <= 0.0) return out;
    log_sum += std::log(p);
  }
  out.score = out.brevity_penalty * std::exp(log_sum / kMaxOrder);
  return out;
}

}  // namespace goe
