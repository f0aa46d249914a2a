#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wikimrc/errors.hpp"
#include "wikimrc/task_adapters.hpp"
#include "wikimrc/text.hpp"

namespace wikimrc::metrics {

// ---------------------------------------------------------------------------
// EQA: official SQuAD normalization
//   lower -> drop ASCII punctuation -> drop a/an/the -> squeeze whitespace

inline std::string normalize_answer(std::string_view s) {
  std::string lower = text::to_lower(s);
  std::string no_punct;
  no_punct.reserve(lower.size());
  for (char c : lower) {
    if (!text::is_ascii_punct(c)) no_punct.push_back(c);
  }
  std::vector<std::string> kept;
  for (auto& w : text::split_whitespace(no_punct)) {
    if (w != "a" && w != "an" && w != "the") kept.push_back(std::move(w));
  }
  return text::join(kept);
}

inline std::vector<std::string> answer_tokens(std::string_view s) { return text::split_whitespace(normalize_answer(s)); }

struct EqaScore {
  double f1 = 0.0;
  double em = 0.0;
};

inline double token_f1(std::string_view pred, std::string_view gold) {
  auto p = answer_tokens(pred), g = answer_tokens(gold);
  if (p.empty() || g.empty()) return p == g ? 1.0 : 0.0;
  std::map<std::string, long> counts;
  for (const auto& t : g) ++counts[t];
  long same = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return 0.0;
  double precision = static_cast<double>(same) / static_cast<double>(p.size());
  double recall = static_cast<double>(same) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

inline double exact_match(std::string_view pred, std::string_view gold) {
  return normalize_answer(pred) == normalize_answer(gold) ? 1.0 : 0.0;
}

// Max over golds; needs at least one gold.
inline EqaScore eqa_score(std::string_view pred, std::span<const std::string> golds) {
  if (golds.empty()) throw InputError("eqa_score: at least one gold answer is required");
  EqaScore s;
  for (const auto& g : golds) {
    s.f1 = std::max(s.f1, token_f1(pred, g));
    s.em = std::max(s.em, exact_match(pred, g));
  }
  return s;
}

// ---------------------------------------------------------------------------
// NER: exact (span, label) micro P/R/F1. Zero denominators give 0.

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct NerCounts {
  std::size_t true_positive = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  NerCounts& operator+=(const NerCounts& o) {
    true_positive += o.true_positive;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }

  Prf prf() const {
    Prf r;
    r.precision = predicted ? static_cast<double>(true_positive) / static_cast<double>(predicted) : 0.0;
    r.recall = gold ? static_cast<double>(true_positive) / static_cast<double>(gold) : 0.0;
    r.f1 = (r.precision + r.recall) > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
  }
};

inline NerCounts ner_counts(std::span<const tasks::Entity> pred, std::span<const tasks::Entity> gold) {
  std::set<tasks::Entity> p(pred.begin(), pred.end()), g(gold.begin(), gold.end());
  NerCounts c{0, p.size(), g.size()};
  for (const auto& e : p) c.true_positive += g.count(e);
  return c;
}

inline Prf ner_score(std::span<const tasks::Entity> pred, std::span<const tasks::Entity> gold) {
  return ner_counts(pred, gold).prf();
}

// ---------------------------------------------------------------------------
// Classification accuracy

inline double cls_score(std::span<const std::string> preds, std::span<const std::string> golds) {
  if (preds.size() != golds.size()) throw InputError("cls_score: prediction and gold counts differ");
  if (golds.empty()) throw InputError("cls_score: no instances");
  std::size_t right = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) right += preds[i] == golds[i];
  return static_cast<double>(right) / static_cast<double>(golds.size());
}

// ---------------------------------------------------------------------------
// Rationales: the tool never judges; it prepares a review sheet or divides
// human judgments.

struct Rationale {
  std::string id;
  std::vector<std::string> tokens;  // input text
  std::size_t start = 0;            // inclusive token span
  std::size_t end = 0;
  std::string label;
};

struct RationaleReport {
  std::vector<nlohmann::ordered_json> sheet;
  std::optional<double> fraction;
  std::size_t reasonable = 0;
  std::size_t total = 0;
};

inline std::string highlight(const Rationale& r) {
  std::string out;
  for (std::size_t k = 0; k < r.tokens.size(); ++k) {
    if (k) out.push_back(' ');
    if (k == r.start) out += "[[";
    out += r.tokens[k];
    if (k == r.end) out += "]]";
  }
  return out;
}

inline RationaleReport rationale_report(std::span<const Rationale> rationales,
                                        const std::optional<std::map<std::string, bool>>& annotations = std::nullopt) {
  RationaleReport rep;
  rep.total = rationales.size();
  std::set<std::string> ids;
  for (const auto& r : rationales) {
    if (r.start > r.end || r.end >= r.tokens.size()) throw InputError("rationale " + r.id + ": span outside its text");
    if (!ids.insert(r.id).second) throw InputError("duplicate rationale id " + r.id);
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["label"] = r.label;
    j["text"] = text::join(r.tokens);
    j["start"] = r.start;
    j["end"] = r.end;
    j["rationale"] = slice_text(r.tokens, r.start, r.end);
    j["highlighted"] = highlight(r);
    j["reasonable"] = nullptr;
    rep.sheet.push_back(std::move(j));
  }
  if (!annotations || annotations->empty()) return rep;
  for (const auto& [id, ok] : *annotations) {
    if (!ids.count(id)) throw InputError("annotation " + id + " has no matching rationale");
  }
  for (const auto& id : ids) {
    if (!annotations->count(id)) throw InputError("rationale " + id + " has no annotation");
  }
  for (auto& j : rep.sheet) {
    bool ok = annotations->at(j["id"].get<std::string>());
    j["reasonable"] = ok;
    rep.reasonable += ok;
  }
  rep.fraction = rep.total ? static_cast<double>(rep.reasonable) / static_cast<double>(rep.total) : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------

struct EvalReport {
  std::string task_kind;
  std::vector<std::pair<std::string, double>> metrics;  // in [0, 1]
  std::vector<std::pair<std::string, std::size_t>> counts;
  std::vector<nlohmann::ordered_json> records;

  void set(const std::string& name, double v) { metrics.emplace_back(name, v); }
  std::optional<double> get(std::string_view name) const {
    for (const auto& [k, v] : metrics)
      if (k == name) return v;
    return std::nullopt;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = task_kind;
    nlohmann::ordered_json m = nlohmann::ordered_json::object(), d = nlohmann::ordered_json::object();
    for (const auto& [k, v] : metrics) {
      m[k] = v;
      d[k] = std::round(v * 10000.0) / 100.0;
    }
    j["metrics"] = m;
    j["display"] = d;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [k, v] : counts) c[k] = v;
    j["counts"] = c;
    j["records"] = records;
    return j;
  }
};

}  // namespace wikimrc::metrics
