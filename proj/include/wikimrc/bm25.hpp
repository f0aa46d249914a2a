#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wikimrc/text.hpp"

namespace wikimrc {

// Okapi BM25 over lower-cased word tokens of a fixed document collection.
// idf(t) = ln(1 + (n - df + 0.5) / (df + 0.5)), which is never negative.
class Bm25 {
 public:
  explicit Bm25(std::span<const std::vector<std::string>> docs, double k1 = 1.2, double b = 0.75)
      : k1_(k1), b_(b) {
    tf_.reserve(docs.size());
    double total = 0;
    for (const auto& d : docs) {
      std::unordered_map<std::string, double> tf;
      for (const auto& w : d) tf[text::to_lower(w)] += 1;
      for (const auto& [w, _] : tf) df_[w] += 1;
      tf_.push_back(std::move(tf));
      lengths_.push_back(static_cast<double>(d.size()));
      total += static_cast<double>(d.size());
    }
    avgdl_ = docs.empty() ? 0.0 : total / static_cast<double>(docs.size());
  }

  double idf(const std::string& term) const {
    auto it = df_.find(term);
    double df = it == df_.end() ? 0.0 : it->second;
    double n = static_cast<double>(tf_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  }

  // Repeated query terms count once.
  double score(std::span<const std::string> query, std::size_t doc) const {
    std::unordered_set<std::string> seen;
    double s = 0;
    const auto& tf = tf_[doc];
    double norm = avgdl_ > 0 ? lengths_[doc] / avgdl_ : 0.0;
    for (const auto& q : query) {
      std::string t = text::to_lower(q);
      if (!seen.insert(t).second) continue;
      auto it = tf.find(t);
      if (it == tf.end()) continue;
      double f = it->second;
      s += idf(t) * f * (k1_ + 1) / (f + k1_ * (1 - b_ + b_ * norm));
    }
    return s;
  }

  std::size_t size() const { return tf_.size(); }

 private:
  double k1_, b_;
  double avgdl_ = 0;
  std::vector<std::unordered_map<std::string, double>> tf_;
  std::vector<double> lengths_;
  std::unordered_map<std::string, double> df_;
};

}  // namespace wikimrc
