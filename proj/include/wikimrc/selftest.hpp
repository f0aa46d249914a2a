#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "wikimrc/random.hpp"
#include "wikimrc/wae_head.hpp"

namespace wikimrc::selftest {

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // suite-specific: max relative error, or 0
  double seconds = 0.0;
  std::string detail;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["suite"] = name;
    j["pass"] = pass;
    j["cases"] = cases;
    j["failures"] = failures;
    j["worst"] = worst;
    j["seconds"] = seconds;
    if (!detail.empty()) j["detail"] = detail;
    return j;
  }
};

// A random head instance: sequence of length m with a query of q tokens.
template <typename T>
struct Instance {
  head::SpanRegion region;
  head::Matrix<T> hidden;
  head::FfnParams<T> params;
  head::TargetMatrix targets;
  head::LossOptions opts;
};

template <typename T>
Instance<T> random_instance(Rng& rng, std::size_t max_m, std::size_t max_d) {
  Instance<T> in;
  const std::size_t m = 5 + rng.below(max_m - 4);     // [5, max_m]
  const std::size_t q = 1 + rng.below(m - 4);         // context keeps >= 1 token
  in.region = head::SpanRegion{q + 1, m};
  const std::size_t d = 1 + rng.below(max_d);
  in.hidden.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (Eigen::Index k = 0; k < in.hidden.size(); ++k) in.hidden.data()[k] = static_cast<T>(rng.uniform(-1.0, 1.0));
  in.params = head::FfnParams<T>::random(d, d, rng.next(), 0.8);
  in.targets.y_cls = rng.below(2) == 1;
  for (std::size_t i = in.region.context_begin(); i + 2 <= m; ++i)
    for (std::size_t j = i; j + 2 <= m; ++j)
      if (rng.below(4) == 0) in.targets.ext_positives.emplace_back(i, j);
  in.opts.ext_weight = rng.uniform(0.5, 2.0);
  in.opts.average_ext = rng.below(2) == 1;
  return in;
}

// Analytic gradients against central differences, both in extended
// precision. Relative error: |a - n| / max(|a|, |n|, floor).
inline SuiteResult gradient_suite(std::size_t n, std::uint64_t seed, double h = 1e-5, double tol = 1e-4,
                                  double floor = 1e-6) {
  using T = long double;
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r{"gradient", false, n, 0, 0.0, 0.0, {}};
  Rng rng(derive_seed(seed, "selftest-gradient"));
  for (std::size_t c = 0; c < n; ++c) {
    auto in = random_instance<T>(rng, 10, 4);
    auto loss = [&](const head::Matrix<T>& hid, const head::FfnParams<T>& p) {
      return head::loss_wae(head::score_matrix(hid, p), in.targets, in.region, in.opts);
    };
    const auto g = head::gradients(in.hidden, in.params, in.targets, in.region, in.opts);
    double worst = 0.0;
    auto check = [&](T analytic, T numeric) {
      double a = static_cast<double>(analytic), nm = static_cast<double>(numeric);
      double rel = std::abs(a - nm) / std::max({std::abs(a), std::abs(nm), floor});
      worst = std::max(worst, rel);
    };
    const T hh = static_cast<T>(h);
    for (Eigen::Index k = 0; k < in.hidden.size(); ++k) {
      auto plus = in.hidden, minus = in.hidden;
      plus.data()[k] += hh;
      minus.data()[k] -= hh;
      check(g.d_hidden.data()[k], (loss(plus, in.params) - loss(minus, in.params)) / (2 * hh));
    }
    for (std::size_t k = 0; k < in.params.size(); ++k) {
      auto plus = in.params, minus = in.params;
      plus.at(k) += hh;
      minus.at(k) -= hh;
      check(g.d_params.at(k), (loss(in.hidden, plus) - loss(in.hidden, minus)) / (2 * hh));
    }
    r.worst = std::max(r.worst, worst);
    if (!(worst < tol)) ++r.failures;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = r.failures == 0;
  return r;
}

// L_wae == L_cls + L_ext bit-for-bit, and illegal cells never reach L_ext
// or the decoder.
inline SuiteResult mask_suite(std::size_t n, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r{"mask", false, n, 0, 0.0, 0.0, {}};
  Rng rng(derive_seed(seed, "selftest-mask"));
  for (std::size_t c = 0; c < n; ++c) {
    auto in = random_instance<double>(rng, 12, 4);
    auto s = head::score_matrix(in.hidden, in.params);
    const double lc = head::loss_cls(s, in.targets.y_cls);
    const double le = head::loss_ext(s, in.targets, in.region, in.opts);
    bool ok = head::loss_wae(s, in.targets, in.region, in.opts) == lc + le;
    const head::DecodeOptions flat{head::DecodeMode::Multi, 0.5, head::Overlap::Flat};
    const head::DecodeOptions nested{head::DecodeMode::Multi, 0.5, head::Overlap::Nested};
    const auto d1 = head::decode_spans(s, in.region, flat), d2 = head::decode_spans(s, in.region, nested);
    // pick an illegal cell
    const std::size_t m = in.region.length;
    std::size_t i, j;
    do {
      i = rng.below(m);
      j = rng.below(m);
    } while (in.region.legal(i, j));
    s.logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.uniform(-20.0, 20.0);
    ok = ok && head::loss_ext(s, in.targets, in.region, in.opts) == le;
    ok = ok && head::decode_spans(s, in.region, flat) == d1 && head::decode_spans(s, in.region, nested) == d2;
    if (!ok) ++r.failures;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = r.failures == 0;
  return r;
}

// decode_spans against exhaustive enumeration of the grid.
inline SuiteResult decode_suite(std::size_t n, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r{"decode", false, n, 0, 0.0, 0.0, {}};
  Rng rng(derive_seed(seed, "selftest-decode"));
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t m = 5 + rng.below(8);
    const std::size_t q = 1 + rng.below(m - 4);
    const head::SpanRegion region{q + 1, m};
    head::Matrix<double> p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = 0.02 + 0.96 * rng.uniform();
    const auto s = head::ScoreMatrix<double>::from_probabilities(p);
    const double th = rng.uniform(0.2, 0.8);

    // enumerate every cell of the grid; keep context-interior spans above th
    std::vector<head::SpanScore> cand;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        bool inside = i > q + 1 && j < m - 1 && i <= j;
        if (inside && s.prob(i, j) > th) cand.push_back({i - q - 2, j - q - 2, s.prob(i, j)});
      }
    auto by_pos = [](const head::SpanScore& a, const head::SpanScore& b) {
      return std::tie(a.start, a.end) < std::tie(b.start, b.end);
    };
    auto nested = cand;
    std::sort(nested.begin(), nested.end(), by_pos);
    // flat: repeatedly take the best remaining candidate, then drop overlaps
    std::vector<head::SpanScore> flat, rest = cand;
    while (!rest.empty()) {
      auto best = rest.begin();
      for (auto it = rest.begin(); it != rest.end(); ++it) {
        if (std::make_tuple(-it->score, it->start, it->end) < std::make_tuple(-best->score, best->start, best->end))
          best = it;
      }
      const auto b = *best;
      flat.push_back(b);
      rest.erase(std::remove_if(rest.begin(), rest.end(),
                                [&](const head::SpanScore& x) { return !(x.end < b.start || b.end < x.start); }),
                 rest.end());
    }
    std::sort(flat.begin(), flat.end(), by_pos);

    bool ok = head::decode_spans(s, region, {head::DecodeMode::Multi, th, head::Overlap::Nested}) == nested &&
              head::decode_spans(s, region, {head::DecodeMode::Multi, th, head::Overlap::Flat}) == flat;
    if (!ok) ++r.failures;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = r.failures == 0;
  return r;
}

struct Report {
  std::vector<SuiteResult> suites;
  bool pass() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.pass; });
  }
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["pass"] = pass();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : suites) arr.push_back(s.to_json());
    j["suites"] = arr;
    return j;
  }
};

inline Report run_all(std::uint64_t seed, std::size_t gradient_cases = 100, std::size_t mask_cases = 1000,
                      std::size_t decode_cases = 500) {
  Report r;
  r.suites.push_back(gradient_suite(gradient_cases, seed));
  r.suites.push_back(mask_suite(mask_cases, seed));
  r.suites.push_back(decode_suite(decode_cases, seed));
  return r;
}

}  // namespace wikimrc::selftest
