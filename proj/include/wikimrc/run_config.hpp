#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "wikimrc/corpus.hpp"
#include "wikimrc/demo_train.hpp"
#include "wikimrc/errors.hpp"

namespace wikimrc {

// Everything a subcommand can be told. A JSON file may set any subset of
// the keys below; command-line flags override it.
struct RunConfig {
  // io
  std::string dump;
  std::string in;
  std::string out;
  std::string aliases;
  std::string vectors;
  std::string templates;
  std::string pred;
  std::string gold;
  std::string report;
  std::string review_sheet;
  std::string kind;

  std::size_t threads = 1;
  std::string log_level = "info";
  bool strict = false;
  std::uint64_t seed = 0;

  // corpus builder
  std::size_t window = 2;
  std::size_t query_sentences = 1;
  std::size_t min_query_words = 30;
  std::size_t n_ans = 10;
  std::size_t n_unans = 10;
  std::size_t inlink_min = 10;
  double anonymize_threshold = 0.5;
  std::string strategy = "random";
  std::size_t p = 0;
  std::optional<std::size_t> dev_entities;  // unset: subcommand default
  bool exclude_title_matches = true;

  // demo-train
  std::size_t examples = 50;
  std::size_t unanswerable = 20;
  std::size_t steps = 2000;
  double learning_rate = 0.08;
  std::size_t dim = 32;
  std::size_t hidden = 32;
  double target_loss = 0.05;
  std::size_t log_every = 100;

  // selftest
  std::size_t gradient_cases = 100;
  std::size_t mask_cases = 1000;
  std::size_t decode_cases = 500;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  corpus::BuilderConfig builder() const {
    corpus::BuilderConfig c;
    c.window = window;
    c.query_sentences = query_sentences;
    c.query_min_words = min_query_words;
    c.answerable_per_entity = n_ans;
    c.unanswerable_per_entity = n_unans;
    c.inlink_threshold = inlink_min;
    c.anonymize_threshold = anonymize_threshold;
    c.strategy.kind = corpus::parse_strategy(strategy);
    c.strategy.p = p;
    c.dev_definition_articles = dev_entities.value_or(0);
    c.seed = seed;
    c.exclude_title_matches = exclude_title_matches;
    return c;
  }

  demo::DemoConfig demo() const {
    demo::DemoConfig d;
    d.examples = examples;
    d.unanswerable = unanswerable;
    d.steps = steps;
    d.learning_rate = learning_rate;
    d.dim = dim;
    d.hidden = hidden;
    d.seed = seed;
    d.target_loss = target_loss;
    d.log_every = log_every;
    return d;
  }
};

#define WIKIMRC_CONFIG_FIELDS(X)                                                                                     \
  X(dump) X(in) X(out) X(aliases) X(vectors) X(templates) X(pred) X(gold) X(report) X(review_sheet) X(kind)        \
  X(threads) X(log_level) X(strict) X(seed) X(window) X(query_sentences) X(min_query_words) X(n_ans) X(n_unans)    \
  X(inlink_min) X(anonymize_threshold) X(strategy) X(p) X(exclude_title_matches) X(examples) X(unanswerable)      \
  X(steps) X(learning_rate) X(dim) X(hidden) X(target_loss) X(log_every) X(gradient_cases) X(mask_cases)          \
  X(decode_cases)

inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
#define X(f) j[#f] = c.f;
  WIKIMRC_CONFIG_FIELDS(X)
#undef X
  j["dev_entities"] = c.dev_entities ? nlohmann::ordered_json(*c.dev_entities) : nlohmann::ordered_json(nullptr);
  return j;
}

// Applies the keys present in `j` on top of `base`. Unknown keys and
// mistyped values are input errors.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw InputError("config file must hold a JSON object");
  static const std::set<std::string> known = {
#define X(f) #f,
      WIKIMRC_CONFIG_FIELDS(X)
#undef X
          "dev_entities"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw InputError("unknown config key: " + k);
  }
  try {
#define X(f) \
  if (j.contains(#f)) j.at(#f).get_to(base.f);
    WIKIMRC_CONFIG_FIELDS(X)
#undef X
    if (j.contains("dev_entities")) {
      if (j.at("dev_entities").is_null()) base.dev_entities.reset();
      else base.dev_entities = j.at("dev_entities").get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config file: ") + e.what());
  }
  return base;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file " + path);
  try {
    return config_from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("config file " + path + ": " + e.what());
  }
}

}  // namespace wikimrc
