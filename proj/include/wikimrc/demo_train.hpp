#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wikimrc/errors.hpp"
#include "wikimrc/mrc_example.hpp"
#include "wikimrc/random.hpp"
#include "wikimrc/wae_head.hpp"

namespace wikimrc::demo {

struct DemoConfig {
  std::size_t examples = 50;
  std::size_t unanswerable = 20;
  std::size_t steps = 2000;
  double learning_rate = 0.08;
  std::size_t dim = 32;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;
  double target_loss = 0.05;
  std::size_t log_every = 100;
  bool export_scores = false;

  void validate() const {
    if (examples == 0) throw InputError("demo-train needs at least one example");
    if (unanswerable > examples) throw InputError("more unanswerable examples than examples");
    if (steps == 0) throw InputError("demo-train needs at least one step");
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw InputError("learning rate must be positive");
    if (dim == 0 || hidden == 0) throw InputError("dimensions must be positive");
  }
};

// Micro-corpus: each query opens with its own marker token (the toy encoder
// only sees a 3-token window, so [CLS] must sit next to something
// example-specific). Answerable contexts hold 1-2 unique entity tokens
// among shared fillers; unanswerable contexts hold fillers only.
inline std::vector<MrcExample> synthetic_corpus(std::size_t n, std::size_t n_unanswerable, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "demo-corpus"));
  constexpr std::size_t kFillers = 24;
  std::vector<MrcExample> out;
  // unanswerable slots spread deterministically over the sequence
  auto ua = rng.sample_indices(n, n_unanswerable);
  std::vector<char> is_ua(n, 0);
  for (auto k : ua) is_ua[k] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    MrcExample ex;
    ex.example_id = "demo#" + std::to_string(k);
    ex.query = {"q" + std::to_string(k), "where", "is", "it", "?"};
    const std::size_t len = 6 + rng.below(4);
    for (std::size_t t = 0; t < len; ++t) ex.context.push_back("w" + std::to_string(rng.below(kFillers)));
    if (!is_ua[k]) {
      const std::size_t mentions = 1 + rng.below(2);
      auto slots = rng.sample_indices(len, mentions);
      for (std::size_t m = 0; m < slots.size(); ++m) {
        ex.context[slots[m]] = "e" + std::to_string(k) + (m == 0 ? "a" : "b");
        ex.answers.push_back(make_span(ex.context, slots[m], slots[m]));
      }
    }
    ex.answerable = !ex.answers.empty();
    ex.provenance.strategy = "synthetic";
    check_example(ex);
    out.push_back(std::move(ex));
  }
  return out;
}

struct StepLog {
  std::size_t step = 0;
  double loss = 0.0;
  double loss_cls = 0.0;
  double loss_ext = 0.0;
};

struct DemoResult {
  std::vector<StepLog> log;
  StepLog final;
  std::optional<std::size_t> first_below_target;
  double decode_accuracy = 0.0;
  double cls_accuracy = 0.0;
  std::size_t answerable = 0;
  std::size_t unanswerable = 0;
  std::vector<nlohmann::ordered_json> scores;  // filled when export_scores

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["final_loss"] = final.loss;
    j["final_loss_cls"] = final.loss_cls;
    j["final_loss_ext"] = final.loss_ext;
    j["steps"] = final.step;
    j["first_step_below_target"] =
        first_below_target ? nlohmann::ordered_json(*first_below_target) : nlohmann::ordered_json(nullptr);
    j["decode_accuracy"] = decode_accuracy;
    j["cls_accuracy"] = cls_accuracy;
    j["answerable"] = answerable;
    j["unanswerable"] = unanswerable;
    return j;
  }
};

// Full-batch fixed-step gradient descent on the FFN and the toy embedding
// table. Losses are per-example means. `on_log` sees every logged step.
inline DemoResult demo_train(const DemoConfig& cfg, const std::function<void(const StepLog&)>& on_log = {}) {
  cfg.validate();
  const auto corpus = synthetic_corpus(cfg.examples, cfg.unanswerable, cfg.seed);
  head::ToyEncoder encoder(cfg.dim, derive_seed(cfg.seed, "demo-embeddings"));
  auto params = head::FfnParams<double>::random(cfg.dim, cfg.hidden, derive_seed(cfg.seed, "demo-ffn"), 0.3);

  std::vector<head::InputEncoding> enc;
  std::vector<head::TargetMatrix> targets;
  for (const auto& ex : corpus) {
    enc.push_back(head::encode_input(ex));
    targets.push_back(head::make_targets(ex, enc.back()));
  }
  const double n = static_cast<double>(corpus.size());

  DemoResult res;
  std::vector<head::Matrix<double>> d_hidden(corpus.size());
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    auto acc = head::FfnParams<double>::zeros(cfg.dim, cfg.hidden);
    StepLog s{step, 0, 0, 0};
    for (std::size_t k = 0; k < corpus.size(); ++k) {
      const auto h = encoder.encode(enc[k].tokens);
      if (!h.allFinite() || !params.finite()) throw InvariantError("training diverged at step " + std::to_string(step));
      auto g = head::gradients(h, params, targets[k], enc[k].region());
      acc += g.d_params;
      d_hidden[k] = std::move(g.d_hidden);
      s.loss_cls += g.loss_cls / n;
      s.loss_ext += g.loss_ext / n;
    }
    s.loss = s.loss_cls + s.loss_ext;
    if (!std::isfinite(s.loss)) throw InvariantError("training diverged at step " + std::to_string(step));
    if (!res.first_below_target && s.loss < cfg.target_loss) res.first_below_target = step;
    acc *= -cfg.learning_rate / n;
    params += acc;
    for (std::size_t k = 0; k < corpus.size(); ++k) encoder.apply_gradient(enc[k].tokens, d_hidden[k], cfg.learning_rate / n);
    if ((cfg.log_every && step % cfg.log_every == 0) || step == 1 || step == cfg.steps) {
      res.log.push_back(s);
      if (on_log) on_log(s);
    }
  }

  // Evaluate after the last update.
  StepLog fin{cfg.steps, 0, 0, 0};
  std::size_t decoded_ok = 0, cls_ok = 0;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto h = encoder.encode(enc[k].tokens);
    if (!h.allFinite() || !params.finite()) throw InvariantError("training diverged");
    const auto s = head::score_matrix(h, params);
    if (cfg.export_scores) {
      auto j = head::score_matrix_to_json(s, enc[k]);
      j["id"] = corpus[k].example_id;
      res.scores.push_back(std::move(j));
    }
    fin.loss_cls += head::loss_cls(s, targets[k].y_cls) / n;
    fin.loss_ext += head::loss_ext(s, targets[k], enc[k].region()) / n;
    auto spans = head::decode_spans(s, enc[k].region());
    bool match = spans.size() == corpus[k].answers.size();
    for (std::size_t a = 0; match && a < spans.size(); ++a) {
      match = spans[a].start == corpus[k].answers[a].word_start && spans[a].end == corpus[k].answers[a].word_end;
    }
    decoded_ok += match;
    cls_ok += (s.relevance() > 0.5) == corpus[k].answerable;
    (corpus[k].answerable ? res.answerable : res.unanswerable)++;
  }
  fin.loss = fin.loss_cls + fin.loss_ext;
  if (!std::isfinite(fin.loss)) throw InvariantError("training diverged");
  if (!res.first_below_target && fin.loss < cfg.target_loss) res.first_below_target = cfg.steps;
  res.final = fin;
  res.decode_accuracy = static_cast<double>(decoded_ok) / n;
  res.cls_accuracy = static_cast<double>(cls_ok) / n;
  return res;
}

}  // namespace wikimrc::demo
