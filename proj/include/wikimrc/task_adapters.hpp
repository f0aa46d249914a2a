#pragma once

#include <algorithm>
#include <cctype>
#include <iterator>
#include <span>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wikimrc/errors.hpp"
#include "wikimrc/mrc_example.hpp"
#include "wikimrc/text.hpp"
#include "wikimrc/wae_head.hpp"

namespace wikimrc::tasks {

enum class TaskKind { NER, EQA, MCQA, PairCls, SentCls };

inline std::string_view task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::NER: return "ner";
    case TaskKind::EQA: return "eqa";
    case TaskKind::MCQA: return "mcqa";
    case TaskKind::PairCls: return "paircls";
    case TaskKind::SentCls: return "sentcls";
  }
  return "?";
}

inline TaskKind parse_task_kind(std::string_view s) {
  for (auto k : {TaskKind::NER, TaskKind::EQA, TaskKind::MCQA, TaskKind::PairCls, TaskKind::SentCls}) {
    if (text::iequals(s, task_kind_name(k))) return k;
  }
  throw InputError("unknown task kind: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Task-native instances

// Inclusive token indices.
struct Entity {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  friend bool operator==(const Entity&, const Entity&) = default;
  friend auto operator<=>(const Entity&, const Entity&) = default;
};

struct ScoredEntity {
  Entity entity;
  double score = 1.0;
};

struct NerInstance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Entity> entities;
};

// char_start counts code points, as in SQuAD files.
struct EqaAnswer {
  std::string text;
  std::size_t char_start = 0;
};

struct EqaInstance {
  std::string id;
  std::string question;
  std::string context;
  std::vector<EqaAnswer> answers;  // empty: unanswerable
};

struct McqaInstance {
  std::string id;
  std::string question;
  std::vector<std::string> choices;
  std::string context;
  std::optional<std::size_t> answer;
};

struct SentClsInstance {
  std::string id;
  std::string text;
  std::optional<std::string> label;
};

struct PairClsInstance {
  std::string id;
  std::string hypothesis;
  std::string premise;
  std::optional<std::string> label;
};

using TaskInstance = std::variant<NerInstance, EqaInstance, McqaInstance, PairClsInstance, SentClsInstance>;

inline TaskKind kind_of(const TaskInstance& t) {
  struct V {
    TaskKind operator()(const NerInstance&) const { return TaskKind::NER; }
    TaskKind operator()(const EqaInstance&) const { return TaskKind::EQA; }
    TaskKind operator()(const McqaInstance&) const { return TaskKind::MCQA; }
    TaskKind operator()(const PairClsInstance&) const { return TaskKind::PairCls; }
    TaskKind operator()(const SentClsInstance&) const { return TaskKind::SentCls; }
  };
  return std::visit(V{}, t);
}

// ---------------------------------------------------------------------------
// Label schemas: query templates are data.
//
//   ner      "<LABEL>" . <description>
//   sentcls  <Label> , <description>
//   paircls  <Label> . <description>
//
// A label may instead carry a full query string that replaces the wrapper.
// Queries are pre-tokenized: they are split on whitespace, nothing else.

struct LabelTemplate {
  std::string name;
  std::string description;
  std::optional<std::string> query;
};

struct LabelSchema {
  TaskKind kind = TaskKind::NER;
  std::vector<LabelTemplate> labels;

  void validate() const {
    if (labels.empty()) throw InputError("label schema has no labels");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (text::trim(labels[i].name).empty()) throw InputError("label schema: empty label name");
      if (text::trim(labels[i].description).empty() && !labels[i].query)
        throw InputError("label schema: empty description for " + labels[i].name);
      for (std::size_t k = 0; k < i; ++k) {
        if (labels[k].name == labels[i].name) throw InputError("label schema: duplicate label " + labels[i].name);
      }
    }
  }

  std::vector<std::string> query_tokens(std::size_t i) const {
    const auto& l = labels.at(i);
    if (l.query) return text::split_whitespace(*l.query);
    std::string q;
    switch (kind) {
      case TaskKind::NER: q = "\"" + l.name + "\" . " + l.description; break;
      case TaskKind::SentCls: q = l.name + " , " + l.description; break;
      default: q = l.name + " . " + l.description; break;
    }
    return text::split_whitespace(q);
  }

  // Exact name first, then case-insensitive.
  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i].name == name) return i;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (text::iequals(labels[i].name, name)) return i;
    return std::nullopt;
  }

  static LabelSchema conll() {
    return {TaskKind::NER,
            {{"ORG", "Organization entities are limited to named corporate, governmental, or other organizational entities.", {}},
             {"PER", "Person entities are named persons or family .", {}},
             {"LOC", "Location entities are the name of politically or geographically defined locations such as cities , countries .", {}},
             {"MISC", "Examples of miscellaneous entities include events , nationalities , products and works of art .", {}}}};
  }
  static LabelSchema sst2() {
    return {TaskKind::SentCls, {{"Negative", "feeling not good .", {}}, {"Positive", "having a good feeling .", {}}}};
  }
  static LabelSchema mnli() {
    return {TaskKind::PairCls,
            {{"Neutral", "The hypothesis is a sentence with mostly the same lexical items as the premise but a different meaning .",
              "Neutral. The hypothesis is a sentence with mostly the same lexical items as the premise but a different meaning ."},
             {"Entailment", "The hypothesis is a sentence with a similar meaning as the premise .", {}},
             {"Contradiction", "The hypothesis is a sentence with a contradictory meaning to the premise .", {}}}};
  }

  static LabelSchema default_for(TaskKind k) {
    switch (k) {
      case TaskKind::NER: return conll();
      case TaskKind::SentCls: return sst2();
      case TaskKind::PairCls: return mnli();
      default: throw InputError(std::string("task kind ") + std::string(task_kind_name(k)) + " takes no label templates");
    }
  }

  // {"LABEL": "description", "OTHER": {"description": "...", "query": "..."}}
  // Key order is the canonical branch order.
  static LabelSchema from_json(TaskKind k, const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw InputError("template file must be a JSON object of label -> description");
    LabelSchema s;
    s.kind = k;
    for (const auto& [name, v] : j.items()) {
      LabelTemplate t;
      t.name = name;
      if (v.is_string()) {
        t.description = v.get<std::string>();
      } else if (v.is_object()) {
        t.description = v.value("description", std::string{});
        if (v.contains("query")) {
          if (!v.at("query").is_string()) throw InputError("template " + name + ": query must be a string");
          t.query = v.at("query").get<std::string>();
        }
      } else {
        throw InputError("template " + name + ": expected a string or an object");
      }
      s.labels.push_back(std::move(t));
    }
    s.validate();
    return s;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& l : labels) {
      if (l.query) {
        j[l.name] = {{"description", l.description}, {"query", *l.query}};
      } else {
        j[l.name] = l.description;
      }
    }
    return j;
  }
};

// ---------------------------------------------------------------------------
// Groups of MRC examples.
//
// For classification branches `example.answerable` is Y^cls and the answer
// list stays empty: the gold branch's target is the [CLS] cell itself.

struct Branch {
  std::string tag;
  MrcExample example;
  bool gold = false;
};

struct InstanceGroup {
  std::string instance_id;
  TaskKind kind = TaskKind::NER;
  std::vector<Branch> branches;
};

inline MrcExample make_branch_example(const std::string& instance_id, const std::string& tag,
                                      std::vector<std::string> query, std::vector<std::string> context, TaskKind kind) {
  MrcExample ex;
  ex.example_id = tag.empty() ? instance_id : instance_id + "#" + tag;
  ex.entity_title = tag;
  ex.query = std::move(query);
  ex.context = std::move(context);
  ex.provenance.definition_id = instance_id;
  ex.provenance.strategy = std::string(task_kind_name(kind));
  return ex;
}

inline InstanceGroup ner_to_mrc(const NerInstance& inst, const LabelSchema& schema) {
  if (schema.kind != TaskKind::NER) throw InputError("ner_to_mrc needs an NER label schema");
  schema.validate();
  if (inst.tokens.empty()) throw InputError("NER instance " + inst.id + " has no tokens");
  for (const auto& e : inst.entities) {
    if (e.start > e.end || e.end >= inst.tokens.size())
      throw InputError("NER instance " + inst.id + ": entity (" + std::to_string(e.start) + "," + std::to_string(e.end) +
                       ") misaligned with " + std::to_string(inst.tokens.size()) + " tokens");
    if (!schema.index_of(e.label)) throw InputError("NER instance " + inst.id + ": label " + e.label + " not in schema");
  }
  InstanceGroup g{inst.id, TaskKind::NER, {}};
  for (std::size_t li = 0; li < schema.labels.size(); ++li) {
    const auto& name = schema.labels[li].name;
    std::vector<Entity> mine;
    for (const auto& e : inst.entities) {
      if (*schema.index_of(e.label) == li) mine.push_back(e);
    }
    std::sort(mine.begin(), mine.end());
    mine.erase(std::unique(mine.begin(), mine.end(),
                           [](const Entity& a, const Entity& b) { return a.start == b.start && a.end == b.end; }),
               mine.end());
    Branch b{name, make_branch_example(inst.id, name, schema.query_tokens(li), inst.tokens, TaskKind::NER), false};
    for (const auto& e : mine) b.example.answers.push_back(make_span(inst.tokens, e.start, e.end));
    b.example.answerable = !b.example.answers.empty();
    b.gold = b.example.answerable;
    g.branches.push_back(std::move(b));
  }
  return g;
}

namespace detail {

// Token index range covering bytes [b, e), exact boundaries first, then a
// punctuation-insensitive overlap match.
inline std::optional<std::pair<std::size_t, std::size_t>> align_bytes(const std::vector<text::Token>& toks,
                                                                      std::size_t b, std::size_t e,
                                                                      std::string_view answer) {
  std::optional<std::size_t> s, t;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (toks[k].begin == b) s = k;
    if (toks[k].end == e) t = k;
  }
  if (s && t && *s <= *t) return std::make_pair(*s, *t);
  // fuzzy: tokens overlapping the range, compared without punctuation
  std::optional<std::size_t> lo, hi;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (toks[k].end > b && toks[k].begin < e) {
      if (!lo) lo = k;
      hi = k;
    }
  }
  if (!lo) return std::nullopt;
  std::string joined, want;
  for (std::size_t k = *lo; k <= *hi; ++k) joined += text::match_key(toks[k].text);
  for (const auto& w : text::split_whitespace(answer)) want += text::match_key(w);
  // drop boundary tokens that are pure punctuation
  while (*lo < *hi && text::match_key(toks[*lo].text).empty()) ++*lo;
  while (*hi > *lo && text::match_key(toks[*hi].text).empty()) --*hi;
  if (!want.empty() && joined == want) return std::make_pair(*lo, *hi);
  return std::nullopt;
}

inline bool ends_sentence(const std::vector<std::string>& toks) {
  return !toks.empty() && (toks.back() == "." || toks.back() == "?" || toks.back() == "!");
}

}  // namespace detail

inline MrcExample eqa_to_mrc(const EqaInstance& inst) {
  const auto query = text::words(inst.question);
  if (query.empty()) throw InputError("EQA instance " + inst.id + ": empty question");
  const auto toks = text::tokenize(inst.context);
  if (toks.empty()) throw InputError("EQA instance " + inst.id + ": empty context");
  std::vector<std::string> context;
  for (const auto& t : toks) context.push_back(t.text);
  MrcExample ex = make_branch_example(inst.id, "", query, context, TaskKind::EQA);
  const auto cp_table = text::codepoint_byte_table(inst.context);
  for (const auto& a : inst.answers) {
    if (a.char_start >= cp_table.size())
      throw InputError("EQA instance " + inst.id + ": answer offset " + std::to_string(a.char_start) + " past context end");
    std::size_t b = cp_table[a.char_start];
    std::size_t e = b + a.text.size();
    if (e > inst.context.size() || inst.context.compare(b, a.text.size(), a.text) != 0) {
      // tolerate surrounding whitespace in the gold text
      auto core = text::trim(a.text);
      b += static_cast<std::size_t>(core.data() - a.text.data());
      e = b + core.size();
      if (core.empty() || e > inst.context.size() || inst.context.compare(b, core.size(), core) != 0)
        throw InputError("EQA instance " + inst.id + ": answer \"" + a.text + "\" not found at offset " +
                         std::to_string(a.char_start));
    }
    auto span = detail::align_bytes(toks, b, e, a.text);
    if (!span)
      throw InputError("EQA instance " + inst.id + ": cannot align answer \"" + a.text + "\" at offset " +
                       std::to_string(a.char_start));
    AnswerSpan s = make_span(context, span->first, span->second);
    if (std::find(ex.answers.begin(), ex.answers.end(), s) == ex.answers.end()) ex.answers.push_back(std::move(s));
  }
  std::sort(ex.answers.begin(), ex.answers.end(), [](const AnswerSpan& x, const AnswerSpan& y) {
    return x.word_start != y.word_start ? x.word_start < y.word_start : x.word_end < y.word_end;
  });
  ex.answerable = !ex.answers.empty();
  return ex;
}

inline std::string choice_tag(std::size_t i) {
  return i < 26 ? std::string(1, static_cast<char>('A' + i)) : std::to_string(i);
}

inline InstanceGroup cls_to_mrc(const McqaInstance& inst) {
  if (inst.choices.size() < 2) throw InputError("MCQA instance " + inst.id + " needs at least two choices");
  if (inst.answer && *inst.answer >= inst.choices.size())
    throw InputError("MCQA instance " + inst.id + ": answer index out of range");
  auto stem = text::words(inst.question);
  if (!stem.empty() && stem.back() == ":") stem.pop_back();
  auto context = text::words(inst.context);
  if (context.empty()) throw InputError("MCQA instance " + inst.id + ": empty context");
  InstanceGroup g{inst.id, TaskKind::MCQA, {}};
  for (std::size_t c = 0; c < inst.choices.size(); ++c) {
    auto query = stem;
    auto choice = text::words(inst.choices[c]);
    if (choice.empty()) throw InputError("MCQA instance " + inst.id + ": empty choice " + choice_tag(c));
    query.insert(query.end(), choice.begin(), choice.end());
    if (!detail::ends_sentence(choice)) query.emplace_back(".");
    Branch b{choice_tag(c), make_branch_example(inst.id, choice_tag(c), std::move(query), context, TaskKind::MCQA),
             inst.answer && *inst.answer == c};
    b.example.answerable = b.gold;
    g.branches.push_back(std::move(b));
  }
  return g;
}

namespace detail {

inline InstanceGroup label_branches(const std::string& id, TaskKind kind, const LabelSchema& schema,
                                    const std::vector<std::string>& context, const std::optional<std::string>& label) {
  if (schema.kind != kind) throw InputError("label schema kind does not match the task");
  schema.validate();
  if (schema.labels.size() < 2) throw InputError("classification needs at least two labels");
  if (context.empty()) throw InputError("instance " + id + ": empty text");
  std::optional<std::size_t> gold;
  if (label) {
    gold = schema.index_of(*label);
    if (!gold) throw InputError("instance " + id + ": label " + *label + " not in schema");
  }
  InstanceGroup g{id, kind, {}};
  for (std::size_t li = 0; li < schema.labels.size(); ++li) {
    const auto& name = schema.labels[li].name;
    Branch b{name, make_branch_example(id, name, schema.query_tokens(li), context, kind), gold && *gold == li};
    b.example.answerable = b.gold;
    g.branches.push_back(std::move(b));
  }
  return g;
}

}  // namespace detail

inline InstanceGroup cls_to_mrc(const SentClsInstance& inst, const LabelSchema& schema) {
  return detail::label_branches(inst.id, TaskKind::SentCls, schema, text::words(inst.text), inst.label);
}

inline std::vector<std::string> pair_context(std::string_view hypothesis, std::string_view premise) {
  std::vector<std::string> ctx{"Hypothesis", ":"};
  auto h = text::words(hypothesis);
  auto p = text::words(premise);
  if (h.empty() || p.empty()) throw InputError("sentence pair with an empty side");
  ctx.insert(ctx.end(), h.begin(), h.end());
  ctx.emplace_back("Premise");
  ctx.emplace_back(":");
  ctx.insert(ctx.end(), p.begin(), p.end());
  return ctx;
}

inline InstanceGroup cls_to_mrc(const PairClsInstance& inst, const LabelSchema& schema) {
  return detail::label_branches(inst.id, TaskKind::PairCls, schema, pair_context(inst.hypothesis, inst.premise),
                                inst.label);
}

// Dispatch for any instance; EQA becomes a one-branch group.
inline InstanceGroup to_mrc(const TaskInstance& inst, const std::optional<LabelSchema>& schema = std::nullopt) {
  auto need = [&](TaskKind k) { return schema ? *schema : LabelSchema::default_for(k); };
  if (auto* n = std::get_if<NerInstance>(&inst)) return ner_to_mrc(*n, need(TaskKind::NER));
  if (auto* q = std::get_if<EqaInstance>(&inst)) {
    InstanceGroup g{q->id, TaskKind::EQA, {}};
    MrcExample ex = eqa_to_mrc(*q);
    bool ans = ex.answerable;
    g.branches.push_back(Branch{"", std::move(ex), ans});
    return g;
  }
  if (auto* m = std::get_if<McqaInstance>(&inst)) return cls_to_mrc(*m);
  if (auto* p = std::get_if<PairClsInstance>(&inst)) return cls_to_mrc(*p, need(TaskKind::PairCls));
  return cls_to_mrc(std::get<SentClsInstance>(inst), need(TaskKind::SentCls));
}

// ---------------------------------------------------------------------------
// Inverse conversion

// decoded[b] holds the context-coordinate spans decoded for branch b.
inline std::vector<ScoredEntity> mrc_to_ner(const InstanceGroup& group,
                                            const std::vector<std::vector<head::SpanScore>>& decoded,
                                            head::Overlap mode) {
  if (decoded.size() != group.branches.size()) throw InputError("mrc_to_ner: one decode list per branch required");
  struct Cand {
    ScoredEntity e;
    std::size_t branch;
  };
  std::vector<Cand> all;
  for (std::size_t b = 0; b < decoded.size(); ++b) {
    for (const auto& s : decoded[b]) all.push_back(Cand{{Entity{s.start, s.end, group.branches[b].tag}, s.score}, b});
  }
  // score desc, then start, end, canonical label order
  std::sort(all.begin(), all.end(), [](const Cand& x, const Cand& y) {
    if (x.e.score != y.e.score) return x.e.score > y.e.score;
    if (x.e.entity.start != y.e.entity.start) return x.e.entity.start < y.e.entity.start;
    if (x.e.entity.end != y.e.entity.end) return x.e.entity.end < y.e.entity.end;
    return x.branch < y.branch;
  });
  std::vector<Cand> kept;
  for (auto& c : all) {
    if (mode == head::Overlap::Flat) {
      bool clash = std::any_of(kept.begin(), kept.end(), [&](const Cand& k) {
        return c.e.entity.start <= k.e.entity.end && k.e.entity.start <= c.e.entity.end;
      });
      if (clash) continue;
    }
    kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end(), [](const Cand& x, const Cand& y) {
    if (x.e.entity.start != y.e.entity.start) return x.e.entity.start < y.e.entity.start;
    if (x.e.entity.end != y.e.entity.end) return x.e.entity.end < y.e.entity.end;
    return x.branch < y.branch;
  });
  std::vector<ScoredEntity> out;
  for (auto& k : kept) out.push_back(std::move(k.e));
  return out;
}

// Gold answers of every branch, as decode lists with score 1.
inline std::vector<std::vector<head::SpanScore>> gold_decodes(const InstanceGroup& group) {
  std::vector<std::vector<head::SpanScore>> out;
  for (const auto& b : group.branches) {
    std::vector<head::SpanScore> d;
    for (const auto& a : b.example.answers) d.push_back(head::SpanScore{a.word_start, a.word_end, 1.0});
    out.push_back(std::move(d));
  }
  return out;
}

struct ClsPrediction {
  std::size_t branch = 0;
  double relevance = 0.0;
  std::optional<head::SpanScore> rationale;
};

// Argmax of S_00 over branches; ties keep the earliest branch.
inline ClsPrediction mrc_to_cls(std::span<const double> relevance) {
  if (relevance.empty()) throw InputError("mrc_to_cls: no scored branch");
  ClsPrediction p{0, relevance[0], std::nullopt};
  for (std::size_t b = 1; b < relevance.size(); ++b) {
    if (relevance[b] > p.relevance) p = ClsPrediction{b, relevance[b], std::nullopt};
  }
  return p;
}

// Full form: one score matrix per branch; the rationale comes from the winner.
inline ClsPrediction mrc_to_cls(const InstanceGroup& group, const std::vector<head::ScoreMatrix<double>>& scores,
                                head::SeparatorStyle style = head::SeparatorStyle::Single) {
  if (scores.size() != group.branches.size()) throw InputError("mrc_to_cls: one score matrix per branch required");
  std::vector<double> rel;
  for (const auto& s : scores) rel.push_back(s.relevance());
  ClsPrediction p = mrc_to_cls(rel);
  const auto enc = head::encode_input(group.branches[p.branch].example, style);
  p.rationale = head::extract_rationale(scores[p.branch], enc.region());
  return p;
}

// ---------------------------------------------------------------------------
// Worked-example rendering: the "[CLS] Q [SEP] [SEP] C [SEP]" input and the
// output column with 1-based sequence positions.

struct TableRow {
  std::string input;
  std::string output;
};

inline std::string_view empty_set() { return "\xE2\x88\x85"; }  // U+2205

inline TableRow render_row(const Branch& b) {
  const auto enc = head::encode_input(b.example, head::SeparatorStyle::Double);
  TableRow row{text::join(enc.tokens), ""};
  if (!b.example.answers.empty()) {
    for (std::size_t k = 0; k < b.example.answers.size(); ++k) {
      const auto& a = b.example.answers[k];
      if (k) row.output += "; ";
      row.output += "(" + std::to_string(enc.to_sequence(a.word_start) + 1) + "," +
                    std::to_string(enc.to_sequence(a.word_end) + 1) + ") - \"" + a.text + "\"";
    }
  } else if (b.example.answerable) {
    row.output = "(0,0) - \"" + std::string(head::kCls) + "\"";
  } else {
    row.output = std::string(empty_set());
  }
  return row;
}

inline nlohmann::ordered_json group_to_json(const InstanceGroup& g) {
  nlohmann::ordered_json j;
  j["id"] = g.instance_id;
  j["kind"] = task_kind_name(g.kind);
  auto branches = nlohmann::ordered_json::array();
  for (const auto& b : g.branches) {
    auto e = example_to_json(b.example);
    nlohmann::ordered_json x;
    x["tag"] = b.tag;
    x["gold"] = b.gold;
    for (auto it = e.begin(); it != e.end(); ++it) {
      if (it.key() != "entity" && it.key() != "prov") x[it.key()] = it.value();
    }
    branches.push_back(std::move(x));
  }
  j["branches"] = std::move(branches);
  return j;
}

// ---------------------------------------------------------------------------
// Readers

namespace detail {

inline std::string bio_label(std::string_view tag) {
  auto dash = tag.find('-');
  return dash == std::string_view::npos ? std::string{} : std::string(tag.substr(dash + 1));
}

inline void close_entity(std::optional<Entity>& open, std::vector<Entity>& out) {
  if (open) out.push_back(*open);
  open.reset();
}

}  // namespace detail

// CoNLL column format: token first, tag last; blank lines separate
// sentences; -DOCSTART- lines are skipped. Accepts IOB1, IOB2 and IOBES.
inline std::vector<NerInstance> read_conll(std::istream& in, std::string_view id_prefix = "conll") {
  std::vector<NerInstance> out;
  NerInstance cur;
  std::optional<Entity> open;
  std::size_t line_no = 0;
  auto flush = [&] {
    detail::close_entity(open, cur.entities);
    if (!cur.tokens.empty()) {
      cur.id = std::string(id_prefix) + "-" + std::to_string(out.size());
      out.push_back(std::move(cur));
    }
    cur = NerInstance{};
  };
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto cols = text::split_whitespace(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols[0] == "-DOCSTART-") {
      flush();
      continue;
    }
    if (cols.size() < 2) throw InputError("CoNLL line " + std::to_string(line_no) + ": expected token and tag columns");
    const std::string& tag = cols.back();
    const std::size_t k = cur.tokens.size();
    cur.tokens.push_back(cols[0]);
    if (tag == "O") {
      detail::close_entity(open, cur.entities);
      continue;
    }
    if (tag.size() < 3 || tag[1] != '-' || std::string_view("BIES").find(tag[0]) == std::string_view::npos)
      throw InputError("CoNLL line " + std::to_string(line_no) + ": bad tag " + tag);
    const std::string label = detail::bio_label(tag);
    const char p = tag[0];
    bool starts = p == 'B' || p == 'S' || !open || open->label != label;
    if (starts) {
      detail::close_entity(open, cur.entities);
      open = Entity{k, k, label};
    } else {
      open->end = k;
    }
    if (p == 'E' || p == 'S') detail::close_entity(open, cur.entities);
  }
  flush();
  return out;
}

// {"id", "tokens": [...], "entities": [{"start", "end", "label"}]}
inline std::vector<NerInstance> read_ner_jsonl(std::istream& in) {
  std::vector<NerInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      NerInstance n;
      n.id = j.value("id", "ner-" + std::to_string(out.size()));
      n.tokens = j.at("tokens").get<std::vector<std::string>>();
      for (const auto& e : j.value("entities", nlohmann::json::array()))
        n.entities.push_back(Entity{e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(),
                                    e.at("label").get<std::string>()});
      out.push_back(std::move(n));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("NER JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// SQuAD v1/v2 JSON ({"data": [...]}) or MRQA JSONL (header line + one
// context per line).
inline std::vector<EqaInstance> read_eqa(std::istream& in) {
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<EqaInstance> out;
  try {
    auto trimmed = text::trim(content);
    auto first_nl = trimmed.find('\n');
    bool jsonl = first_nl != std::string_view::npos && nlohmann::json::accept(trimmed.substr(0, first_nl));
    if (!jsonl) {
      auto j = nlohmann::json::parse(content);
      for (const auto& article : j.at("data")) {
        for (const auto& para : article.at("paragraphs")) {
          const auto ctx = para.at("context").get<std::string>();
          for (const auto& qa : para.at("qas")) {
            EqaInstance e;
            e.id = qa.at("id").get<std::string>();
            e.question = qa.at("question").get<std::string>();
            e.context = ctx;
            if (!qa.value("is_impossible", false)) {
              for (const auto& a : qa.at("answers"))
                e.answers.push_back(EqaAnswer{a.at("text").get<std::string>(), a.at("answer_start").get<std::size_t>()});
            }
            out.push_back(std::move(e));
          }
        }
      }
      return out;
    }
    std::size_t pos = 0;
    while (pos < content.size()) {
      auto nl = content.find('\n', pos);
      if (nl == std::string::npos) nl = content.size();
      std::string_view line(content.data() + pos, nl - pos);
      pos = nl + 1;
      if (text::trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line);
      if (j.contains("header")) continue;
      const auto ctx = j.at("context").get<std::string>();
      for (const auto& qa : j.at("qas")) {
        EqaInstance e;
        e.id = qa.at("qid").get<std::string>();
        e.question = qa.at("question").get<std::string>();
        e.context = ctx;
        for (const auto& da : qa.value("detected_answers", nlohmann::json::array())) {
          const auto spans = da.at("char_spans");
          if (spans.empty()) continue;
          const auto s = spans.at(0).at(0).get<std::size_t>();
          const auto t = spans.at(0).at(1).get<std::size_t>();
          auto b = text::codepoint_to_byte(ctx, s), en = text::codepoint_to_byte(ctx, t + 1);
          e.answers.push_back(EqaAnswer{ctx.substr(b, en - b), s});
        }
        out.push_back(std::move(e));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("EQA file: ") + e.what());
  }
  return out;
}

namespace detail {

inline std::optional<std::string> label_field(const nlohmann::json& j, const LabelSchema* schema) {
  if (!j.contains("label") || j.at("label").is_null()) return std::nullopt;
  const auto& l = j.at("label");
  if (l.is_string()) return l.get<std::string>();
  if (l.is_number_integer() && schema) {
    auto k = l.get<long long>();
    if (k < 0 || static_cast<std::size_t>(k) >= schema->labels.size()) throw InputError("label index out of range");
    return schema->labels[static_cast<std::size_t>(k)].name;
  }
  throw InputError("label must be a string (or an index into the template order)");
}

}  // namespace detail

// One JSON object per line:
//   sentcls  {"id", "text", "label"?}
//   paircls  {"id", "hypothesis", "premise", "label"?}
//   mcqa     {"id", "question", "choices": [...], "context", "answer"?: index or letter}
inline std::vector<TaskInstance> read_cls_jsonl(std::istream& in, TaskKind kind, const LabelSchema* schema = nullptr) {
  std::vector<TaskInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::string id = j.contains("id") ? (j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump())
                                        : std::string(task_kind_name(kind)) + "-" + std::to_string(out.size());
      switch (kind) {
        case TaskKind::SentCls:
          out.emplace_back(SentClsInstance{id, j.at("text").get<std::string>(), detail::label_field(j, schema)});
          break;
        case TaskKind::PairCls:
          out.emplace_back(PairClsInstance{id, j.at("hypothesis").get<std::string>(), j.at("premise").get<std::string>(),
                                           detail::label_field(j, schema)});
          break;
        case TaskKind::MCQA: {
          McqaInstance m{id, j.at("question").get<std::string>(), j.at("choices").get<std::vector<std::string>>(),
                         j.value("context", std::string{}), std::nullopt};
          if (j.contains("answer") && !j.at("answer").is_null()) {
            const auto& a = j.at("answer");
            if (a.is_number_integer()) {
              m.answer = a.get<std::size_t>();
            } else {
              auto s = a.get<std::string>();
              if (s.size() != 1 || !std::isalpha(static_cast<unsigned char>(s[0])))
                throw InputError("MCQA answer must be an index or a letter");
              m.answer = static_cast<std::size_t>(std::toupper(static_cast<unsigned char>(s[0])) - 'A');
            }
          }
          out.emplace_back(std::move(m));
          break;
        }
        default:
          throw InputError("read_cls_jsonl: not a classification kind");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string(task_kind_name(kind)) + " JSONL line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(std::string(task_kind_name(kind)) + " JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace wikimrc::tasks
