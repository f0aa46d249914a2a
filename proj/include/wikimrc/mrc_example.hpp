#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wikimrc/errors.hpp"
#include "wikimrc/text.hpp"

namespace wikimrc {

// Inclusive word indices into the context.
struct AnswerSpan {
  std::size_t word_start = 0;
  std::size_t word_end = 0;
  std::string text;

  friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

struct Provenance {
  std::string definition_id;
  std::optional<std::string> mention_id;
  std::string strategy;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// One (query, context, answers) record. answerable mirrors Y^cls.
struct MrcExample {
  std::string example_id;
  std::string entity_title;
  std::vector<std::string> query;
  std::vector<std::string> context;
  std::vector<AnswerSpan> answers;
  bool answerable = false;
  Provenance provenance;

  friend bool operator==(const MrcExample&, const MrcExample&) = default;
};

inline std::string slice_text(const std::vector<std::string>& context, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t k = b; k <= e; ++k) {
    if (k > b) out.push_back(' ');
    out += context[k];
  }
  return out;
}

inline AnswerSpan make_span(const std::vector<std::string>& context, std::size_t b, std::size_t e) {
  return AnswerSpan{b, e, slice_text(context, b, e)};
}

// Throws InvariantError if the example breaks its invariants.
inline void check_example(const MrcExample& ex) {
  if (ex.answerable != !ex.answers.empty())
    throw InvariantError("example " + ex.example_id + ": answerable flag disagrees with answer count");
  for (const auto& a : ex.answers) {
    if (a.word_start > a.word_end || a.word_end >= ex.context.size())
      throw InvariantError("example " + ex.example_id + ": answer span outside context");
    if (slice_text(ex.context, a.word_start, a.word_end) != a.text)
      throw InvariantError("example " + ex.example_id + ": answer text does not match its context slice");
  }
}

inline nlohmann::ordered_json example_to_json(const MrcExample& ex) {
  nlohmann::ordered_json j;
  j["id"] = ex.example_id;
  j["entity"] = ex.entity_title;
  j["query"] = ex.query;
  j["context"] = ex.context;
  auto answers = nlohmann::ordered_json::array();
  for (const auto& a : ex.answers) {
    nlohmann::ordered_json x;
    x["start"] = a.word_start;
    x["end"] = a.word_end;
    x["text"] = a.text;
    answers.push_back(std::move(x));
  }
  j["answers"] = std::move(answers);
  j["answerable"] = ex.answerable;
  nlohmann::ordered_json prov;
  prov["definition"] = ex.provenance.definition_id;
  prov["mention"] = ex.provenance.mention_id ? nlohmann::ordered_json(*ex.provenance.mention_id)
                                             : nlohmann::ordered_json(nullptr);
  prov["strategy"] = ex.provenance.strategy;
  j["prov"] = std::move(prov);
  return j;
}

inline MrcExample example_from_json(const nlohmann::json& j) {
  MrcExample ex;
  try {
    ex.example_id = j.at("id").get<std::string>();
    ex.entity_title = j.value("entity", std::string{});
    ex.query = j.at("query").get<std::vector<std::string>>();
    ex.context = j.at("context").get<std::vector<std::string>>();
    for (const auto& a : j.at("answers")) {
      ex.answers.push_back(AnswerSpan{a.at("start").get<std::size_t>(), a.at("end").get<std::size_t>(),
                                      a.at("text").get<std::string>()});
    }
    ex.answerable = j.at("answerable").get<bool>();
    if (j.contains("prov")) {
      const auto& p = j.at("prov");
      ex.provenance.definition_id = p.value("definition", std::string{});
      if (p.contains("mention") && !p.at("mention").is_null())
        ex.provenance.mention_id = p.at("mention").get<std::string>();
      ex.provenance.strategy = p.value("strategy", std::string{});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("MRC example record: ") + e.what());
  }
  return ex;
}

inline std::string dump_line(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

}  // namespace wikimrc
