// wikimrc: hyperlink-to-MRC corpus builder, task converters, head checks.
//
// Data goes to files; logs go to stderr. Exit codes: 0 ok, 1 bad input or
// usage, 2 internal invariant violation.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wikimrc/corpus.hpp"
#include "wikimrc/demo_train.hpp"
#include "wikimrc/errors.hpp"
#include "wikimrc/metrics.hpp"
#include "wikimrc/run_config.hpp"
#include "wikimrc/selftest.hpp"
#include "wikimrc/task_adapters.hpp"
#include "wikimrc/wiki_ingest.hpp"

namespace fs = std::filesystem;
using namespace wikimrc;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Quiet = 4 };

Level g_level = Level::Info;

Level parse_level(const std::string& s) {
  if (s == "debug") return Level::Debug;
  if (s == "info") return Level::Info;
  if (s == "warn") return Level::Warn;
  if (s == "error") return Level::Error;
  if (s == "quiet") return Level::Quiet;
  throw InputError("unknown log level " + s);
}

template <typename... Args>
void log(Level l, const Args&... args) {
  if (l < g_level) return;
  static constexpr const char* names[] = {"debug", "info", "warn", "error"};
  std::ostringstream os;
  os << "[" << names[static_cast<int>(l)] << "] ";
  (os << ... << args);
  std::cerr << os.str() << "\n";
}

std::ifstream open_in(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing ") + what + " path");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError(std::string("cannot open ") + what + " " + path);
  return f;
}

std::ofstream open_out(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing ") + what + " path");
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError(std::string("cannot write ") + what + " " + path);
  return f;
}

void write_json(const std::string& path, const ojson& j, const char* what) {
  auto f = open_out(path, what);
  f << j.dump(2) << "\n";
}

std::vector<MrcExample> read_examples(const std::string& path) {
  auto f = open_in(path, "corpus");
  std::vector<MrcExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(example_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_examples(const std::string& path, const std::vector<MrcExample>& xs) {
  auto f = open_out(path, "corpus");
  for (const auto& ex : xs) f << dump_line(example_to_json(ex)) << "\n";
}

std::optional<ingest::AliasTable> load_aliases(const std::string& path) {
  if (path.empty()) return std::nullopt;
  auto f = open_in(path, "alias table");
  try {
    return ingest::AliasTable::from_json(json::parse(f));
  } catch (const json::exception& e) {
    throw InputError("alias table: " + std::string(e.what()));
  }
}

// Reads a dump (XML or article JSONL) into segmented articles.
std::vector<ingest::Article> load_articles(const std::string& path, bool strict) {
  auto f = open_in(path, "dump");
  ingest::ArticleReader reader(f, ingest::ReaderOptions{strict});
  std::vector<ingest::Article> out;
  ingest::SegmentStats stats;
  while (auto a = reader.next()) {
    out.push_back(a->sentences.empty() ? ingest::segment_sentences(std::move(*a), text::AbbreviationRules::standard(), &stats)
                                       : std::move(*a));
  }
  log(Level::Info, "read ", out.size(), " articles (", reader.skipped(), " malformed records skipped, ",
      stats.dropped_anchors, " anchors dropped at sentence boundaries)");
  return out;
}

// {"article", "first", "last", "vector": [...]} per line.
corpus::VectorSource load_vectors(const std::string& path) {
  auto f = open_in(path, "vectors");
  auto table = std::make_shared<std::map<corpus::WindowKey, std::vector<double>>>();
  std::string line;
  while (std::getline(f, line)) {
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      corpus::WindowKey k{ingest::id_string(j.at("article")), j.at("first").get<std::size_t>(),
                          j.at("last").get<std::size_t>()};
      (*table)[k] = j.at("vector").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw InputError("vectors file: " + std::string(e.what()));
    }
  }
  return [table](const corpus::WindowKey& k) -> std::optional<std::vector<double>> {
    auto it = table->find(k);
    if (it == table->end()) return std::nullopt;
    return it->second;
  };
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_ingest(const RunConfig& c) {
  const std::string& src = c.dump.empty() ? c.in : c.dump;
  auto in = open_in(src, "dump");
  auto out = open_out(c.out, "articles");
  ingest::ArticleReader reader(in, ingest::ReaderOptions{c.strict});
  ingest::SegmentStats stats;
  std::size_t n = 0;
  while (auto a = reader.next()) {
    auto art = a->sentences.empty() ? ingest::segment_sentences(std::move(*a), text::AbbreviationRules::standard(), &stats)
                                    : std::move(*a);
    out << dump_line(ingest::article_to_json(art)) << "\n";
    ++n;
  }
  if (!out) throw InputError("write failed: " + c.out);
  log(Level::Info, "ingested ", n, " articles; skipped ", reader.skipped(), " malformed records; dropped ",
      stats.dropped_anchors, " anchors straddling sentence boundaries");
  return 0;
}

int cmd_index(const RunConfig& c) {
  const auto articles = load_articles(c.in.empty() ? c.dump : c.in, c.strict);
  const auto aliases = load_aliases(c.aliases);
  const auto index = ingest::build_inlink_index(articles, aliases ? &*aliases : nullptr, c.threads);
  write_json(c.out, ingest::index_to_json(index), "index");
  log(Level::Info, "indexed ", index.entries.size(), " link targets; ", index.eligible(c.inlink_min).size(),
      " with at least ", c.inlink_min, " inbound articles");
  return 0;
}

int cmd_build_corpus(const RunConfig& c) {
  auto cfg = c.builder();
  if (cfg.strategy.kind == corpus::StrategyKind::ContextDiversity && !c.vectors.empty())
    cfg.strategy.vectors = load_vectors(c.vectors);
  cfg.validate();
  const auto articles = load_articles(c.dump.empty() ? c.in : c.dump, c.strict);
  const auto aliases = load_aliases(c.aliases);
  auto result = corpus::build_corpus(articles, cfg, aliases ? &*aliases : nullptr, c.threads);
  for (const auto& ex : result.examples) check_example(ex);

  const fs::path dir(c.out.empty() ? throw InputError("missing output directory") : c.out);
  fs::create_directories(dir);
  write_examples((dir / "corpus.jsonl").string(), result.examples);
  ojson report;
  // builder parameters only: outputs must not depend on paths or threads
  const auto full = config_to_json(c);
  for (const char* k : {"seed", "window", "query_sentences", "min_query_words", "n_ans", "n_unans", "inlink_min",
                        "anonymize_threshold", "strategy", "p", "exclude_title_matches", "dev_entities"})
    report["config"][k] = full[k];
  report["counters"] = corpus::counters_to_json(result.counters);
  report["stats"] = corpus::stats_to_json(corpus::corpus_stats(result.examples));
  const std::size_t dev_n = c.dev_entities.value_or(0);
  if (dev_n > 0) {
    auto [train, dev] = corpus::split_dev(result.examples, dev_n, c.seed);
    write_examples((dir / "train.jsonl").string(), train);
    write_examples((dir / "dev.jsonl").string(), dev);
    report["train"] = corpus::stats_to_json(corpus::corpus_stats(train));
    report["dev"] = corpus::stats_to_json(corpus::corpus_stats(dev));
  }
  write_json((dir / "report.json").string(), report, "report");
  log(Level::Info, "built ", result.examples.size(), " examples for ", result.counters.eligible_entities,
      " eligible entities");
  if (result.counters.unanswerable_short)
    log(Level::Warn, result.counters.unanswerable_short, " entities got fewer unanswerable contexts than requested");
  return 0;
}

int cmd_stats(const RunConfig& c) {
  const auto xs = read_examples(c.in);
  auto j = corpus::stats_to_json(corpus::corpus_stats(xs));
  if (c.out.empty()) std::cout << j.dump(2) << "\n";
  else write_json(c.out, j, "stats");
  return 0;
}

int cmd_split_dev(const RunConfig& c) {
  const auto xs = read_examples(c.in);
  auto [train, dev] = corpus::split_dev(xs, c.dev_entities.value_or(1000), c.seed);
  const fs::path dir(c.out.empty() ? throw InputError("missing output directory") : c.out);
  fs::create_directories(dir);
  write_examples((dir / "train.jsonl").string(), train);
  write_examples((dir / "dev.jsonl").string(), dev);
  log(Level::Info, "split ", xs.size(), " examples into ", train.size(), " train / ", dev.size(), " dev");
  return 0;
}

std::optional<tasks::LabelSchema> load_schema(const RunConfig& c, tasks::TaskKind kind) {
  if (c.templates.empty()) {
    if (kind == tasks::TaskKind::EQA || kind == tasks::TaskKind::MCQA) return std::nullopt;
    return tasks::LabelSchema::default_for(kind);
  }
  if (kind == tasks::TaskKind::EQA || kind == tasks::TaskKind::MCQA)
    throw InputError("--templates does not apply to " + std::string(tasks::task_kind_name(kind)));
  auto f = open_in(c.templates, "templates");
  try {
    return tasks::LabelSchema::from_json(kind, ojson::parse(f));
  } catch (const json::exception& e) {
    throw InputError("templates: " + std::string(e.what()));
  }
}

bool looks_like_jsonl(const std::string& path) {
  std::ifstream f(path);
  int ch;
  while ((ch = f.peek()) != EOF && text::is_space(static_cast<char>(ch))) f.get();
  return ch == '{';
}

std::vector<tasks::NerInstance> read_ner(const std::string& path) {
  auto f = open_in(path, "NER data");
  return looks_like_jsonl(path) ? tasks::read_ner_jsonl(f) : tasks::read_conll(f);
}

std::vector<tasks::TaskInstance> read_instances(const RunConfig& c, tasks::TaskKind kind,
                                                const std::optional<tasks::LabelSchema>& schema) {
  std::vector<tasks::TaskInstance> out;
  if (kind == tasks::TaskKind::NER) {
    for (auto& n : read_ner(c.in)) out.emplace_back(std::move(n));
  } else if (kind == tasks::TaskKind::EQA) {
    auto f = open_in(c.in, "EQA data");
    for (auto& e : tasks::read_eqa(f)) out.emplace_back(std::move(e));
  } else {
    auto f = open_in(c.in, "classification data");
    out = tasks::read_cls_jsonl(f, kind, schema ? &*schema : nullptr);
  }
  return out;
}

int cmd_convert_task(const RunConfig& c) {
  const auto kind = tasks::parse_task_kind(c.kind);
  const auto schema = load_schema(c, kind);
  const auto instances = read_instances(c, kind, schema);
  auto out = open_out(c.out, "converted tasks");
  std::size_t branches = 0;
  for (const auto& inst : instances) {
    const auto g = tasks::to_mrc(inst, schema);
    branches += g.branches.size();
    out << dump_line(tasks::group_to_json(g)) << "\n";
  }
  log(Level::Info, "converted ", instances.size(), " ", tasks::task_kind_name(kind), " instances into ", branches,
      " MRC examples");
  return 0;
}

int cmd_selftest(const RunConfig& c) {
  const auto rep = selftest::run_all(c.seed, c.gradient_cases, c.mask_cases, c.decode_cases);
  const auto j = rep.to_json();
  std::cout << j.dump(2) << "\n";
  if (!c.out.empty()) write_json(c.out, j, "selftest report");
  for (const auto& s : rep.suites) log(s.pass ? Level::Info : Level::Error, s.name, ": ", s.pass ? "pass" : "FAIL");
  return rep.pass() ? 0 : 2;
}

int cmd_demo_train(const RunConfig& c) {
  auto dc = c.demo();
  dc.export_scores = !c.report.empty();
  std::optional<std::ofstream> logf;
  if (!c.out.empty()) logf = open_out(c.out, "training log");
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = demo::demo_train(dc, [&](const demo::StepLog& s) {
    log(Level::Info, "step ", s.step, " loss ", s.loss, " loss_cls ", s.loss_cls, " loss_ext ", s.loss_ext);
    if (logf) {
      ojson j;
      j["step"] = s.step;
      j["loss"] = s.loss;
      j["loss_cls"] = s.loss_cls;
      j["loss_ext"] = s.loss_ext;
      *logf << j.dump() << "\n";
    }
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!c.report.empty()) {
    auto f = open_out(c.report, "score dump");
    for (const auto& s : res.scores) f << dump_line(s) << "\n";
  }
  auto summary = res.to_json();
  log(Level::Info, "finished in ", secs, " s");
  std::cout << summary.dump() << "\n";
  return 0;
}

// --- eval ------------------------------------------------------------------

std::vector<json> read_jsonl(const std::string& path, const char* what) {
  auto f = open_in(path, what);
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string id_of(const json& j) {
  if (!j.contains("id")) throw InputError("prediction record without id");
  return j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
}

template <typename T>
std::map<std::string, T> by_id(const std::vector<json>& preds, const std::function<T(const json&)>& get) {
  std::map<std::string, T> m;
  for (const auto& p : preds) {
    if (!m.emplace(id_of(p), get(p)).second) throw InputError("duplicate prediction id " + id_of(p));
  }
  return m;
}

template <typename Map, typename Ids>
void check_ids(const Map& preds, const Ids& gold_ids) {
  for (const auto& [id, v] : preds) {
    if (!gold_ids.count(id)) throw InputError("prediction id " + id + " not in gold data");
  }
}

metrics::EvalReport eval_eqa(const RunConfig& c) {
  auto f = open_in(c.gold, "gold");
  const auto gold = tasks::read_eqa(f);
  const auto preds = by_id<std::string>(read_jsonl(c.pred, "predictions"), [](const json& j) {
    return j.at("prediction").get<std::string>();
  });
  std::set<std::string> ids;
  for (const auto& g : gold) ids.insert(g.id);
  check_ids(preds, ids);
  metrics::EvalReport rep;
  rep.task_kind = "eqa";
  double f1 = 0, em = 0;
  std::size_t missing = 0;
  for (const auto& g : gold) {
    std::vector<std::string> golds;
    for (const auto& a : g.answers) golds.push_back(a.text);
    if (golds.empty()) golds.push_back("");
    auto it = preds.find(g.id);
    if (it == preds.end()) ++missing;
    const std::string pred = it == preds.end() ? "" : it->second;
    const auto s = metrics::eqa_score(pred, golds);
    f1 += s.f1;
    em += s.em;
    rep.records.push_back(ojson{{"id", g.id}, {"f1", s.f1}, {"em", s.em}});
  }
  const double n = gold.empty() ? 1.0 : static_cast<double>(gold.size());
  rep.set("f1", f1 / n);
  rep.set("em", em / n);
  rep.counts = {{"instances", gold.size()}, {"missing_predictions", missing}};
  return rep;
}

metrics::EvalReport eval_ner(const RunConfig& c) {
  const auto gold = read_ner(c.gold);
  const auto preds = by_id<std::vector<tasks::Entity>>(read_jsonl(c.pred, "predictions"), [](const json& j) {
    std::vector<tasks::Entity> es;
    for (const auto& e : j.at("entities"))
      es.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(), e.at("label").get<std::string>()});
    return es;
  });
  std::set<std::string> ids;
  for (const auto& g : gold) ids.insert(g.id);
  check_ids(preds, ids);
  metrics::EvalReport rep;
  rep.task_kind = "ner";
  metrics::NerCounts total;
  for (const auto& g : gold) {
    auto it = preds.find(g.id);
    const std::vector<tasks::Entity> none;
    const auto& p = it == preds.end() ? none : it->second;
    const auto cnt = metrics::ner_counts(p, g.entities);
    total += cnt;
    rep.records.push_back(ojson{{"id", g.id}, {"tp", cnt.true_positive}, {"pred", cnt.predicted}, {"gold", cnt.gold}});
  }
  const auto prf = total.prf();
  rep.set("precision", prf.precision);
  rep.set("recall", prf.recall);
  rep.set("f1", prf.f1);
  rep.counts = {{"instances", gold.size()},
                {"true_positive", total.true_positive},
                {"predicted", total.predicted},
                {"gold", total.gold}};
  return rep;
}

metrics::EvalReport eval_cls(const RunConfig& c, tasks::TaskKind kind) {
  const auto schema = load_schema(c, kind);
  auto f = open_in(c.gold, "gold");
  const auto gold = tasks::read_cls_jsonl(f, kind, schema ? &*schema : nullptr);
  auto label_of = [&](const tasks::TaskInstance& t) -> std::pair<std::string, std::string> {
    if (auto* m = std::get_if<tasks::McqaInstance>(&t))
      return {m->id, m->answer ? tasks::choice_tag(*m->answer) : ""};
    if (auto* s = std::get_if<tasks::SentClsInstance>(&t)) return {s->id, s->label.value_or("")};
    const auto& p = std::get<tasks::PairClsInstance>(t);
    return {p.id, p.label.value_or("")};
  };
  // canonical spelling of a label, so "positive" matches "Positive"
  auto canon = [&](const std::string& l) {
    if (kind == tasks::TaskKind::MCQA) return text::to_lower(l);
    auto k = schema->index_of(l);
    return k ? schema->labels[*k].name : l;
  };
  const auto preds = by_id<std::string>(read_jsonl(c.pred, "predictions"), [&](const json& j) -> std::string {
    const auto& v = j.contains("label") ? j.at("label") : j.at("answer");
    if (v.is_number_integer()) {
      auto k = v.get<std::size_t>();
      if (kind == tasks::TaskKind::MCQA) return tasks::choice_tag(k);
      if (k >= schema->labels.size()) throw InputError("predicted label index out of range");
      return schema->labels[k].name;
    }
    return v.get<std::string>();
  });
  std::vector<std::string> p, g;
  std::set<std::string> ids;
  metrics::EvalReport rep;
  rep.task_kind = std::string(tasks::task_kind_name(kind));
  std::size_t missing = 0;
  for (const auto& inst : gold) {
    auto [id, label] = label_of(inst);
    if (label.empty()) throw InputError("gold instance " + id + " has no label");
    ids.insert(id);
    auto it = preds.find(id);
    if (it == preds.end()) ++missing;
    p.push_back(it == preds.end() ? "" : canon(it->second));
    g.push_back(canon(label));
    rep.records.push_back(ojson{{"id", id}, {"pred", p.back()}, {"gold", g.back()}, {"correct", p.back() == g.back()}});
  }
  check_ids(preds, ids);
  rep.set("accuracy", metrics::cls_score(p, g));
  rep.counts = {{"instances", g.size()}, {"missing_predictions", missing}};
  return rep;
}

metrics::EvalReport eval_rationale(const RunConfig& c) {
  std::vector<metrics::Rationale> rs;
  for (const auto& j : read_jsonl(c.pred, "rationales")) {
    try {
      rs.push_back({id_of(j), j.at("tokens").get<std::vector<std::string>>(), j.at("start").get<std::size_t>(),
                    j.at("end").get<std::size_t>(), j.value("label", std::string{})});
    } catch (const json::exception& e) {
      throw InputError("rationale record: " + std::string(e.what()));
    }
  }
  std::optional<std::map<std::string, bool>> ann;
  if (!c.gold.empty()) {
    ann.emplace();
    for (const auto& j : read_jsonl(c.gold, "annotations")) {
      if (!ann->emplace(id_of(j), j.at("reasonable").get<bool>()).second)
        throw InputError("duplicate annotation id " + id_of(j));
    }
  }
  const auto rep = metrics::rationale_report(rs, ann);
  if (!c.review_sheet.empty()) {
    auto f = open_out(c.review_sheet, "review sheet");
    for (const auto& row : rep.sheet) f << dump_line(row) << "\n";
  }
  metrics::EvalReport out;
  out.task_kind = "rationale";
  if (rep.fraction) out.set("reasonable_fraction", *rep.fraction);
  out.counts = {{"rationales", rep.total}, {"reasonable", rep.reasonable}};
  return out;
}

int cmd_eval(const RunConfig& c) {
  metrics::EvalReport rep;
  if (c.kind == "rationale") {
    rep = eval_rationale(c);
  } else {
    const auto kind = tasks::parse_task_kind(c.kind);
    if (c.gold.empty()) throw InputError("missing --gold");
    if (kind == tasks::TaskKind::EQA) rep = eval_eqa(c);
    else if (kind == tasks::TaskKind::NER) rep = eval_ner(c);
    else rep = eval_cls(c, kind);
  }
  const auto j = rep.to_json();
  if (c.report.empty()) std::cout << j.dump(2) << "\n";
  else write_json(c.report, j, "report");
  for (const auto& [k, v] : rep.metrics) log(Level::Info, k, " = ", v);
  return 0;
}

// ---------------------------------------------------------------------------

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.starts_with("--config=")) return std::string(a.substr(9));
  }
  return {};
}

int run(int argc, char** argv) {
  RunConfig cfg;
  if (auto path = find_config_path(argc, argv); !path.empty()) cfg = load_config(path);

  CLI::App app{"wikimrc: hyperlink-to-MRC corpus toolkit"};
  app.require_subcommand(1);
  std::string config_path, dump_config;
  std::optional<std::size_t> dev_entities = cfg.dev_entities;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", config_path, "JSON config file; flags override it");
    s->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--log-level", cfg.log_level, "debug|info|warn|error|quiet");
    s->add_option("--seed", cfg.seed, "seed for every random choice");
    s->add_option("--dump-config", dump_config, "write the effective config here and continue");
  };
  auto builder_opts = [&](CLI::App* s) {
    s->add_option("--w", cfg.window, "context window W (sentences on each side)");
    s->add_option("--t", cfg.query_sentences, "definition sentences T");
    s->add_option("--min-query-words", cfg.min_query_words, "extend the query to at least this many words");
    s->add_option("--n-ans", cfg.n_ans, "answerable examples per entity");
    s->add_option("--n-unans", cfg.n_unans, "unanswerable examples per entity");
    s->add_option("--inlink-min", cfg.inlink_min, "minimum inbound linking articles");
    s->add_option("--anonymize-threshold", cfg.anonymize_threshold, "title overlap ratio for anonymization");
    s->add_option("--strategy", cfg.strategy, "random|rel-top-p|rel-top-pct|q-div|c-div");
    s->add_option("--p", cfg.p, "strategy parameter P");
    s->add_option("--vectors", cfg.vectors, "window vectors for c-div (JSONL)");
    s->add_option("--aliases", cfg.aliases, "alias table (JSON object alias -> title)");
    s->add_option("--exclude-title-matches", cfg.exclude_title_matches,
                  "drop unanswerable contexts that mention the title");
    s->add_option("--strict", cfg.strict, "abort on malformed dump records");
  };

  auto* ingest_cmd = app.add_subcommand("ingest", "dump -> segmented article JSONL");
  common(ingest_cmd);
  ingest_cmd->add_option("--dump,--in", cfg.dump, "XML dump or article JSONL");
  ingest_cmd->add_option("--out", cfg.out, "article JSONL");
  ingest_cmd->add_option("--strict", cfg.strict, "abort on malformed records");

  auto* index_cmd = app.add_subcommand("index", "articles -> inbound link index JSON");
  common(index_cmd);
  index_cmd->add_option("--in,--dump", cfg.in, "article JSONL or XML dump");
  index_cmd->add_option("--out", cfg.out, "index JSON");
  index_cmd->add_option("--aliases", cfg.aliases, "alias table");
  index_cmd->add_option("--inlink-min", cfg.inlink_min, "threshold reported in the log");
  index_cmd->add_option("--strict", cfg.strict, "abort on malformed records");

  auto* build_cmd = app.add_subcommand("build-corpus", "articles -> MRC examples");
  common(build_cmd);
  builder_opts(build_cmd);
  build_cmd->add_option("--dump,--in", cfg.dump, "XML dump or article JSONL");
  build_cmd->add_option("--out", cfg.out, "output directory");
  build_cmd->add_option("--dev-entities", dev_entities, "definition articles reserved for dev (0: no split)");

  auto* stats_cmd = app.add_subcommand("stats", "corpus statistics");
  common(stats_cmd);
  stats_cmd->add_option("--in", cfg.in, "corpus JSONL");
  stats_cmd->add_option("--out", cfg.out, "stats JSON (default stdout)");

  auto* split_cmd = app.add_subcommand("split-dev", "reserve definition articles for dev");
  common(split_cmd);
  split_cmd->add_option("--in", cfg.in, "corpus JSONL");
  split_cmd->add_option("--out", cfg.out, "output directory");
  split_cmd->add_option("--dev-entities", dev_entities, "definition articles for dev (default 1000)");

  auto* convert_cmd = app.add_subcommand("convert-task", "task data -> MRC example groups");
  common(convert_cmd);
  convert_cmd->add_option("--kind", cfg.kind, "ner|eqa|mcqa|paircls|sentcls");
  convert_cmd->add_option("--templates", cfg.templates, "label templates JSON");
  convert_cmd->add_option("--in", cfg.in, "task input");
  convert_cmd->add_option("--out", cfg.out, "group JSONL");

  auto* self_cmd = app.add_subcommand("selftest", "gradient, mask and decode checks");
  common(self_cmd);
  self_cmd->add_option("--out", cfg.out, "also write the JSON report here");
  self_cmd->add_option("--gradient-cases", cfg.gradient_cases);
  self_cmd->add_option("--mask-cases", cfg.mask_cases);
  self_cmd->add_option("--decode-cases", cfg.decode_cases);

  auto* demo_cmd = app.add_subcommand("demo-train", "fit the toy encoder and head on a synthetic set");
  common(demo_cmd);
  demo_cmd->add_option("--examples", cfg.examples, "synthetic examples in total");
  demo_cmd->add_option("--unanswerable", cfg.unanswerable, "how many of them are unanswerable");
  demo_cmd->add_option("--steps", cfg.steps, "full-batch gradient steps");
  demo_cmd->add_option("--lr", cfg.learning_rate, "fixed step size");
  demo_cmd->add_option("--dim", cfg.dim, "toy encoder width d");
  demo_cmd->add_option("--hidden", cfg.hidden, "FFN hidden width");
  demo_cmd->add_option("--target-loss", cfg.target_loss, "report the first step below this loss");
  demo_cmd->add_option("--log-every", cfg.log_every, "log interval in steps");
  demo_cmd->add_option("--out", cfg.out, "per-step loss log (JSONL)");
  demo_cmd->add_option("--report", cfg.report, "final score matrices (JSONL)");

  auto* eval_cmd = app.add_subcommand("eval", "score predictions");
  common(eval_cmd);
  eval_cmd->add_option("--kind", cfg.kind, "ner|eqa|mcqa|paircls|sentcls|rationale");
  eval_cmd->add_option("--pred", cfg.pred, "predictions JSONL");
  eval_cmd->add_option("--gold", cfg.gold, "gold data (annotations for rationale)");
  eval_cmd->add_option("--report", cfg.report, "report JSON (default stdout)");
  eval_cmd->add_option("--templates", cfg.templates, "label templates JSON");
  eval_cmd->add_option("--review-sheet", cfg.review_sheet, "rationale review sheet JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }
  cfg.dev_entities = dev_entities;
  g_level = parse_level(cfg.log_level);
  if (!dump_config.empty()) write_json(dump_config, config_to_json(cfg), "config");

  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "ingest") return cmd_ingest(cfg);
  if (name == "index") return cmd_index(cfg);
  if (name == "build-corpus") return cmd_build_corpus(cfg);
  if (name == "stats") return cmd_stats(cfg);
  if (name == "split-dev") return cmd_split_dev(cfg);
  if (name == "convert-task") return cmd_convert_task(cfg);
  if (name == "selftest") return cmd_selftest(cfg);
  if (name == "demo-train") return cmd_demo_train(cfg);
  if (name == "eval") return cmd_eval(cfg);
  throw InvariantError("unhandled subcommand " + name);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const InputError& e) {
    log(Level::Error, e.what());
    return 1;
  } catch (const InvariantError& e) {
    log(Level::Error, "invariant violation: ", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    log(Level::Error, e.what());
    return 1;
  } catch (const std::exception& e) {
    log(Level::Error, "internal error: ", e.what());
    return 2;
  }
}
