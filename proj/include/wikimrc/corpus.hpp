#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wikimrc/bm25.hpp"
#include "wikimrc/errors.hpp"
#include "wikimrc/kmeans.hpp"
#include "wikimrc/mrc_example.hpp"
#include "wikimrc/parallel.hpp"
#include "wikimrc/random.hpp"
#include "wikimrc/text.hpp"
#include "wikimrc/wiki_ingest.hpp"

namespace wikimrc::corpus {

using ingest::Anchor;
using ingest::Article;

enum class StrategyKind { Random, RelevanceTopP, RelevanceTopPercent, QueryDiversity, ContextDiversity };

inline std::string_view strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::Random: return "random";
    case StrategyKind::RelevanceTopP: return "rel-top-p";
    case StrategyKind::RelevanceTopPercent: return "rel-top-pct";
    case StrategyKind::QueryDiversity: return "q-div";
    case StrategyKind::ContextDiversity: return "c-div";
  }
  return "random";
}

inline StrategyKind parse_strategy(std::string_view s) {
  for (auto k : {StrategyKind::Random, StrategyKind::RelevanceTopP, StrategyKind::RelevanceTopPercent,
                 StrategyKind::QueryDiversity, StrategyKind::ContextDiversity}) {
    if (strategy_name(k) == s) return k;
  }
  throw InputError("unknown pairing strategy '" + std::string(s) + "'");
}

// A context window: sentences [first_sentence, last_sentence] of one article.
struct WindowKey {
  std::string article_id;
  std::size_t first_sentence = 0;
  std::size_t last_sentence = 0;

  friend bool operator==(const WindowKey&, const WindowKey&) = default;
};

inline bool operator<(const WindowKey& a, const WindowKey& b) {
  if (a.article_id != b.article_id) return ingest::id_less(a.article_id, b.article_id);
  if (a.first_sentence != b.first_sentence) return a.first_sentence < b.first_sentence;
  return a.last_sentence < b.last_sentence;
}

// Supplies an embedding for a window, or nullopt to fall back to the
// built-in hashed bag-of-words vector.
using VectorSource = std::function<std::optional<std::vector<double>>(const WindowKey&)>;

struct PairingStrategy {
  StrategyKind kind = StrategyKind::Random;
  std::size_t p = 0;  // count, or percentage for RelevanceTopPercent
  VectorSource vectors;
};

struct BuilderConfig {
  std::size_t window = 2;            // W, sentences on each side
  std::size_t query_sentences = 1;   // T
  std::size_t query_min_words = 30;
  std::size_t answerable_per_entity = 10;
  std::size_t unanswerable_per_entity = 10;
  std::size_t inlink_threshold = 10;
  double anonymize_threshold = 0.5;
  PairingStrategy strategy;
  std::size_t dev_definition_articles = 1000;
  std::uint64_t seed = 0;
  bool exclude_title_matches = true;  // unanswerable contexts must not mention the title

  void validate() const {
    if (!(anonymize_threshold > 0.0 && anonymize_threshold <= 1.0))
      throw InputError("anonymize threshold must be in (0, 1]");
    if (query_sentences == 0) throw InputError("query sentence count T must be at least 1");
    if (strategy.kind != StrategyKind::Random && strategy.p == 0)
      throw InputError("strategy '" + std::string(strategy_name(strategy.kind)) + "' needs P > 0");
  }
};

struct BuildCounters {
  std::size_t eligible_entities = 0;
  std::size_t missing_definition = 0;
  std::size_t empty_definition = 0;
  std::size_t alignment_failures = 0;
  std::size_t entities_without_context = 0;
  std::size_t unanswerable_exhausted = 0;  // entities with zero unanswerable candidates
  std::size_t unanswerable_short = 0;      // entities with fewer candidates than requested

  BuildCounters& operator+=(const BuildCounters& o) {
    eligible_entities += o.eligible_entities;
    missing_definition += o.missing_definition;
    empty_definition += o.empty_definition;
    alignment_failures += o.alignment_failures;
    entities_without_context += o.entities_without_context;
    unanswerable_exhausted += o.unanswerable_exhausted;
    unanswerable_short += o.unanswerable_short;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Query

inline std::vector<std::string> sentence_words(const Article& a, std::size_t index) {
  const auto& s = a.sentences.at(index);
  std::vector<std::string> out;
  for (auto& t : text::tokenize(std::string_view(a.text).substr(s.char_start, s.char_end - s.char_start)))
    out.push_back(std::move(t.text));
  return out;
}

// Takes T sentences starting at `first_sentence`, then keeps appending the
// following sentences while the query is shorter than query_min_words.
inline std::vector<std::string> build_query(const Article& definition, const BuilderConfig& cfg,
                                            std::size_t first_sentence = 0) {
  if (definition.sentences.empty()) throw InputError("empty definition: " + definition.title);
  if (first_sentence >= definition.sentences.size())
    throw InputError("query start sentence out of range for " + definition.title);
  std::vector<std::string> q;
  std::size_t s = first_sentence;
  for (; s < definition.sentences.size() && s < first_sentence + cfg.query_sentences; ++s) {
    auto w = sentence_words(definition, s);
    q.insert(q.end(), w.begin(), w.end());
  }
  for (; s < definition.sentences.size() && q.size() < cfg.query_min_words; ++s) {
    auto w = sentence_words(definition, s);
    q.insert(q.end(), w.begin(), w.end());
  }
  return q;
}

// ---------------------------------------------------------------------------
// Anonymization

// Normalized title tokens. "it" is excluded so the substitution token never
// matches and the operation is idempotent.
inline std::vector<std::string> title_keys(std::string_view title) {
  std::vector<std::string> keys;
  for (const auto& w : text::words(text::title_surface(title))) {
    auto k = text::match_key(w);
    if (!k.empty() && k != "it") keys.push_back(std::move(k));
  }
  return keys;
}

// |span ∩ title| (multiset) / max(|span|, |title|).
inline double overlap_ratio(std::span<const std::string> span_keys, std::span<const std::string> title) {
  if (span_keys.empty() || title.empty()) return 0.0;
  std::unordered_map<std::string, int> budget;
  for (const auto& t : title) ++budget[t];
  std::size_t hit = 0;
  for (const auto& k : span_keys) {
    auto it = budget.find(k);
    if (it != budget.end() && it->second > 0) {
      --it->second;
      ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(std::max(span_keys.size(), title.size()));
}

// Replaces every qualifying span by the single token "it". Candidate spans
// lie inside maximal runs of title tokens; inside a run the leftmost-longest
// span with ratio > threshold is replaced and the scan continues after it.
inline std::vector<std::string> anonymize_query(const std::vector<std::string>& query, std::string_view entity_title,
                                                double threshold) {
  const auto title = title_keys(entity_title);
  if (title.empty()) return query;
  const std::set<std::string> vocab(title.begin(), title.end());
  std::vector<std::string> keys;
  keys.reserve(query.size());
  for (const auto& q : query) keys.push_back(text::match_key(q));

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < query.size()) {
    if (!vocab.count(keys[i])) {
      out.push_back(query[i++]);
      continue;
    }
    std::size_t run_end = i;
    while (run_end < query.size() && vocab.count(keys[run_end])) ++run_end;
    while (i < run_end) {
      std::size_t best = 0;
      for (std::size_t e = run_end; e > i; --e) {
        if (overlap_ratio(std::span(keys).subspan(i, e - i), title) > threshold) {
          best = e;
          break;
        }
      }
      if (best) {
        out.emplace_back("it");
        i = best;
      } else {
        out.push_back(query[i++]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Context windows

struct WindowAnchor {
  std::string target;  // alias-resolved title
  std::optional<std::pair<std::size_t, std::size_t>> tokens;  // inclusive; nullopt = alignment failure
};

struct ContextWindow {
  WindowKey key;
  std::vector<std::string> tokens;
  std::vector<WindowAnchor> anchors;
};

inline std::pair<std::size_t, std::size_t> window_bounds(const Article& a, std::size_t sentence, std::size_t w) {
  std::size_t lo = sentence >= w ? sentence - w : 0;
  std::size_t hi = std::min(a.sentences.size() - 1, sentence + w);
  return {lo, hi};
}

inline ContextWindow make_window(const Article& a, std::size_t lo, std::size_t hi,
                                 const ingest::AliasTable* aliases = nullptr) {
  ContextWindow w;
  w.key = WindowKey{a.id, lo, hi};
  const std::size_t begin = a.sentences.at(lo).char_start;
  const std::size_t end = a.sentences.at(hi).char_end;
  std::vector<const Anchor*> inside;
  std::vector<std::size_t> cuts;
  for (const auto& an : a.anchors) {
    if (an.char_start >= begin && an.char_end <= end) {
      inside.push_back(&an);
      cuts.push_back(an.char_start);
      cuts.push_back(an.char_end);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  auto toks = text::tokenize(std::string_view(a.text).substr(begin, end - begin), begin, cuts);
  w.tokens.reserve(toks.size());
  for (const auto& t : toks) w.tokens.push_back(t.text);
  for (const Anchor* an : inside) {
    WindowAnchor wa;
    wa.target = aliases ? aliases->resolve(an->target_title) : an->target_title;
    std::optional<std::size_t> b, e;
    for (std::size_t k = 0; k < toks.size(); ++k) {
      if (toks[k].begin == an->char_start) b = k;
      if (toks[k].end == an->char_end) e = k;
    }
    if (b && e && *b <= *e) wa.tokens = std::make_pair(*b, *e);
    w.anchors.push_back(std::move(wa));
  }
  return w;
}

// Context of sentences [s-W, s+W] around the anchor's sentence s, clipped to
// the article, plus the anchor's span in context word coordinates.
inline std::pair<std::vector<std::string>, AnswerSpan> build_context(const Article& mention, std::size_t anchor_ordinal,
                                                                     const BuilderConfig& cfg) {
  const Anchor& an = mention.anchors.at(anchor_ordinal);
  auto s = mention.sentence_of(an.char_start, an.char_end);
  if (!s) throw InputError("alignment failure: anchor not inside a sentence of " + mention.title);
  auto [lo, hi] = window_bounds(mention, *s, cfg.window);
  ContextWindow w = make_window(mention, lo, hi);
  // anchors inside the window keep article order, so find ours by offset rank
  std::size_t rank = 0;
  for (std::size_t k = 0; k < anchor_ordinal; ++k) {
    const auto& o = mention.anchors[k];
    if (o.char_start >= mention.sentences[lo].char_start && o.char_end <= mention.sentences[hi].char_end) ++rank;
  }
  const auto& span = w.anchors.at(rank).tokens;
  if (!span) throw InputError("alignment failure: anchor '" + an.surface + "' in " + mention.title);
  return {w.tokens, make_span(w.tokens, span->first, span->second)};
}

namespace detail {

inline bool tokens_match_at(const std::vector<std::string>& ctx, std::size_t at,
                            std::span<const std::string> needle) {
  if (needle.empty() || at + needle.size() > ctx.size()) return false;
  for (std::size_t k = 0; k < needle.size(); ++k) {
    if (!text::iequals(ctx[at + k], needle[k])) return false;
  }
  return true;
}

inline bool contains_sequence(const std::vector<std::string>& ctx, std::span<const std::string> needle) {
  for (std::size_t i = 0; i + needle.size() <= ctx.size(); ++i) {
    if (tokens_match_at(ctx, i, needle)) return true;
  }
  return false;
}

}  // namespace detail

// The anchor spans plus every additional case-insensitive occurrence of any
// of their surface forms. Anchor spans always survive; other matches are
// kept leftmost-longest without overlapping anything already kept.
inline std::vector<AnswerSpan> label_all_mentions(const std::vector<std::string>& context,
                                                  std::span<const std::pair<std::size_t, std::size_t>> anchor_spans) {
  std::vector<std::pair<std::size_t, std::size_t>> kept(anchor_spans.begin(), anchor_spans.end());
  std::vector<std::vector<std::string>> surfaces;
  for (const auto& [b, e] : anchor_spans) {
    std::vector<std::string> s(context.begin() + static_cast<std::ptrdiff_t>(b),
                               context.begin() + static_cast<std::ptrdiff_t>(e) + 1);
    bool dup = std::any_of(surfaces.begin(), surfaces.end(), [&](const auto& o) {
      return o.size() == s.size() && std::equal(o.begin(), o.end(), s.begin(), [](auto& x, auto& y) {
               return text::iequals(x, y);
             });
    });
    if (!dup) surfaces.push_back(std::move(s));
  }
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (const auto& s : surfaces) {
    for (std::size_t i = 0; i + s.size() <= context.size(); ++i) {
      if (detail::tokens_match_at(context, i, s)) matches.emplace_back(i, i + s.size() - 1);
    }
  }
  std::sort(matches.begin(), matches.end(), [](const auto& l, const auto& r) {
    if (l.first != r.first) return l.first < r.first;
    return l.second > r.second;
  });
  auto overlaps = [&](std::pair<std::size_t, std::size_t> m) {
    return std::any_of(kept.begin(), kept.end(),
                       [&](const auto& k) { return m.first <= k.second && k.first <= m.second; });
  };
  for (const auto& m : matches) {
    if (!overlaps(m)) kept.push_back(m);
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  std::vector<AnswerSpan> out;
  out.reserve(kept.size());
  for (const auto& [b, e] : kept) out.push_back(make_span(context, b, e));
  return out;
}

// ---------------------------------------------------------------------------
// Pairing

// 64-dim hashed bag of words, L2-normalized.
inline std::vector<double> hashed_bow(const std::vector<std::string>& tokens) {
  std::vector<double> v(64, 0.0);
  for (const auto& t : tokens) v[fnv1a64(text::to_lower(t)) % v.size()] += 1.0;
  double n = 0;
  for (double x : v) n += x * x;
  if (n > 0) {
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  }
  return v;
}

// A window that can answer the entity's query, with its labeled answers.
struct Candidate {
  const ContextWindow* window = nullptr;
  std::vector<AnswerSpan> answers;
};

// Indices into `candidates` (which are in canonical window order) picked by
// the strategy, returned ascending.
inline std::vector<std::size_t> select_contexts(std::span<const Candidate> candidates,
                                                const std::vector<std::string>& query, const BuilderConfig& cfg,
                                                Rng& rng) {
  const std::size_t n = candidates.size();
  const std::size_t want = cfg.answerable_per_entity;
  const auto& st = cfg.strategy;
  switch (st.kind) {
    case StrategyKind::Random:
    case StrategyKind::QueryDiversity:
      return rng.sample_indices(n, want);
    case StrategyKind::RelevanceTopP:
    case StrategyKind::RelevanceTopPercent: {
      std::size_t take = st.kind == StrategyKind::RelevanceTopP
                             ? st.p
                             : static_cast<std::size_t>(std::ceil(static_cast<double>(st.p) * n / 100.0));
      take = std::min({take, want, n});
      std::vector<std::vector<std::string>> docs;
      docs.reserve(n);
      for (const auto& c : candidates) docs.push_back(c.window->tokens);
      Bm25 bm25(docs);
      std::vector<std::pair<double, std::size_t>> scored;
      for (std::size_t i = 0; i < n; ++i) scored.emplace_back(bm25.score(query, i), i);
      std::stable_sort(scored.begin(), scored.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].second);
      std::sort(out.begin(), out.end());
      return out;
    }
    case StrategyKind::ContextDiversity: {
      std::vector<std::vector<double>> points;
      points.reserve(n);
      for (const auto& c : candidates) {
        std::optional<std::vector<double>> v;
        if (st.vectors) v = st.vectors(c.window->key);
        points.push_back(v ? std::move(*v) : hashed_bow(c.window->tokens));
      }
      auto km = kmeans(points, st.p, rng.next());
      std::map<std::size_t, std::vector<std::size_t>> members;  // cluster -> candidate indices
      for (std::size_t i = 0; i < n; ++i) members[km.assignment[i]].push_back(i);
      // clusters in order of their first member
      std::vector<std::vector<std::size_t>> clusters;
      for (auto& [_, m] : members) clusters.push_back(std::move(m));
      std::sort(clusters.begin(), clusters.end(), [](const auto& l, const auto& r) { return l.front() < r.front(); });
      std::vector<std::size_t> out;
      for (const auto& m : clusters) {
        if (out.size() >= want) break;
        out.push_back(m[rng.below(m.size())]);
      }
      std::sort(out.begin(), out.end());
      return out;
    }
  }
  return {};
}

inline std::string example_id(const std::string& entity, char kind, std::size_t k) {
  std::string num = std::to_string(k);
  if (num.size() < 4) num.insert(0, 4 - num.size(), '0');
  return entity + "#" + kind + num;
}

// Query provider: base query, or a per-example draw for QueryDiversity.
struct QuerySource {
  const Article* definition = nullptr;
  const BuilderConfig* cfg = nullptr;
  std::vector<std::string> base;  // anonymized, from sentence 0

  std::vector<std::string> next(Rng& rng) const {
    if (cfg->strategy.kind != StrategyKind::QueryDiversity) return base;
    std::size_t limit = std::min(cfg->strategy.p, definition->sentences.size());
    std::size_t start = static_cast<std::size_t>(rng.below(limit));
    return anonymize_query(build_query(*definition, *cfg, start), definition->title, cfg->anonymize_threshold);
  }
};

inline std::vector<MrcExample> pair_answerable(const std::string& entity, const Article& definition,
                                               std::span<const Candidate> candidates, const QuerySource& queries,
                                               const BuilderConfig& cfg) {
  Rng select_rng(derive_seed(cfg.seed, entity + "\x1f" "answerable"));
  Rng query_rng(derive_seed(cfg.seed, entity + "\x1f" "query"));
  std::vector<MrcExample> out;
  for (std::size_t idx : select_contexts(candidates, queries.base, cfg, select_rng)) {
    const Candidate& c = candidates[idx];
    MrcExample ex;
    ex.example_id = example_id(entity, 'a', out.size());
    ex.entity_title = entity;
    ex.query = queries.next(query_rng);
    ex.context = c.window->tokens;
    ex.answers = c.answers;
    ex.answerable = true;
    ex.provenance = Provenance{definition.id, c.window->key.article_id, std::string(strategy_name(cfg.strategy.kind))};
    out.push_back(std::move(ex));
  }
  return out;
}

// Windows with no anchor to the entity and (unless disabled) no
// case-insensitive occurrence of the entity title.
inline std::vector<MrcExample> pair_unanswerable(const std::string& entity, const Article& definition,
                                                 std::span<const ContextWindow> pool, const QuerySource& queries,
                                                 const BuilderConfig& cfg, BuildCounters* counters = nullptr) {
  const auto title_words = text::words(text::title_surface(entity));
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& w = pool[i];
    bool linked = std::any_of(w.anchors.begin(), w.anchors.end(), [&](const auto& a) { return a.target == entity; });
    if (linked) continue;
    if (cfg.exclude_title_matches && detail::contains_sequence(w.tokens, title_words)) continue;
    usable.push_back(i);
  }
  if (counters) {
    if (usable.empty() && cfg.unanswerable_per_entity > 0) ++counters->unanswerable_exhausted;
    else if (usable.size() < cfg.unanswerable_per_entity) ++counters->unanswerable_short;
  }
  Rng select_rng(derive_seed(cfg.seed, entity + "\x1f" "unanswerable"));
  Rng query_rng(derive_seed(cfg.seed, entity + "\x1f" "query-u"));
  std::vector<MrcExample> out;
  for (std::size_t k : select_rng.sample_indices(usable.size(), cfg.unanswerable_per_entity)) {
    const ContextWindow& w = pool[usable[k]];
    MrcExample ex;
    ex.example_id = example_id(entity, 'u', out.size());
    ex.entity_title = entity;
    ex.query = queries.next(query_rng);
    ex.context = w.tokens;
    ex.answerable = false;
    ex.provenance = Provenance{definition.id, w.key.article_id, std::string(strategy_name(cfg.strategy.kind))};
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole-corpus build

struct BuildResult {
  std::vector<MrcExample> examples;  // sorted by entity title, then example id
  BuildCounters counters;
};

// Articles must be segmented. Output is independent of `threads` and of
// the input article order.
inline BuildResult build_corpus(std::span<const Article> articles, const BuilderConfig& cfg,
                                const ingest::AliasTable* aliases = nullptr, std::size_t threads = 1) {
  cfg.validate();
  BuildResult result;

  // definitions by title; duplicate titles resolve to the smallest id
  std::unordered_map<std::string, std::size_t> by_title;
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    auto [it, fresh] = by_title.emplace(articles[i].title, i);
    if (!fresh && ingest::id_less(articles[i].id, articles[it->second].id)) it->second = i;
    by_id.emplace(articles[i].id, i);
  }

  const auto index = ingest::build_inlink_index(articles, aliases, threads);
  struct Entity {
    std::string title;
    const Article* definition = nullptr;
    std::vector<WindowKey> windows;  // unique, canonical order
  };
  std::vector<Entity> entities;
  std::map<WindowKey, std::size_t> window_slot;
  for (const auto& title : index.eligible(cfg.inlink_threshold)) {
    auto def = by_title.find(title);
    if (def == by_title.end()) {
      ++result.counters.missing_definition;
      continue;
    }
    const Article& d = articles[def->second];
    if (d.sentences.empty()) {
      ++result.counters.empty_definition;
      continue;
    }
    Entity e{title, &d, {}};
    std::set<WindowKey> keys;
    for (const auto& ref : index.entries.at(title).mention_refs) {
      const Article& m = articles[by_id.at(ref.article_id)];
      const Anchor& an = m.anchors[ref.anchor_ordinal];
      auto s = m.sentence_of(an.char_start, an.char_end);
      if (!s) {
        ++result.counters.alignment_failures;
        continue;
      }
      auto [lo, hi] = window_bounds(m, *s, cfg.window);
      keys.insert(WindowKey{m.id, lo, hi});
    }
    e.windows.assign(keys.begin(), keys.end());
    for (const auto& k : e.windows) window_slot.emplace(k, 0);
    entities.push_back(std::move(e));
  }
  result.counters.eligible_entities = entities.size();

  // tokenize every distinct window once; this is also the unanswerable pool
  std::vector<ContextWindow> pool(window_slot.size());
  {
    std::vector<const WindowKey*> keys;
    keys.reserve(window_slot.size());
    std::size_t slot = 0;
    for (auto& [k, s] : window_slot) {
      s = slot++;
      keys.push_back(&k);
    }
    parallel_for(keys.size(), threads, [&](std::size_t i) {
      const Article& a = articles[by_id.at(keys[i]->article_id)];
      pool[i] = make_window(a, keys[i]->first_sentence, keys[i]->last_sentence, aliases);
    });
  }

  std::vector<std::vector<MrcExample>> per_entity(entities.size());
  std::vector<BuildCounters> per_counters(entities.size());
  parallel_for(entities.size(), threads, [&](std::size_t ei) {
    const Entity& e = entities[ei];
    BuildCounters& counters = per_counters[ei];
    std::vector<Candidate> candidates;
    for (const auto& key : e.windows) {
      const ContextWindow& w = pool[window_slot.at(key)];
      std::vector<std::pair<std::size_t, std::size_t>> spans;
      for (const auto& a : w.anchors) {
        if (a.target != e.title) continue;
        if (a.tokens) spans.push_back(*a.tokens);
        else ++counters.alignment_failures;
      }
      if (spans.empty()) continue;
      candidates.push_back(Candidate{&w, label_all_mentions(w.tokens, spans)});
    }
    if (candidates.empty()) {
      ++counters.entities_without_context;
      return;
    }
    QuerySource queries;
    queries.definition = e.definition;
    queries.cfg = &cfg;
    queries.base = anonymize_query(build_query(*e.definition, cfg), e.title, cfg.anonymize_threshold);
    auto ans = pair_answerable(e.title, *e.definition, candidates, queries, cfg);
    auto unans = pair_unanswerable(e.title, *e.definition, pool, queries, cfg, &counters);
    auto& out = per_entity[ei];
    out = std::move(ans);
    out.insert(out.end(), std::make_move_iterator(unans.begin()), std::make_move_iterator(unans.end()));
  });

  for (std::size_t i = 0; i < entities.size(); ++i) {
    result.counters += per_counters[i];
    for (auto& ex : per_entity[i]) result.examples.push_back(std::move(ex));
  }
  std::stable_sort(result.examples.begin(), result.examples.end(), [](const MrcExample& l, const MrcExample& r) {
    if (l.entity_title != r.entity_title) return l.entity_title < r.entity_title;
    return l.example_id < r.example_id;
  });
  return result;
}

// ---------------------------------------------------------------------------
// Dev split and statistics

// Reserves n definition articles (seeded); every example built from their
// queries goes to dev.
inline std::pair<std::vector<MrcExample>, std::vector<MrcExample>> split_dev(const std::vector<MrcExample>& corpus,
                                                                             std::size_t n, std::uint64_t seed) {
  std::set<std::string, decltype(&ingest::id_less)> defs(&ingest::id_less);
  for (const auto& ex : corpus) defs.insert(ex.provenance.definition_id);
  if (defs.size() < n)
    throw InputError("cannot reserve " + std::to_string(n) + " definition articles: corpus has " +
                     std::to_string(defs.size()));
  std::vector<std::string> ordered(defs.begin(), defs.end());
  Rng rng(derive_seed(seed, "dev-split"));
  std::set<std::string> dev_defs;
  for (std::size_t i : rng.sample_indices(ordered.size(), n)) dev_defs.insert(ordered[i]);
  std::pair<std::vector<MrcExample>, std::vector<MrcExample>> out;
  for (const auto& ex : corpus) {
    (dev_defs.count(ex.provenance.definition_id) ? out.second : out.first).push_back(ex);
  }
  return out;
}

struct CorpusStats {
  std::size_t examples = 0;
  std::size_t answerable = 0;
  std::size_t unanswerable = 0;
  std::size_t total_words = 0;  // query + context tokens
  std::size_t entities = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

inline CorpusStats corpus_stats(std::span<const MrcExample> corpus) {
  CorpusStats s;
  std::set<std::string> entities;
  for (const auto& ex : corpus) {
    ++s.examples;
    (ex.answerable ? s.answerable : s.unanswerable) += 1;
    s.total_words += ex.query.size() + ex.context.size();
    entities.insert(ex.entity_title);
  }
  s.entities = entities.size();
  return s;
}

inline nlohmann::ordered_json stats_to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  j["examples"] = s.examples;
  j["answerable"] = s.answerable;
  j["unanswerable"] = s.unanswerable;
  j["total_words"] = s.total_words;
  j["entities"] = s.entities;
  return j;
}

inline nlohmann::ordered_json counters_to_json(const BuildCounters& c) {
  nlohmann::ordered_json j;
  j["eligible_entities"] = c.eligible_entities;
  j["missing_definition"] = c.missing_definition;
  j["empty_definition"] = c.empty_definition;
  j["alignment_failures"] = c.alignment_failures;
  j["entities_without_context"] = c.entities_without_context;
  j["unanswerable_exhausted"] = c.unanswerable_exhausted;
  j["unanswerable_short"] = c.unanswerable_short;
  return j;
}

}  // namespace wikimrc::corpus
