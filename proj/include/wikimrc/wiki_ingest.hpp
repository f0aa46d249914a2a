#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wikimrc/errors.hpp"
#include "wikimrc/parallel.hpp"
#include "wikimrc/text.hpp"

namespace wikimrc::ingest {

struct RawArticle {
  std::string id;
  std::string title;
  std::string markup;
};

// Offsets are byte offsets into Article::text, end exclusive.
struct Anchor {
  std::string target_title;
  std::string surface;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct Sentence {
  std::size_t index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t word_count = 0;
};

struct Article {
  std::string id;
  std::string title;
  std::string text;
  std::vector<Anchor> anchors;
  std::vector<Sentence> sentences;

  // Index of the sentence containing [begin, end), if any single one does.
  std::optional<std::size_t> sentence_of(std::size_t begin, std::size_t end) const {
    auto it = std::upper_bound(sentences.begin(), sentences.end(), begin,
                               [](std::size_t pos, const Sentence& s) { return pos < s.char_start; });
    if (it == sentences.begin()) return std::nullopt;
    --it;
    if (begin >= it->char_start && end <= it->char_end) return it->index;
    return std::nullopt;
  }
};

// Orders ids numerically when both are digit strings, lexicographically
// otherwise. Used wherever output order must not depend on input order.
inline bool id_less(std::string_view a, std::string_view b) {
  auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  };
  if (digits(a) && digits(b)) {
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

// ---------------------------------------------------------------------------
// Titles

// MediaWiki-style canonical form: underscores to spaces, collapsed blanks,
// no "#fragment", upper-case first letter.
inline std::string canonical_title(std::string_view raw) {
  auto hash = raw.find('#');
  if (hash != std::string_view::npos) raw = raw.substr(0, hash);
  std::string out;
  bool pending_space = false;
  for (char c : raw) {
    if (c == '_') c = ' ';
    if (text::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

// Optional redirect/alias resolution. Empty by default: the toolkit makes no
// resolution of its own.
class AliasTable {
 public:
  void add(std::string_view alias, std::string_view canonical) {
    map_[canonical_title(alias)] = canonical_title(canonical);
  }
  std::string resolve(const std::string& title) const {
    auto it = map_.find(title);
    return it == map_.end() ? title : it->second;
  }
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }

  // JSON object {"alias": "canonical", ...}
  static AliasTable from_json(const nlohmann::json& j) {
    AliasTable t;
    if (!j.is_object()) throw InputError("alias table must be a JSON object");
    for (auto& [k, v] : j.items()) {
      if (!v.is_string()) throw InputError("alias table value for '" + k + "' is not a string");
      t.add(k, v.get<std::string>());
    }
    return t;
  }

 private:
  std::unordered_map<std::string, std::string> map_;
};

// ---------------------------------------------------------------------------
// Markup to text + anchors

namespace detail {

inline bool starts_with(std::string_view s, std::size_t i, std::string_view p) {
  return s.size() >= i + p.size() && s.compare(i, p.size(), p) == 0;
}

inline bool istarts_with(std::string_view s, std::size_t i, std::string_view p) {
  return s.size() >= i + p.size() && text::iequals(s.substr(i, p.size()), p);
}

// Drops <!-- -->, <ref>...</ref>, <ref/>, balanced {{...}} and bold/italic
// quote runs. Everything else passes through.
inline std::string strip_noise(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (starts_with(s, i, "<!--")) {
      auto e = s.find("-->", i + 4);
      i = e == std::string_view::npos ? s.size() : e + 3;
      continue;
    }
    if (istarts_with(s, i, "<ref") && i + 4 < s.size() &&
        (s[i + 4] == '>' || s[i + 4] == ' ' || s[i + 4] == '/')) {
      auto gt = s.find('>', i);
      if (gt == std::string_view::npos) {
        i = s.size();
        continue;
      }
      if (s[gt - 1] == '/') {
        i = gt + 1;
        continue;
      }
      std::size_t close = std::string_view::npos;
      for (std::size_t k = gt + 1; k + 6 <= s.size(); ++k) {
        if (istarts_with(s, k, "</ref>")) {
          close = k;
          break;
        }
      }
      i = close == std::string_view::npos ? s.size() : close + 6;
      continue;
    }
    if (starts_with(s, i, "{{")) {
      std::size_t depth = 0, k = i;
      while (k < s.size()) {
        if (starts_with(s, k, "{{")) {
          ++depth;
          k += 2;
        } else if (starts_with(s, k, "}}")) {
          --depth;
          k += 2;
          if (depth == 0) break;
        } else {
          ++k;
        }
      }
      i = k;
      continue;
    }
    if (starts_with(s, i, "''")) {
      while (i < s.size() && s[i] == '\'') ++i;
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

inline bool is_namespaced(std::string_view inner) {
  static constexpr std::string_view kNamespaces[] = {"category:", "file:", "image:", "media:",
                                                     "template:", "wikipedia:", "help:", "portal:",
                                                     "special:", "wikt:", "wiktionary:"};
  auto t = text::trim(inner);
  for (auto ns : kNamespaces) {
    if (istarts_with(t, 0, ns)) return true;
  }
  return false;
}

// Finds the "]]" closing the "[[" at i. Returns npos when unmatched.
inline std::size_t matching_close(std::string_view s, std::size_t i, bool& nested) {
  std::size_t depth = 0;
  nested = false;
  std::size_t k = i;
  while (k < s.size()) {
    if (starts_with(s, k, "[[")) {
      if (depth > 0) nested = true;
      ++depth;
      k += 2;
    } else if (starts_with(s, k, "]]")) {
      --depth;
      if (depth == 0) return k;
      k += 2;
    } else {
      ++k;
    }
  }
  return std::string_view::npos;
}

// First '|' outside nested [[ ]].
inline std::size_t top_level_pipe(std::string_view inner) {
  std::size_t depth = 0;
  for (std::size_t k = 0; k < inner.size(); ++k) {
    if (starts_with(inner, k, "[[")) {
      ++depth;
      ++k;
    } else if (starts_with(inner, k, "]]")) {
      if (depth) --depth;
      ++k;
    } else if (inner[k] == '|' && depth == 0) {
      return k;
    }
  }
  return std::string_view::npos;
}

inline void render_links(std::string_view s, std::string& out, std::vector<Anchor>* anchors) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (starts_with(s, i, "[[")) {
      bool nested = false;
      std::size_t close = matching_close(s, i, nested);
      if (close == std::string_view::npos) {
        i += 2;  // unmatched opener: drop the decoration
        continue;
      }
      std::string_view inner = s.substr(i + 2, close - i - 2);
      i = close + 2;
      if (is_namespaced(inner)) continue;
      std::size_t pipe = top_level_pipe(inner);
      std::string_view target = pipe == std::string_view::npos ? inner : inner.substr(0, pipe);
      std::string_view surface = pipe == std::string_view::npos ? inner : inner.substr(pipe + 1);
      if (nested) {
        render_links(surface, out, nullptr);
        continue;
      }
      std::string canonical = canonical_title(target);
      // keep surrounding whitespace outside the anchor span
      std::size_t lead = 0;
      while (lead < surface.size() && text::is_space(surface[lead])) ++lead;
      std::string_view core = text::trim(surface);
      out.append(surface.substr(0, lead));
      if (anchors && !canonical.empty() && !core.empty() &&
          core.find('[') == std::string_view::npos && core.find(']') == std::string_view::npos) {
        Anchor a;
        a.target_title = std::move(canonical);
        a.surface = std::string(core);
        a.char_start = out.size();
        out.append(core);
        a.char_end = out.size();
        anchors->push_back(std::move(a));
      } else {
        out.append(core);
      }
      out.append(surface.substr(lead + core.size()));
      continue;
    }
    if (starts_with(s, i, "]]")) {
      i += 2;  // stray closer
      continue;
    }
    out.push_back(s[i++]);
  }
}

}  // namespace detail

// Link syntax [[Target]] and [[Target|surface]]. Nested or unmatched
// brackets are stripped without producing an anchor; namespaced links
// (Category:, File:, ...) are removed entirely.
inline Article extract_anchors(const RawArticle& raw) {
  Article a;
  a.id = raw.id;
  a.title = raw.title;
  const std::string cleaned = detail::strip_noise(raw.markup);
  detail::render_links(cleaned, a.text, &a.anchors);
  return a;
}

// ---------------------------------------------------------------------------
// Sentence segmentation

struct SegmentStats {
  std::size_t dropped_anchors = 0;
};

namespace detail {

inline bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

// Closing quote or bracket length at position k, or 0.
inline std::size_t closer_at(std::string_view s, std::size_t k) {
  char c = s[k];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with(s, k, "\xE2\x80\x9D") || starts_with(s, k, "\xE2\x80\x99")) return 3;
  return 0;
}

inline bool inside_anchor(const std::vector<Anchor>& anchors, std::size_t pos) {
  for (const auto& a : anchors) {
    if (a.char_start < pos && pos < a.char_end) return true;
  }
  return false;
}

}  // namespace detail

// Rule-based and deterministic: a sentence ends after . ? or ! (plus any
// closing quotes/brackets) followed by whitespace or end of text, unless the
// word ending in '.' is an abbreviation or the boundary would fall inside an
// anchor. A blank line is also a boundary. Trailing whitespace belongs to
// the preceding sentence, so sentence spans partition the text.
inline Article segment_sentences(Article article,
                                 const text::AbbreviationRules& rules = text::AbbreviationRules::standard(),
                                 SegmentStats* stats = nullptr) {
  const std::string_view s = article.text;
  std::vector<std::size_t> cuts;
  std::size_t i = 0;
  auto skip_space = [&](std::size_t k) {
    while (k < s.size() && text::is_space(s[k])) ++k;
    return k;
  };
  while (i < s.size()) {
    char c = s[i];
    if (detail::is_terminator(c)) {
      std::size_t k = i + 1;
      while (k < s.size() && detail::is_terminator(s[k])) ++k;
      while (k < s.size()) {
        std::size_t n = detail::closer_at(s, k);
        if (!n) break;
        k += n;
      }
      bool at_break = k == s.size() || text::is_space(s[k]);
      if (at_break && c == '.' && k == i + 1) {
        std::size_t w = i;
        while (w > 0 && !text::is_space(s[w - 1])) --w;
        while (w < i && !std::isalnum(static_cast<unsigned char>(s[w]))) ++w;
        if (rules.matches(s.substr(w, i + 1 - w))) at_break = false;
      }
      if (at_break && detail::inside_anchor(article.anchors, k)) at_break = false;
      if (at_break) {
        std::size_t e = skip_space(k);
        if (e < s.size()) cuts.push_back(e);
        i = e;
        continue;
      }
      i = k;
      continue;
    }
    if (c == '\n') {
      std::size_t k = i + 1;
      while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == '\r')) ++k;
      if (k < s.size() && s[k] == '\n' && !detail::inside_anchor(article.anchors, i)) {
        std::size_t e = skip_space(k);
        bool has_content = false;
        std::size_t start = cuts.empty() ? 0 : cuts.back();
        for (std::size_t p = start; p < i; ++p) {
          if (!text::is_space(s[p])) {
            has_content = true;
            break;
          }
        }
        if (e < s.size() && has_content) cuts.push_back(e);
        i = e;
        continue;
      }
    }
    ++i;
  }

  article.sentences.clear();
  if (!s.empty()) {
    std::size_t start = 0;
    cuts.push_back(s.size());
    for (std::size_t cut : cuts) {
      if (cut <= start) continue;
      Sentence sent;
      sent.index = article.sentences.size();
      sent.char_start = start;
      sent.char_end = cut;
      sent.word_count = text::tokenize(s.substr(start, cut - start), start, {}, rules).size();
      article.sentences.push_back(sent);
      start = cut;
    }
  }

  // Anchors must sit inside exactly one sentence.
  std::vector<Anchor> kept;
  kept.reserve(article.anchors.size());
  for (auto& a : article.anchors) {
    if (article.sentence_of(a.char_start, a.char_end)) {
      kept.push_back(std::move(a));
    } else if (stats) {
      ++stats->dropped_anchors;
    }
  }
  article.anchors = std::move(kept);
  return article;
}

// ---------------------------------------------------------------------------
// Streaming dump readers

enum class DumpFormat { Xml, Jsonl };

struct ReaderOptions {
  bool strict = false;
};

namespace detail {

inline std::string xml_unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    std::string_view ent = s.substr(i + 1, semi - i - 1);
    std::uint32_t cp = 0;
    bool ok = true;
    if (ent == "lt") cp = '<';
    else if (ent == "gt") cp = '>';
    else if (ent == "amp") cp = '&';
    else if (ent == "quot") cp = '"';
    else if (ent == "apos") cp = '\'';
    else if (ent == "nbsp") cp = 0xA0;
    else if (!ent.empty() && ent[0] == '#') {
      try {
        cp = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                 ? static_cast<std::uint32_t>(std::stoul(std::string(ent.substr(2)), nullptr, 16))
                 : static_cast<std::uint32_t>(std::stoul(std::string(ent.substr(1))));
      } catch (...) {
        ok = false;
      }
    } else {
      ok = false;
    }
    if (!ok || cp > 0x10FFFF) {
      out.push_back(s[i++]);
      continue;
    }
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    i = semi + 1;
  }
  return out;
}

// Content of the first <tag ...>...</tag> in `page`; "" for <tag/>.
inline std::optional<std::string_view> element(std::string_view page, std::string_view tag) {
  std::string open = "<" + std::string(tag);
  std::size_t pos = 0;
  while (true) {
    pos = page.find(open, pos);
    if (pos == std::string_view::npos) return std::nullopt;
    char after = pos + open.size() < page.size() ? page[pos + open.size()] : '\0';
    if (after == '>' || after == ' ' || after == '/' || after == '\t' || after == '\n') break;
    pos += open.size();
  }
  auto gt = page.find('>', pos);
  if (gt == std::string_view::npos) return std::nullopt;
  if (page[gt - 1] == '/') return std::string_view{};
  std::string close = "</" + std::string(tag) + ">";
  auto end = page.find(close, gt + 1);
  if (end == std::string_view::npos) return std::nullopt;
  return page.substr(gt + 1, end - gt - 1);
}

}  // namespace detail

// Streams <page><title/><id/><text/></page> records. Memory is bounded by
// the largest single page. A record that is cut off (EOF or a new <page>
// before </page>) or lacks title/id/text is malformed: counted and skipped
// in lenient mode, InputError in strict mode.
class XmlDumpReader {
 public:
  explicit XmlDumpReader(std::istream& in, ReaderOptions opts = {}) : in_(in), opts_(opts) {}

  std::optional<RawArticle> next() {
    while (true) {
      std::size_t start = find("<page", 0);
      if (start == npos) return std::nullopt;
      consume(start);
      std::size_t close = find("</page>", 5);
      std::size_t reopen = find("<page", 5);
      if (close == npos || (reopen != npos && reopen < close)) {
        malformed("truncated <page> record");
        if (reopen == npos) {
          buf_.clear();
          return std::nullopt;
        }
        consume(reopen);
        continue;
      }
      std::string_view page(buf_.data() + 0, close + 7);
      auto title = detail::element(page, "title");
      auto id = detail::element(page, "id");
      auto body = detail::element(page, "text");
      std::optional<RawArticle> rec;
      if (title && id && body) {
        RawArticle r;
        r.title = canonical_title(detail::xml_unescape(text::trim(*title)));
        r.id = std::string(text::trim(*id));
        r.markup = detail::xml_unescape(*body);
        if (!r.title.empty() && !r.id.empty()) rec = std::move(r);
      }
      consume(close + 7);
      if (rec) return rec;
      malformed("page without title, id or text");
    }
  }

  std::size_t skipped() const { return skipped_; }

 private:
  static constexpr std::size_t npos = std::string::npos;

  // Finds `needle` at or after `from`, reading more input as needed.
  std::size_t find(std::string_view needle, std::size_t from) {
    std::size_t scan = from;
    while (true) {
      auto p = buf_.find(needle, scan);
      if (p != npos) return p;
      if (buf_.size() >= needle.size()) scan = std::max(from, buf_.size() - needle.size() + 1);
      if (!fill()) return npos;
    }
  }

  bool fill() {
    if (!in_) return false;
    char chunk[1 << 16];
    in_.read(chunk, sizeof(chunk));
    auto got = in_.gcount();
    if (got <= 0) return false;
    buf_.append(chunk, static_cast<std::size_t>(got));
    return true;
  }

  void consume(std::size_t n) { buf_.erase(0, n); }

  void malformed(const std::string& what) {
    if (opts_.strict) throw InputError("malformed dump record: " + what);
    ++skipped_;
  }

  std::istream& in_;
  ReaderOptions opts_;
  std::string buf_;
  std::size_t skipped_ = 0;
};

inline std::vector<RawArticle> parse_dump(std::istream& in, ReaderOptions opts = {},
                                          std::size_t* skipped = nullptr) {
  XmlDumpReader reader(in, opts);
  std::vector<RawArticle> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  if (skipped) *skipped = reader.skipped();
  return out;
}

// ---------------------------------------------------------------------------
// JSON-lines article schema (offsets in code points):
// {"id","title","text","anchors":[{"target","start","end"}],"sentences":[{"start","end"}]}

inline nlohmann::ordered_json article_to_json(const Article& a) {
  nlohmann::ordered_json j;
  j["id"] = a.id;
  j["title"] = a.title;
  j["text"] = a.text;
  const auto table = text::codepoint_byte_table(a.text);
  auto cp = [&](std::size_t byte) {
    return static_cast<std::size_t>(std::lower_bound(table.begin(), table.end(), byte) - table.begin());
  };
  auto anchors = nlohmann::ordered_json::array();
  for (const auto& an : a.anchors) {
    nlohmann::ordered_json x;
    x["target"] = an.target_title;
    x["start"] = cp(an.char_start);
    x["end"] = cp(an.char_end);
    anchors.push_back(std::move(x));
  }
  j["anchors"] = std::move(anchors);
  if (!a.sentences.empty()) {
    auto sents = nlohmann::ordered_json::array();
    for (const auto& s : a.sentences) {
      nlohmann::ordered_json x;
      x["start"] = cp(s.char_start);
      x["end"] = cp(s.char_end);
      sents.push_back(std::move(x));
    }
    j["sentences"] = std::move(sents);
  }
  return j;
}

inline std::string id_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw InputError("article id must be a string or integer");
}

inline Article article_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("article record is not a JSON object");
  Article a;
  try {
    a.id = id_string(j.at("id"));
    a.title = canonical_title(j.at("title").get<std::string>());
    a.text = j.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("article record: ") + e.what());
  }
  if (a.title.empty()) throw InputError("article " + a.id + " has an empty title");
  const auto table = text::codepoint_byte_table(a.text);
  const std::size_t n_cp = table.size() - 1;
  auto byte = [&](const nlohmann::json& v) {
    if (!v.is_number_integer() || v.get<long long>() < 0 || static_cast<std::size_t>(v.get<long long>()) > n_cp)
      throw InputError("article " + a.id + ": offset out of range");
    return table[v.get<std::size_t>()];
  };
  if (j.contains("anchors")) {
    for (const auto& x : j.at("anchors")) {
      Anchor an;
      an.target_title = canonical_title(x.at("target").get<std::string>());
      an.char_start = byte(x.at("start"));
      an.char_end = byte(x.at("end"));
      if (an.char_start >= an.char_end) throw InputError("article " + a.id + ": empty anchor span");
      an.surface = a.text.substr(an.char_start, an.char_end - an.char_start);
      a.anchors.push_back(std::move(an));
    }
    std::sort(a.anchors.begin(), a.anchors.end(),
              [](const Anchor& l, const Anchor& r) { return l.char_start < r.char_start; });
    for (std::size_t k = 1; k < a.anchors.size(); ++k) {
      if (a.anchors[k].char_start < a.anchors[k - 1].char_end)
        throw InputError("article " + a.id + ": overlapping anchors");
    }
  }
  if (j.contains("sentences")) {
    std::size_t expect = 0;
    for (const auto& x : j.at("sentences")) {
      Sentence s;
      s.index = a.sentences.size();
      s.char_start = byte(x.at("start"));
      s.char_end = byte(x.at("end"));
      if (s.char_start != expect || s.char_end <= s.char_start)
        throw InputError("article " + a.id + ": sentences do not partition the text");
      expect = s.char_end;
      s.word_count = text::tokenize(std::string_view(a.text).substr(s.char_start, s.char_end - s.char_start)).size();
      a.sentences.push_back(s);
    }
    if (!a.sentences.empty() && expect != a.text.size())
      throw InputError("article " + a.id + ": sentences do not cover the text");
  }
  return a;
}

// Reads either dump format, yielding extracted (not yet segmented unless the
// JSON record carries sentences) articles in stream order.
class ArticleReader {
 public:
  ArticleReader(std::istream& in, ReaderOptions opts = {}) : in_(in), opts_(opts), xml_(in, opts) {
    // peek the first non-blank byte to pick the format
    int c;
    while ((c = in_.peek()) != EOF && text::is_space(static_cast<char>(c))) in_.get();
    format_ = c == '{' ? DumpFormat::Jsonl : DumpFormat::Xml;
  }

  DumpFormat format() const { return format_; }

  std::optional<Article> next() {
    if (format_ == DumpFormat::Xml) {
      auto raw = xml_.next();
      if (!raw) return std::nullopt;
      return extract_anchors(*raw);
    }
    std::string line;
    while (std::getline(in_, line)) {
      if (text::trim(line).empty()) continue;
      try {
        return article_from_json(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception& e) {
        if (opts_.strict) throw InputError(std::string("malformed JSON line: ") + e.what());
        ++json_skipped_;
      } catch (const InputError&) {
        if (opts_.strict) throw;
        ++json_skipped_;
      }
    }
    return std::nullopt;
  }

  std::size_t skipped() const { return xml_.skipped() + json_skipped_; }

 private:
  std::istream& in_;
  ReaderOptions opts_;
  XmlDumpReader xml_;
  DumpFormat format_ = DumpFormat::Xml;
  std::size_t json_skipped_ = 0;
};

// ---------------------------------------------------------------------------
// Inbound-link index

struct MentionRef {
  std::string article_id;
  std::size_t anchor_ordinal = 0;

  friend bool operator==(const MentionRef&, const MentionRef&) = default;
};

struct InlinkEntry {
  std::size_t inbound_count = 0;  // distinct mention articles
  std::vector<MentionRef> mention_refs;

  friend bool operator==(const InlinkEntry&, const InlinkEntry&) = default;
};

struct InlinkIndex {
  std::map<std::string, InlinkEntry> entries;  // sorted by target title

  const InlinkEntry* find(const std::string& title) const {
    auto it = entries.find(title);
    return it == entries.end() ? nullptr : &it->second;
  }

  std::vector<std::string> eligible(std::size_t threshold) const {
    std::vector<std::string> out;
    for (const auto& [t, e] : entries) {
      if (e.inbound_count >= threshold) out.push_back(t);
    }
    return out;
  }

  friend bool operator==(const InlinkIndex&, const InlinkIndex&) = default;
};

// Counts distinct mention articles per target; every anchor occurrence is
// kept as a mention ref. Links from an article to itself are ignored.
inline InlinkIndex build_inlink_index(std::span<const Article> articles, const AliasTable* aliases = nullptr,
                                      std::size_t threads = 1) {
  using Partial = std::map<std::string, std::vector<MentionRef>>;
  threads = std::max<std::size_t>(1, std::min(threads, articles.size()));
  std::vector<Partial> partials(threads);
  parallel_for(threads, threads, [&](std::size_t w) {
    for (std::size_t i = w; i < articles.size(); i += threads) {
      const Article& a = articles[i];
      const std::string self = aliases ? aliases->resolve(a.title) : a.title;
      for (std::size_t k = 0; k < a.anchors.size(); ++k) {
        std::string target = aliases ? aliases->resolve(a.anchors[k].target_title) : a.anchors[k].target_title;
        if (target == self) continue;
        partials[w][target].push_back(MentionRef{a.id, k});
      }
    }
  });
  InlinkIndex index;
  for (auto& p : partials) {
    for (auto& [target, refs] : p) {
      auto& dst = index.entries[target].mention_refs;
      dst.insert(dst.end(), std::make_move_iterator(refs.begin()), std::make_move_iterator(refs.end()));
    }
  }
  for (auto& [target, e] : index.entries) {
    std::sort(e.mention_refs.begin(), e.mention_refs.end(), [](const MentionRef& l, const MentionRef& r) {
      if (l.article_id != r.article_id) return id_less(l.article_id, r.article_id);
      return l.anchor_ordinal < r.anchor_ordinal;
    });
    std::size_t distinct = 0;
    for (std::size_t k = 0; k < e.mention_refs.size(); ++k) {
      if (k == 0 || e.mention_refs[k].article_id != e.mention_refs[k - 1].article_id) ++distinct;
    }
    e.inbound_count = distinct;
  }
  return index;
}

inline nlohmann::ordered_json index_to_json(const InlinkIndex& index) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [t, e] : index.entries) {
    nlohmann::ordered_json x;
    x["inbound"] = e.inbound_count;
    auto refs = nlohmann::ordered_json::array();
    for (const auto& r : e.mention_refs) refs.push_back({r.article_id, r.anchor_ordinal});
    x["mentions"] = std::move(refs);
    j[t] = std::move(x);
  }
  return j;
}

}  // namespace wikimrc::ingest
