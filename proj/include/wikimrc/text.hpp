#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wikimrc::text {

// ---------------------------------------------------------------------------
// UTF-8 helpers. Offsets are bytes internally; JSON files carry code points.

inline bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

inline std::size_t byte_to_codepoint(std::string_view s, std::size_t byte) {
  std::size_t cp = 0;
  byte = std::min(byte, s.size());
  for (std::size_t i = 0; i < byte; ++i) {
    if (!is_continuation(static_cast<unsigned char>(s[i]))) ++cp;
  }
  return cp;
}

// Maps every code-point index 0..n (inclusive end) to its byte offset.
inline std::vector<std::size_t> codepoint_byte_table(std::string_view s) {
  std::vector<std::size_t> table;
  table.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(s[i]))) table.push_back(i);
  }
  table.push_back(s.size());
  return table;
}

inline std::size_t codepoint_to_byte(std::string_view s, std::size_t cp) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(s[i]))) continue;
    if (seen == cp) return i;
    ++seen;
  }
  return s.size();
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) out.emplace_back(s.substr(b, i - b));
  }
  return out;
}

inline std::string join(std::span<const std::string> tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Abbreviations shared by the tokenizer and the sentence segmenter.

struct AbbreviationRules {
  std::set<std::string, std::less<>> words;  // lower-case, with trailing '.'
  bool single_letter_initials = true;        // "J." and "U.S." style

  static AbbreviationRules standard() {
    AbbreviationRules r;
    r.words = {"dr.",   "mr.",   "mrs.",  "ms.",   "prof.", "st.",   "jr.",   "sr.",
               "vs.",   "e.g.",  "i.e.",  "inc.",  "ltd.",  "co.",   "corp.", "no.",
               "fig.",  "approx.", "dept.", "est.", "gen.",  "gov.",  "lt.",   "col.",
               "sgt.",  "capt.", "mt.",   "ft.",   "rev.",  "hon.",  "jan.",  "feb.",
               "mar.",  "apr.",  "aug.",  "sept.", "oct.",  "nov.",  "dec.",  "ca.",
               "cf.",   "vol.",  "op.",   "ed.",   "pp."};
    return r;
  }
  static AbbreviationRules none() {
    AbbreviationRules r;
    r.single_letter_initials = false;
    return r;
  }

  // `word` ends with '.', e.g. "Dr." or "U.S.".
  bool matches(std::string_view word) const {
    if (word.empty() || word.back() != '.') return false;
    if (words.count(to_lower(word))) return true;
    if (!single_letter_initials) return false;
    // one or more "<letter>." groups
    if (word.size() % 2 != 0) return false;
    for (std::size_t i = 0; i < word.size(); i += 2) {
      if (!std::isalpha(static_cast<unsigned char>(word[i])) || word[i + 1] != '.') return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Canonical word tokenizer.
//
// Whitespace split, then peel opening quotes off the front and
// . , ; : ? ! and closing quotes off the back (one token per character),
// then split PTB clitics ('s 're 've 'll 'd 'm n't). Brackets stay attached.
// Optional forced boundaries split a chunk at the given byte offsets.

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offset, inclusive
  std::size_t end = 0;    // byte offset, exclusive
};

namespace detail {

// Length in bytes of a quote character at the start of s, or 0.
inline std::size_t leading_quote(std::string_view s) {
  if (s.empty()) return 0;
  if (s[0] == '"' || s[0] == '\'' || s[0] == '`') return 1;
  // U+201C “, U+2018 ‘
  if (s.size() >= 3 && s.substr(0, 3) == "\xE2\x80\x9C") return 3;
  if (s.size() >= 3 && s.substr(0, 3) == "\xE2\x80\x98") return 3;
  return 0;
}

// Length in bytes of a peelable punctuation character at the end of s, or 0.
inline std::size_t trailing_punct(std::string_view s) {
  if (s.empty()) return 0;
  switch (s.back()) {
    case '.': case ',': case ';': case ':': case '?': case '!': case '"': case '\'':
      return 1;
    default:
      break;
  }
  // U+201D ”, U+2019 ’
  if (s.size() >= 3) {
    auto tail = s.substr(s.size() - 3);
    if (tail == "\xE2\x80\x9D" || tail == "\xE2\x80\x99") return 3;
  }
  return 0;
}

inline std::size_t clitic_length(std::string_view s) {
  static constexpr std::string_view kClitics[] = {"'s", "'re", "'ve", "'ll", "'d", "'m", "n't"};
  const std::string lower = to_lower(s);
  for (auto c : kClitics) {
    if (lower.size() > c.size() && std::string_view(lower).substr(lower.size() - c.size()) == c) {
      return c.size();
    }
  }
  // Curly apostrophe variant of 's.
  if (s.size() > 4 && s.substr(s.size() - 4) == "\xE2\x80\x99s") return 4;
  return 0;
}

inline void emit(std::vector<Token>& out, std::string_view text, std::size_t base, std::size_t b,
                 std::size_t e) {
  if (e > b) out.push_back(Token{std::string(text.substr(b, e - b)), base + b, base + e});
}

inline void tokenize_piece(std::vector<Token>& out, std::string_view text, std::size_t base,
                           std::size_t b, std::size_t e, const AbbreviationRules& abbrev) {
  // leading quotes
  while (e - b > 1) {
    std::size_t q = leading_quote(text.substr(b, e - b));
    if (q == 0 || q >= e - b) break;
    emit(out, text, base, b, b + q);
    b += q;
  }
  // trailing punctuation, collected right to left
  std::vector<std::pair<std::size_t, std::size_t>> tail;
  while (e - b > 1) {
    std::string_view core = text.substr(b, e - b);
    std::size_t p = trailing_punct(core);
    if (p == 0 || p >= core.size()) break;
    if (core.back() == '.' && abbrev.matches(core)) break;
    tail.emplace_back(e - p, e);
    e -= p;
  }
  std::size_t c = clitic_length(text.substr(b, e - b));
  if (c) {
    emit(out, text, base, b, e - c);
    emit(out, text, base, e - c, e);
  } else {
    emit(out, text, base, b, e);
  }
  for (auto it = tail.rbegin(); it != tail.rend(); ++it) emit(out, text, base, it->first, it->second);
}

}  // namespace detail

// Tokenizes `text`; offsets are reported relative to `base`. Forced
// boundaries are absolute offsets (same frame as `base`) and must be sorted.
inline std::vector<Token> tokenize(std::string_view text, std::size_t base = 0,
                                   std::span<const std::size_t> boundaries = {},
                                   const AbbreviationRules& abbrev = AbbreviationRules::standard()) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto bit = boundaries.begin();
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i == b) continue;
    // cut the chunk at forced boundaries strictly inside it
    std::size_t piece_begin = b;
    while (bit != boundaries.end() && *bit < base + b) ++bit;
    for (auto it = bit; it != boundaries.end() && *it < base + i; ++it) {
      std::size_t cut = *it - base;
      if (cut > piece_begin && cut < i) {
        detail::tokenize_piece(out, text, base, piece_begin, cut, abbrev);
        piece_begin = cut;
      }
    }
    detail::tokenize_piece(out, text, base, piece_begin, i, abbrev);
  }
  return out;
}

inline std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

// ---------------------------------------------------------------------------
// Normalization used for case-insensitive matching.

inline bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

// Lower-cased with ASCII punctuation removed; may be empty.
inline std::string match_key(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (char c : token) {
    if (is_ascii_punct(c)) continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

// Title without a trailing disambiguation suffix: "Mercury (planet)" -> "Mercury".
inline std::string_view title_surface(std::string_view title) {
  title = trim(title);
  if (!title.empty() && title.back() == ')') {
    auto open = title.rfind(" (");
    if (open != std::string_view::npos && open > 0) return trim(title.substr(0, open));
  }
  return title;
}

}  // namespace wikimrc::text
