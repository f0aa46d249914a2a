#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wikimrc/errors.hpp"
#include "wikimrc/mrc_example.hpp"
#include "wikimrc/random.hpp"

namespace wikimrc::head {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kSep = "[SEP]";

// Single: [CLS] Q [SEP] C [SEP]. Double: [CLS] Q [SEP] [SEP] C [SEP], the
// RoBERTa pair form used when rendering worked examples.
enum class SeparatorStyle { Single, Double };

// Where the context sits in a sequence of length M. sep_index (N) is the
// separator right before the context, so the context occupies
// [N+1, M-2] and the trailing separator is M-1. All indices are 0-based.
struct SpanRegion {
  std::size_t sep_index = 0;
  std::size_t length = 0;

  std::size_t context_begin() const { return sep_index + 1; }
  std::size_t context_size() const { return length >= sep_index + 2 ? length - sep_index - 2 : 0; }
  bool legal(std::size_t i, std::size_t j) const { return sep_index < i && i <= j && j + 2 <= length; }
  std::size_t legal_cells() const { return context_size() * (context_size() + 1) / 2; }
};

struct InputEncoding {
  std::vector<std::string> tokens;
  std::size_t sep_index = 0;  // N
  std::size_t length = 0;     // M
  static constexpr std::size_t cls_index = 0;

  SpanRegion region() const { return SpanRegion{sep_index, length}; }
  std::size_t to_sequence(std::size_t context_word) const { return sep_index + 1 + context_word; }
  std::size_t to_context(std::size_t position) const { return position - sep_index - 1; }
};

inline InputEncoding encode_input(const std::vector<std::string>& query, const std::vector<std::string>& context,
                                  SeparatorStyle style = SeparatorStyle::Single) {
  if (query.empty()) throw InputError("encode_input: empty query");
  if (context.empty()) throw InputError("encode_input: empty context");
  InputEncoding enc;
  enc.tokens.reserve(query.size() + context.size() + 4);
  enc.tokens.emplace_back(kCls);
  enc.tokens.insert(enc.tokens.end(), query.begin(), query.end());
  enc.tokens.emplace_back(kSep);
  if (style == SeparatorStyle::Double) enc.tokens.emplace_back(kSep);
  enc.sep_index = enc.tokens.size() - 1;
  enc.tokens.insert(enc.tokens.end(), context.begin(), context.end());
  enc.tokens.emplace_back(kSep);
  enc.length = enc.tokens.size();
  return enc;
}

inline InputEncoding encode_input(const MrcExample& ex, SeparatorStyle style = SeparatorStyle::Single) {
  return encode_input(ex.query, ex.context, style);
}

// ---------------------------------------------------------------------------
// Extractor parameters: FFN(h) = W2 tanh(W1 h + b1) + b2.

template <typename T>
struct FfnParams {
  Matrix<T> w1;  // d_h x d
  Vector<T> b1;  // d_h
  Matrix<T> w2;  // d x d_h
  Vector<T> b2;  // d

  std::size_t dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }

  static FfnParams zeros(std::size_t d, std::size_t dh) {
    FfnParams p;
    p.w1 = Matrix<T>::Zero(dh, d);
    p.b1 = Vector<T>::Zero(dh);
    p.w2 = Matrix<T>::Zero(d, dh);
    p.b2 = Vector<T>::Zero(d);
    return p;
  }

  // Entries uniform in [-scale, scale]; biases too unless zero_bias.
  static FfnParams random(std::size_t d, std::size_t dh, std::uint64_t seed, double scale = 0.5,
                          bool zero_bias = false) {
    Rng rng(seed);
    FfnParams p = zeros(d, dh);
    auto fill = [&](auto& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-scale, scale));
    };
    fill(p.w1);
    fill(p.w2);
    if (!zero_bias) {
      fill(p.b1);
      fill(p.b2);
    }
    return p;
  }

  template <typename U>
  FfnParams<U> cast() const {
    return FfnParams<U>{w1.template cast<U>(), b1.template cast<U>(), w2.template cast<U>(), b2.template cast<U>()};
  }

  bool consistent() const {
    return b1.size() == w1.rows() && w2.cols() == w1.rows() && w2.rows() == w1.cols() && b2.size() == w2.rows();
  }
  bool finite() const { return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite(); }

  // Flat view helpers for optimizers and finite differences.
  std::size_t size() const {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }
  T& at(std::size_t k) {
    if (k < static_cast<std::size_t>(w1.size())) return w1.data()[k];
    k -= static_cast<std::size_t>(w1.size());
    if (k < static_cast<std::size_t>(b1.size())) return b1.data()[k];
    k -= static_cast<std::size_t>(b1.size());
    if (k < static_cast<std::size_t>(w2.size())) return w2.data()[k];
    k -= static_cast<std::size_t>(w2.size());
    return b2.data()[k];
  }
  T at(std::size_t k) const { return const_cast<FfnParams*>(this)->at(k); }

  FfnParams& operator+=(const FfnParams& o) {
    w1 += o.w1;
    b1 += o.b1;
    w2 += o.w2;
    b2 += o.b2;
    return *this;
  }
  FfnParams& operator*=(T s) {
    w1 *= s;
    b1 *= s;
    w2 *= s;
    b2 *= s;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Score matrix. Logits are kept; probabilities S = sigmoid(logits) are
// materialized on demand.

template <typename T>
T sigmoid(T z) {
  using std::exp;
  return z >= T(0) ? T(1) / (T(1) + exp(-z)) : exp(z) / (T(1) + exp(z));
}

template <typename T>
struct ScoreMatrix {
  Matrix<T> logits;

  std::size_t size() const { return static_cast<std::size_t>(logits.rows()); }
  T prob(std::size_t i, std::size_t j) const {
    return sigmoid(logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  T relevance() const { return prob(0, 0); }
  Matrix<T> probabilities() const { return logits.unaryExpr([](T z) { return sigmoid(z); }); }

  static ScoreMatrix from_probabilities(const Matrix<T>& p) {
    ScoreMatrix s;
    s.logits = p.unaryExpr([](T x) {
      using std::log;
      if (!(x > T(0) && x < T(1))) throw InputError("score probabilities must lie strictly inside (0, 1)");
      return log(x) - log1p(-x);
    });
    return s;
  }
};

template <typename T>
struct Forward {
  Matrix<T> pre;      // H W1^T + b1, M x d_h
  Matrix<T> act;      // tanh(pre)
  Matrix<T> ffn;      // FFN(H), M x d
  ScoreMatrix<T> scores;
};

template <typename T>
Forward<T> forward(const Matrix<T>& hidden, const FfnParams<T>& params) {
  if (!params.consistent()) throw InputError("score_matrix: inconsistent FFN shapes");
  if (static_cast<std::size_t>(hidden.cols()) != params.dim())
    throw InputError("score_matrix: hidden width does not match FFN input width");
  if (!hidden.allFinite() || !params.finite()) throw InputError("score_matrix: non-finite input");
  Forward<T> f;
  f.pre = (hidden * params.w1.transpose()).rowwise() + params.b1.transpose();
  f.act = f.pre.unaryExpr([](T x) {
    using std::tanh;
    return tanh(x);
  });
  f.ffn = (f.act * params.w2.transpose()).rowwise() + params.b2.transpose();
  f.scores.logits = f.ffn * hidden.transpose();
  return f;
}

// S[i][j] = sigmoid(<FFN(h_i), h_j>) over the full M x M grid.
template <typename T>
ScoreMatrix<T> score_matrix(const Matrix<T>& hidden, const FfnParams<T>& params) {
  return forward(hidden, params).scores;
}

// ---------------------------------------------------------------------------
// Losses

struct TargetMatrix {
  bool y_cls = false;
  std::vector<std::pair<std::size_t, std::size_t>> ext_positives;  // sequence coordinates
};

// Pre-training targets for an example: y_cls = answerable, answers shifted
// into sequence coordinates.
inline TargetMatrix make_targets(const MrcExample& ex, const InputEncoding& enc) {
  TargetMatrix t;
  t.y_cls = ex.answerable;
  for (const auto& a : ex.answers) t.ext_positives.emplace_back(enc.to_sequence(a.word_start), enc.to_sequence(a.word_end));
  return t;
}

inline void validate_targets(const TargetMatrix& t, SpanRegion r) {
  for (const auto& [i, j] : t.ext_positives) {
    if (!r.legal(i, j))
      throw InputError("target (" + std::to_string(i) + "," + std::to_string(j) + ") is outside the legal span region");
  }
}

struct LossOptions {
  double ext_weight = 1.0;   // scalar on every extraction cell
  bool average_ext = false;  // divide the extraction sum by the legal cell count
  bool include_cls = true;
  bool include_ext = true;
};

// Binary cross-entropy of sigmoid(z) against y, from the logit.
template <typename T>
T bce_with_logit(T z, T y) {
  using std::abs;
  using std::exp;
  using std::log1p;
  return std::max(z, T(0)) - z * y + log1p(exp(-abs(z)));
}

template <typename T>
T loss_cls(const ScoreMatrix<T>& s, bool y_cls) {
  return bce_with_logit(s.logits(0, 0), y_cls ? T(1) : T(0));
}

namespace detail {

inline std::vector<char> positive_mask(const TargetMatrix& t, SpanRegion r) {
  std::vector<char> mask(r.length * r.length, 0);
  for (const auto& [i, j] : t.ext_positives) mask[i * r.length + j] = 1;
  return mask;
}

}  // namespace detail

// Sum of per-cell BCE over the legal cells only, in row-major order.
template <typename T>
T loss_ext(const ScoreMatrix<T>& s, const TargetMatrix& targets, SpanRegion r, const LossOptions& opts = {}) {
  if (s.size() != r.length) throw InputError("loss_ext: score matrix size does not match the sequence length");
  validate_targets(targets, r);
  const auto pos = detail::positive_mask(targets, r);
  T sum = T(0);
  for (std::size_t i = r.context_begin(); i + 2 <= r.length; ++i) {
    for (std::size_t j = i; j + 2 <= r.length; ++j) {
      sum += bce_with_logit(s.logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                            pos[i * r.length + j] ? T(1) : T(0));
    }
  }
  if (opts.average_ext && r.legal_cells() > 0) sum /= static_cast<T>(r.legal_cells());
  return static_cast<T>(opts.ext_weight) * sum;
}

template <typename T>
T loss_wae(const ScoreMatrix<T>& s, const TargetMatrix& targets, SpanRegion r, const LossOptions& opts = {}) {
  T cls = opts.include_cls ? loss_cls(s, targets.y_cls) : T(0);
  T ext = opts.include_ext ? loss_ext(s, targets, r, opts) : T(0);
  return cls + ext;
}

// ---------------------------------------------------------------------------
// Gradients

template <typename T>
struct Gradients {
  Matrix<T> d_hidden;
  FfnParams<T> d_params;
  T loss = T(0);
  T loss_cls = T(0);
  T loss_ext = T(0);
};

// Analytic gradients of loss_wae with respect to H and the FFN parameters.
template <typename T>
Gradients<T> gradients(const Matrix<T>& hidden, const FfnParams<T>& params, const TargetMatrix& targets, SpanRegion r,
                       const LossOptions& opts = {}) {
  const Forward<T> f = forward(hidden, params);
  const auto m = static_cast<Eigen::Index>(r.length);
  if (f.scores.logits.rows() != m) throw InputError("gradients: hidden rows do not match the sequence length");
  validate_targets(targets, r);

  Gradients<T> g;
  Matrix<T> dz = Matrix<T>::Zero(m, m);
  if (opts.include_cls) {
    g.loss_cls = loss_cls(f.scores, targets.y_cls);
    dz(0, 0) += sigmoid(f.scores.logits(0, 0)) - (targets.y_cls ? T(1) : T(0));
  }
  if (opts.include_ext) {
    g.loss_ext = loss_ext(f.scores, targets, r, opts);
    const auto pos = detail::positive_mask(targets, r);
    T w = static_cast<T>(opts.ext_weight);
    if (opts.average_ext && r.legal_cells() > 0) w /= static_cast<T>(r.legal_cells());
    for (std::size_t i = r.context_begin(); i + 2 <= r.length; ++i) {
      for (std::size_t j = i; j + 2 <= r.length; ++j) {
        auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        dz(ii, jj) += w * (sigmoid(f.scores.logits(ii, jj)) - (pos[i * r.length + j] ? T(1) : T(0)));
      }
    }
  }
  g.loss = g.loss_cls + g.loss_ext;

  // Z = F H^T
  Matrix<T> d_ffn = dz * hidden;
  g.d_hidden = dz.transpose() * f.ffn;
  // F = A W2^T + b2
  g.d_params.w2 = d_ffn.transpose() * f.act;
  g.d_params.b2 = d_ffn.colwise().sum().transpose();
  Matrix<T> d_act = d_ffn * params.w2;
  // A = tanh(P)
  Matrix<T> d_pre = d_act.cwiseProduct(f.act.unaryExpr([](T a) { return T(1) - a * a; }));
  // P = H W1^T + b1
  g.d_params.w1 = d_pre.transpose() * hidden;
  g.d_params.b1 = d_pre.colwise().sum().transpose();
  g.d_hidden += d_pre * params.w1;
  return g;
}

// ---------------------------------------------------------------------------
// Decoding

// Context coordinates, inclusive.
struct SpanScore {
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;

  friend bool operator==(const SpanScore&, const SpanScore&) = default;
};

enum class DecodeMode { Multi, Single };
enum class Overlap { Nested, Flat };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::Multi;
  double threshold = 0.5;
  Overlap overlap = Overlap::Flat;
};

namespace detail {

// Higher score first; ties to smaller start, then smaller end.
inline bool ranks_before(const SpanScore& a, const SpanScore& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.start != b.start) return a.start < b.start;
  return a.end < b.end;
}

}  // namespace detail

// Multi: legal cells with S > threshold; Flat keeps a greedy score-ordered
// non-overlapping subset, Nested keeps all. Single: the legal argmax.
// Results are sorted by (start, end).
template <typename T>
std::vector<SpanScore> decode_spans(const ScoreMatrix<T>& s, SpanRegion r, const DecodeOptions& opts = {}) {
  std::vector<SpanScore> cells;
  const std::size_t base = r.context_begin();
  for (std::size_t i = base; i + 2 <= r.length; ++i) {
    for (std::size_t j = i; j + 2 <= r.length; ++j) {
      double p = static_cast<double>(s.prob(i, j));
      if (opts.mode == DecodeMode::Single || p > opts.threshold) cells.push_back(SpanScore{i - base, j - base, p});
    }
  }
  if (cells.empty()) return {};
  std::sort(cells.begin(), cells.end(), detail::ranks_before);
  if (opts.mode == DecodeMode::Single) return {cells.front()};
  std::vector<SpanScore> out;
  if (opts.overlap == Overlap::Nested) {
    out = std::move(cells);
  } else {
    for (const auto& c : cells) {
      bool clash = std::any_of(out.begin(), out.end(),
                               [&](const SpanScore& o) { return c.start <= o.end && o.start <= c.end; });
      if (!clash) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [](const SpanScore& a, const SpanScore& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  return out;
}

// Highest-scoring legal context span, same tie rule as decoding.
template <typename T>
SpanScore extract_rationale(const ScoreMatrix<T>& s, SpanRegion r) {
  if (r.legal_cells() == 0) throw InputError("extract_rationale: no legal context span");
  auto best = decode_spans(s, r, DecodeOptions{DecodeMode::Single, 0.5, Overlap::Flat});
  return best.front();
}

// For inspection: tokens, layout and the probability grid row by row.
template <typename T>
nlohmann::ordered_json score_matrix_to_json(const ScoreMatrix<T>& s, const InputEncoding& enc) {
  nlohmann::ordered_json j;
  j["tokens"] = enc.tokens;
  j["sep_index"] = enc.sep_index;
  j["length"] = enc.length;
  auto rows = nlohmann::ordered_json::array();
  const auto p = s.probabilities();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(p.cols()));
    for (Eigen::Index k = 0; k < p.cols(); ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(p(i, k));
    rows.push_back(row);
  }
  j["probabilities"] = std::move(rows);
  return j;
}

// ---------------------------------------------------------------------------
// Deterministic toy encoder standing in for a pre-trained MLM.
//
// row_i = mean over the available neighbours k in {i-1, i, i+1} of
//         (embedding(token_k) + position(k))
// with embedding entries hashed into [-1, 1] and a sinusoidal position
// vector, so every entry lies in [-2, 2].

class ToyEncoder {
 public:
  ToyEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim == 0) throw InputError("toy encoder width must be at least 1");
  }

  std::size_t dim() const { return dim_; }

  static Vector<double> hash_embedding(std::string_view token, std::size_t dim, std::uint64_t seed) {
    Vector<double> v(static_cast<Eigen::Index>(dim));
    const std::uint64_t h = splitmix64(fnv1a64(token) ^ splitmix64(seed));
    for (std::size_t k = 0; k < dim; ++k) {
      std::uint64_t x = splitmix64(h + 0x9e3779b97f4a7c15ULL * (k + 1));
      v(static_cast<Eigen::Index>(k)) = static_cast<double>(x >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
    return v;
  }

  static Vector<double> position(std::size_t pos, std::size_t dim) {
    Vector<double> v(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      double rate = std::pow(10000.0, -static_cast<double>(2 * (k / 2)) / static_cast<double>(dim));
      double a = static_cast<double>(pos) * rate;
      v(static_cast<Eigen::Index>(k)) = (k % 2 == 0) ? std::sin(a) : std::cos(a);
    }
    return v;
  }

  const Vector<double>& embedding(const std::string& token) {
    auto it = table_.find(token);
    if (it == table_.end()) it = table_.emplace(token, hash_embedding(token, dim_, seed_)).first;
    return it->second;
  }

  Matrix<double> encode(const std::vector<std::string>& tokens) {
    const auto m = static_cast<Eigen::Index>(tokens.size());
    Matrix<double> x(m, static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < m; ++i) {
      x.row(i) = (embedding(tokens[static_cast<std::size_t>(i)]) + position(static_cast<std::size_t>(i), dim_)).transpose();
    }
    Matrix<double> h(m, static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::Index lo = std::max<Eigen::Index>(0, i - 1), hi = std::min<Eigen::Index>(m - 1, i + 1);
      h.row(i) = x.middleRows(lo, hi - lo + 1).colwise().mean();
    }
    return h;
  }

  // Adds -lr * dL/d(embedding) for every token, given dL/dH from encode().
  void apply_gradient(const std::vector<std::string>& tokens, const Matrix<double>& d_hidden, double lr) {
    const auto m = static_cast<Eigen::Index>(tokens.size());
    Matrix<double> dx = Matrix<double>::Zero(m, static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::Index lo = std::max<Eigen::Index>(0, i - 1), hi = std::min<Eigen::Index>(m - 1, i + 1);
      const double share = 1.0 / static_cast<double>(hi - lo + 1);
      for (Eigen::Index k = lo; k <= hi; ++k) dx.row(k) += share * d_hidden.row(i);
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      auto& e = const_cast<Vector<double>&>(embedding(tokens[static_cast<std::size_t>(k)]));
      e -= lr * dx.row(k).transpose();
    }
  }

  std::size_t vocabulary_size() const { return table_.size(); }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::unordered_map<std::string, Vector<double>> table_;
};

inline Matrix<double> toy_encode(const InputEncoding& enc, std::size_t dim, std::uint64_t seed) {
  ToyEncoder encoder(dim, seed);
  return encoder.encode(enc.tokens);
}

}  // namespace wikimrc::head
