#include <gtest/gtest.h>

#include <cmath>

#include "wikimrc/demo_train.hpp"
#include "wikimrc/selftest.hpp"
#include "wikimrc/wae_head.hpp"

using namespace wikimrc;
using namespace wikimrc::head;

namespace {

// Naive per-cell cross-entropy, computed from probabilities.
double naive_bce(double z, double y) {
  double p = 1.0 / (1.0 + std::exp(-z));
  return -(y * std::log(p) + (1 - y) * std::log(1 - p));
}

ScoreMatrix<double> logits_of(const Matrix<double>& z) {
  ScoreMatrix<double> s;
  s.logits = z;
  return s;
}

}  // namespace

TEST(Layout, QueryThreeContextFour) {
  auto enc = encode_input({"q1", "q2", "q3"}, {"c1", "c2", "c3", "c4"});
  EXPECT_EQ(enc.length, 10u);  // [CLS] q q q [SEP] c c c c [SEP]
  EXPECT_EQ(enc.sep_index, 4u);
  EXPECT_EQ(enc.tokens[5], "c1");
  EXPECT_EQ(enc.region().legal_cells(), 10u);
  auto dbl = encode_input({"q1", "q2", "q3"}, {"c1", "c2", "c3", "c4"}, SeparatorStyle::Double);
  EXPECT_EQ(dbl.length, 11u);
  EXPECT_EQ(dbl.sep_index, 5u);
  EXPECT_EQ(dbl.to_sequence(0), 6u);
  EXPECT_EQ(dbl.to_context(9 - 1), 2u);
  EXPECT_THROW(encode_input({}, {"c"}), InputError);
  EXPECT_THROW(encode_input({"q"}, {}), InputError);
}

TEST(Layout, LegalCells) {
  SpanRegion r{2, 6};  // context at 3..4, trailing [SEP] at 5
  EXPECT_TRUE(r.legal(3, 3));
  EXPECT_TRUE(r.legal(3, 4));
  EXPECT_FALSE(r.legal(4, 3));
  EXPECT_FALSE(r.legal(2, 3));
  EXPECT_FALSE(r.legal(4, 5));
  EXPECT_FALSE(r.legal(0, 0));
  EXPECT_EQ(r.legal_cells(), 3u);
}

TEST(Scores, HandComputedBilinear) {
  // d=1, d_h=1: FFN(h) = w2 tanh(w1 h + b1) + b2
  Matrix<double> h(2, 1);
  h << 1.0, -2.0;
  auto p = FfnParams<double>::zeros(1, 1);
  p.w1(0, 0) = 0.5;
  p.b1(0) = 0.1;
  p.w2(0, 0) = 2.0;
  p.b2(0) = -0.3;
  auto s = score_matrix(h, p);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double f = 2.0 * std::tanh(0.5 * h(i, 0) + 0.1) - 0.3;
      EXPECT_NEAR(s.logits(i, j), f * h(j, 0), 1e-14);
      EXPECT_NEAR(s.prob(i, j), 1 / (1 + std::exp(-f * h(j, 0))), 1e-14);
    }
}

TEST(Scores, RejectsBadShapes) {
  Matrix<double> h(3, 2);
  h.setZero();
  EXPECT_THROW(score_matrix(h, FfnParams<double>::zeros(3, 2)), InputError);
  h(0, 0) = std::nan("");
  EXPECT_THROW(score_matrix(h, FfnParams<double>::zeros(2, 2)), InputError);
}

TEST(Losses, MatchNaiveSum) {
  Matrix<double> z(5, 5);
  for (int k = 0; k < 25; ++k) z.data()[k] = 0.3 * k - 3.0;
  auto s = logits_of(z);
  SpanRegion r{1, 5};  // context 2..3
  TargetMatrix t{true, {{2, 3}}};
  double expect_ext = naive_bce(z(2, 2), 0) + naive_bce(z(2, 3), 1) + naive_bce(z(3, 3), 0);
  EXPECT_NEAR(loss_ext(s, t, r), expect_ext, 1e-12);
  EXPECT_NEAR(loss_cls(s, true), naive_bce(z(0, 0), 1), 1e-12);
  EXPECT_NEAR(loss_wae(s, t, r), expect_ext + naive_bce(z(0, 0), 1), 1e-12);
  LossOptions avg;
  avg.average_ext = true;
  avg.ext_weight = 2.0;
  EXPECT_NEAR(loss_ext(s, t, r, avg), 2.0 * expect_ext / 3.0, 1e-12);
  TargetMatrix bad{true, {{4, 4}}};
  EXPECT_THROW(loss_ext(s, bad, r), InputError);
}

TEST(Losses, StableAtExtremeLogits) {
  EXPECT_NEAR(bce_with_logit(800.0, 1.0), 0.0, 1e-300);
  EXPECT_NEAR(bce_with_logit(800.0, 0.0), 800.0, 1e-9);
  EXPECT_NEAR(bce_with_logit(-800.0, 1.0), 800.0, 1e-9);
  EXPECT_TRUE(std::isfinite(bce_with_logit(-1e6, 0.0)));
}

TEST(Gradients, MatchFiniteDifferencesSmall) {
  Matrix<double> h(6, 3);
  Rng rng(4);
  for (int k = 0; k < h.size(); ++k) h.data()[k] = rng.uniform(-1, 1);
  auto p = FfnParams<double>::random(3, 2, 11, 0.7);
  SpanRegion r{2, 6};
  TargetMatrix t{false, {{3, 4}}};
  auto g = gradients(h, p, t, r);
  auto f = [&](const Matrix<double>& hh, const FfnParams<double>& pp) { return loss_wae(score_matrix(hh, pp), t, r); };
  EXPECT_NEAR(g.loss, f(h, p), 1e-12);
  const double eps = 1e-6;
  for (int k = 0; k < h.size(); ++k) {
    auto a = h, b = h;
    a.data()[k] += eps;
    b.data()[k] -= eps;
    EXPECT_NEAR(g.d_hidden.data()[k], (f(a, p) - f(b, p)) / (2 * eps), 1e-6);
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto a = p, b = p;
    a.at(k) += eps;
    b.at(k) -= eps;
    EXPECT_NEAR(g.d_params.at(k), (f(h, a) - f(h, b)) / (2 * eps), 1e-6);
  }
}

TEST(Decode, ThresholdFlatNestedSingle) {
  // context of 3 tokens at sequence 2..4 (sep at 1, length 6)
  Matrix<double> p = Matrix<double>::Constant(6, 6, 0.1);
  p(2, 3) = 0.9;  // (0,1)
  p(3, 3) = 0.8;  // (1,1) nested inside (0,1)
  p(4, 4) = 0.7;  // (2,2)
  p(5, 5) = 0.99; // trailing separator: illegal
  p(1, 1) = 0.99; // separator: illegal
  auto s = ScoreMatrix<double>::from_probabilities(p);
  SpanRegion r{1, 6};
  auto flat = decode_spans(s, r);
  ASSERT_EQ(flat.size(), 2u);
  EXPECT_EQ(flat[0].start, 0u);
  EXPECT_EQ(flat[0].end, 1u);
  EXPECT_EQ(flat[1].start, 2u);
  auto nested = decode_spans(s, r, {DecodeMode::Multi, 0.5, Overlap::Nested});
  EXPECT_EQ(nested.size(), 3u);
  auto single = decode_spans(s, r, {DecodeMode::Single, 0.5, Overlap::Flat});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_NEAR(single[0].score, 0.9, 1e-12);
  EXPECT_TRUE(decode_spans(s, r, {DecodeMode::Multi, 0.95, Overlap::Flat}).empty());
  EXPECT_EQ(extract_rationale(s, r).start, 0u);
}

TEST(Decode, TiesGoToEarlierSpan) {
  Matrix<double> p = Matrix<double>::Constant(5, 5, 0.6);
  auto s = ScoreMatrix<double>::from_probabilities(p);
  SpanRegion r{1, 5};  // context 2..3
  auto flat = decode_spans(s, r);
  ASSERT_EQ(flat.size(), 2u);  // (0,0) wins the tie, then (1,1)
  EXPECT_EQ(flat[0].end, 0u);
  EXPECT_EQ(flat[1].start, 1u);
}

TEST(Targets, FromExample) {
  MrcExample ex;
  ex.query = {"it", "is"};
  ex.context = {"a", "b", "c"};
  ex.answers = {make_span(ex.context, 1, 2)};
  ex.answerable = true;
  auto enc = encode_input(ex);
  auto t = make_targets(ex, enc);
  EXPECT_TRUE(t.y_cls);
  ASSERT_EQ(t.ext_positives.size(), 1u);
  EXPECT_EQ(t.ext_positives[0], (std::pair<std::size_t, std::size_t>{5, 6}));
  EXPECT_NO_THROW(validate_targets(t, enc.region()));
}

TEST(Selftest, SuitesPassSmall) {
  auto rep = selftest::run_all(3, 10, 50, 50);
  EXPECT_TRUE(rep.pass()) << rep.to_json().dump();
}

TEST(ToyEncoder, DeterministicBounded) {
  ToyEncoder a(8, 1), b(8, 1);
  auto ha = a.encode({"[CLS]", "x", "[SEP]"});
  EXPECT_EQ(ha, b.encode({"[CLS]", "x", "[SEP]"}));
  EXPECT_LE(ha.cwiseAbs().maxCoeff(), 2.0);
  EXPECT_THROW(ToyEncoder(0, 1), InputError);
}

TEST(DemoTrain, SmallRunLearns) {
  demo::DemoConfig c;
  c.examples = 10;
  c.unanswerable = 4;
  c.steps = 600;
  auto r = demo::demo_train(c);
  EXPECT_EQ(r.answerable, 6u);
  EXPECT_EQ(r.unanswerable, 4u);
  EXPECT_LT(r.final.loss, r.log.front().loss);
}

TEST(DemoTrain, DivergenceIsInvariantError) {
  demo::DemoConfig c;
  c.examples = 6;
  c.unanswerable = 2;
  c.steps = 200;
  c.learning_rate = 1e6;
  EXPECT_THROW(demo::demo_train(c), InvariantError);
}
