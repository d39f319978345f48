#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kinest/model.hpp"

namespace model = kinest::model;
using model::Mat;

namespace {

// Parameter count written out layer by layer.
std::size_t linear_params(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t ssd_params(std::size_t w, const kinest::ModelConfig& c) {
  const std::size_t xbc = w + 2 * c.ssd_state;
  return 2 * w + linear_params(w, xbc) + xbc * c.conv_width + xbc + linear_params(w, 1) + linear_params(w, w) +
         2 * w + linear_params(w, w);
}

std::size_t flow_params(std::size_t w, const kinest::ModelConfig& c) {
  const std::size_t e = c.embed_dim, h = c.gma_hidden;
  const std::size_t lma = 2 * e + linear_params(e, e);
  const std::size_t gma = linear_params(e, h) + 2 * h + 6 * linear_params(h, h) + linear_params(h, e);
  return (c.tie_backward ? 1 : 2) * ssd_params(w, c) + lma + gma;
}

std::size_t expected_params(const kinest::ModelConfig& c) {
  std::size_t n = linear_params(c.input_dim, c.embed_dim) + linear_params(c.embed_dim, c.joints * 6);
  n += c.n_tfm * flow_params(c.embed_dim, c);
  const std::size_t hd = c.joints * c.joint_dim;
  n += c.m_skfm * (linear_params(c.embed_dim, hd) + linear_params(hd, c.embed_dim) + flow_params(c.joint_dim, c));
  return n;
}

Mat random_input(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<float> nd;
  Mat x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(g);
  return x;
}

bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace

TEST(Init, SameSeedIsBitIdentical) {
  const auto c = kinest::micro_config();
  EXPECT_EQ(model::init_weights(c), model::init_weights(c));
}

TEST(Init, SeedChangesWeights) {
  auto c = kinest::micro_config();
  const auto a = model::init_weights(c);
  c.seed = 99;
  const auto b = model::init_weights(c);
  EXPECT_TRUE(a.same_layout(b));
  EXPECT_NE(a.get("embed.weight"), b.get("embed.weight"));
}

TEST(Init, ParameterCountMatchesClosedForm) {
  for (const auto& c : {kinest::paper_config(), kinest::micro_config()}) {
    EXPECT_EQ(model::init_weights(c).parameter_count(), expected_params(c));
  }
  auto tied = kinest::micro_config();
  tied.tie_backward = true;
  EXPECT_EQ(model::init_weights(tied).parameter_count(), expected_params(tied));
  // Order of magnitude of the published model size.
  const double paper = static_cast<double>(expected_params(kinest::paper_config()));
  EXPECT_GT(paper, 9.0e6);
  EXPECT_LT(paper, 11.0e6);
}

TEST(Init, DecayIsPointNineAtZeroInput) {
  const double a = std::exp(-model::softplus(model::kDecayBias));
  EXPECT_NEAR(a, 0.9, 1e-12);
}

TEST(Linear, MatchesDenseProduct) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(1);
  const Mat x = random_input(g, 5, 54);
  const Mat y = model::embed(x, w, c);
  ASSERT_EQ(y.rows(), 5);
  ASSERT_EQ(y.cols(), 16);
  const auto& wt = w.get("embed.weight");
  for (Eigen::Index r = 0; r < 5; ++r)
    for (Eigen::Index o = 0; o < 16; ++o) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < 54; ++i) s += double(wt.data[std::size_t(o * 54 + i)]) * x(r, i);
      EXPECT_NEAR(y(r, o), s, 1e-5);
    }
}

TEST(Linear, RowsAreIndependentOfRowCount) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(2);
  const Mat x = random_input(g, 40, 54);
  const Mat full = model::embed(x, w, c);
  const Mat head = model::embed(x.topRows(7), w, c);
  EXPECT_EQ(Mat(full.topRows(7)), head);
}

TEST(Embed, RejectsWrongWidth) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  EXPECT_THROW(model::embed(Mat::Zero(4, 36), w, c), kinest::DimensionError);
}

TEST(Embed, IdentityWeightsCopyInput) {
  auto c = kinest::micro_config();
  auto w = model::init_weights(c);
  auto& wt = w.get("embed.weight");
  std::fill(wt.data.begin(), wt.data.end(), 0.0f);
  for (std::size_t i = 0; i < 16; ++i) wt.data[i * 54 + i] = 1.0f;
  std::mt19937_64 g(3);
  const Mat x = random_input(g, 4, 54);
  EXPECT_EQ(model::embed(x, w, c), Mat(x.leftCols(16)));
}

TEST(Conv, IsCausal) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(4);
  Mat x = random_input(g, 12, 16 + 8);
  const Mat a = model::causal_depthwise_conv(x, w, "tfm.0.ssd_fwd.conv");
  x.row(7).setConstant(5.0f);
  const Mat b = model::causal_depthwise_conv(x, w, "tfm.0.ssd_fwd.conv");
  EXPECT_EQ(Mat(a.topRows(7)), Mat(b.topRows(7)));
  EXPECT_NE(Mat(a.row(7)), Mat(b.row(7)));
}

TEST(SsdBlock, CausalUnderTailPerturbation) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(5);
  Mat x = random_input(g, 20, 16);
  const Mat a = model::ssd_block(x, w, "tfm.0.ssd_fwd", c);
  x.bottomRows(8).setZero();
  const Mat b = model::ssd_block(x, w, "tfm.0.ssd_fwd", c);
  EXPECT_EQ(Mat(a.topRows(12)), Mat(b.topRows(12)));
}

TEST(SsdBlock, SingleFrameMatchesOneStepFormula) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(6);
  const Mat p = random_input(g, 1, 16);
  const std::string pre = "tfm.0.ssd_fwd";
  const Mat h = model::layer_norm(p, w, pre + ".ln_in");
  const Mat xbc = model::silu(model::causal_depthwise_conv(model::linear(h, w, pre + ".in_proj"), w, pre + ".conv"));
  const Mat f1 = model::silu(model::linear(h, w, pre + ".gate"));
  // h_0 = b x^T, y_0 = c . b * x.
  double cb = 0.0;
  for (int n = 0; n < 4; ++n) cb += double(xbc(0, 16 + n)) * double(xbc(0, 20 + n));
  Mat y(1, 16);
  for (int k = 0; k < 16; ++k) y(0, k) = f1(0, k) * static_cast<float>(cb * xbc(0, k));
  const Mat ref = model::linear(model::layer_norm(y, w, pre + ".ln_out"), w, pre + ".out_proj");
  EXPECT_LE((model::ssd_block(p, w, pre, c) - ref).cwiseAbs().maxCoeff(), 1e-5f);
}

TEST(BiSsd, ForwardCausalBackwardAntiCausal) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(7);
  const Mat x = random_input(g, 16, 16);
  const auto base = model::bi_ssd(x, w, "tfm.0", c);
  Mat tail = x;
  tail.row(10).setConstant(3.0f);
  const auto t = model::bi_ssd(tail, w, "tfm.0", c);
  EXPECT_EQ(Mat(base.forward.topRows(10)), Mat(t.forward.topRows(10)));
  Mat head = x;
  head.row(5).setConstant(3.0f);
  const auto h = model::bi_ssd(head, w, "tfm.0", c);
  EXPECT_EQ(Mat(base.backward.bottomRows(10)), Mat(h.backward.bottomRows(10)));
}

TEST(BiSsd, BackwardIsFlipOfForwardCall) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(8);
  const Mat x = random_input(g, 9, 16);
  const Mat ref = model::flip_rows(model::ssd_block(model::flip_rows(x), w, "tfm.0.ssd_bwd", c));
  EXPECT_EQ(model::bi_ssd(x, w, "tfm.0", c).backward, ref);
}

TEST(BiSsd, PalindromeWithTiedWeights) {
  auto c = kinest::micro_config();
  c.tie_backward = true;
  const auto w = model::init_weights(c);
  std::mt19937_64 g(9);
  Mat x = random_input(g, 11, 16);
  for (Eigen::Index r = 0; r < 5; ++r) x.row(10 - r) = x.row(r);
  const auto out = model::bi_ssd(x, w, "tfm.0", c);
  EXPECT_EQ(out.backward, model::flip_rows(out.forward));
}

TEST(Lma, FrameLocal) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(10);
  Mat x = random_input(g, 6, 16);
  const Mat a = model::lma(x, w, "tfm.0.lma");
  x.row(3).setConstant(1.5f);
  const Mat b = model::lma(x, w, "tfm.0.lma");
  for (Eigen::Index r = 0; r < 6; ++r) {
    if (r == 3) EXPECT_NE(Mat(a.row(r)), Mat(b.row(r)));
    else EXPECT_EQ(Mat(a.row(r)), Mat(b.row(r)));
  }
}

TEST(Gma, AttentionRowsSumToOne) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(11);
  const Mat x = random_input(g, 10, 16);
  const Mat h = model::gma_attention_input(x, w, "tfm.0.gma", c);
  const auto attn = model::gma_attention_weights(h, w, "tfm.0.gma", c);
  ASSERT_EQ(attn.size(), 2u);
  for (const auto& a : attn)
    for (Eigen::Index r = 0; r < a.rows(); ++r) EXPECT_NEAR(a.row(r).sum(), 1.0f, 1e-6f);
}

TEST(Gma, PermutationEquivariantWithoutPositionalEncoding) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(12);
  const Mat x = random_input(g, 8, 16);
  std::vector<int> perm = {3, 0, 7, 1, 6, 2, 5, 4};
  Mat px(8, 16);
  for (int r = 0; r < 8; ++r) px.row(r) = x.row(perm[std::size_t(r)]);
  const Mat y = model::gma(x, w, "tfm.0.gma", c);
  const Mat py = model::gma(px, w, "tfm.0.gma", c);
  for (int r = 0; r < 8; ++r) EXPECT_LE((py.row(r) - y.row(perm[std::size_t(r)])).cwiseAbs().maxCoeff(), 1e-5f);
}

TEST(Stmm, GatherMatchesNestedLoops) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(13);
  const Mat x = random_input(g, 8, 16);
  for (auto s : {kinest::kin::ScanStrategy::kIndex, kinest::kin::ScanStrategy::kFks, kinest::kin::ScanStrategy::kUks}) {
    const auto order = kinest::kin::scan_order(s);
    model::StmmTrace tr;
    model::stmm_forward(x, w, 0, order, c, &tr);
    const Mat s_l = model::linear(x, w, "skfm.0.joint_in");
    const auto& f = order.forward();
    const auto& b = order.backward();
    const std::size_t n = f.size();
    ASSERT_EQ(tr.forward_scan_length, 8 * n);
    for (std::size_t l = 0; l < 8; ++l)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t d = 0; d < 4; ++d) {
          const float src_f = s_l(Eigen::Index(l), Eigen::Index(std::size_t(f[k]) * 4 + d));
          EXPECT_EQ(tr.forward_scan_input(Eigen::Index(l * n + k), Eigen::Index(d)), src_f);
          const float src_b = s_l(Eigen::Index(l), Eigen::Index(std::size_t(b[k]) * 4 + d));
          EXPECT_EQ(tr.backward_scan_input(Eigen::Index((7 - l) * n + k), Eigen::Index(d)), src_b);
        }
    // The backward layout is the full reversal of the forward one.
    EXPECT_EQ(tr.backward_scan_input, model::flip_rows(tr.forward_scan_input));
  }
}

TEST(Stmm, PaperScanLengths) {
  const auto c = kinest::paper_config();
  const auto w = model::init_weights(c);
  std::mt19937_64 g(14);
  const Mat x = random_input(g, 96, 256);
  model::StmmTrace uks, fks;
  model::stmm_forward(x, w, 0, kinest::kin::uks_order(), c, &uks);
  model::stmm_forward(x, w, 0, kinest::kin::fks_order(), c, &fks);
  EXPECT_EQ(uks.forward_scan_length, 2112u);
  EXPECT_EQ(uks.backward_scan_length, 2112u);
  EXPECT_EQ(fks.forward_scan_length, 3072u);
}

TEST(Stmm, RejectsOrderForOtherSkeleton) {
  const auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  const kinest::kin::ScanOrder small({0, 1, 2}, 3);
  EXPECT_THROW(model::stmm_forward(Mat::Zero(8, 16), w, 0, small, c), kinest::DimensionError);
}

TEST(Forward, MicroIsFiniteAndShaped) {
  const kinest::model::KineST net(kinest::micro_config());
  std::mt19937_64 g(15);
  const Mat x = random_input(g, 8, 54);
  model::ForwardTrace tr;
  const Mat y = net.forward(x, &tr);
  EXPECT_EQ(y.rows(), 8);
  EXPECT_EQ(y.cols(), 132);
  EXPECT_TRUE(all_finite(tr.embedded));
  for (const auto& m : tr.temporal) EXPECT_TRUE(all_finite(m));
  for (const auto& m : tr.spatial) EXPECT_TRUE(all_finite(m));
  EXPECT_TRUE(all_finite(y));
  EXPECT_EQ(net.forward(x), y);
  EXPECT_EQ(net.predict(x).frames(), 8u);
}

TEST(Forward, PureTemporalWithoutSkfm) {
  auto c = kinest::micro_config();
  c.m_skfm = 0;
  const model::KineST net(c);
  model::ForwardTrace tr;
  std::mt19937_64 g(16);
  EXPECT_EQ(net.forward(random_input(g, 8, 54), &tr).cols(), 132);
  EXPECT_TRUE(tr.spatial.empty());
  EXPECT_FALSE(net.weights().contains("skfm.0.joint_in.weight"));
}

TEST(Forward, LayoutMismatchThrows) {
  auto c = kinest::micro_config();
  const auto w = model::init_weights(c);
  c.embed_dim = 8;
  EXPECT_THROW(model::KineST(c, w), kinest::FormatError);
}
