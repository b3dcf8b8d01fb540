#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "instmvs/costvolume.hpp"
#include "instmvs/errors.hpp"

namespace instmvs {
namespace {

TEST(Zncc, IdentityNegationAndAffineInvariance) {
  const std::vector<double> a{1.0, 4.0, 2.0, 8.0, 5.0, 7.0};
  std::vector<double> neg, affine;
  for (double x : a) {
    neg.push_back(-x);
    affine.push_back(3.0 * x + 11.0);
  }
  EXPECT_NEAR(zncc(a, a), 1.0, 1e-12);
  EXPECT_NEAR(zncc(a, neg), -1.0, 1e-12);
  EXPECT_NEAR(zncc(a, affine), 1.0, 1e-12);
}

TEST(Zncc, FlatWindowScoresZero) {
  const std::vector<double> a{1.0, 4.0, 2.0};
  const std::vector<double> flat{5.0, 5.0, 5.0};
  EXPECT_EQ(zncc(a, flat), 0.0);
  EXPECT_THROW(zncc(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Zncc, MatchesTextbookFormula) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(49), b(49);
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng);
      b[i] = 0.5 * a[i] + u(rng);
    }
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / 49.0;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / 49.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      cov += (a[i] - ma) * (b[i] - mb);
      va += (a[i] - ma) * (a[i] - ma);
      vb += (b[i] - mb) * (b[i] - mb);
    }
    EXPECT_NEAR(zncc(a, b), cov / std::sqrt(va * vb), 1e-12);
  }
}

TEST(Softmax, NormalizedAndOrdered) {
  const std::vector<double> costs{0.2, 1.5, 0.1, 2.0};
  const std::vector<double> p = softmax_costs(costs, 0.1);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-15);
  EXPECT_GT(p[2], p[0]);
  EXPECT_GT(p[0], p[1]);
  EXPECT_NEAR(p[2] / p[0], std::exp(1.0), 1e-12);
}

TEST(Softmax, UniformForEqualCostsAndStableForLargeRatios) {
  const std::vector<double> p = softmax_costs(std::vector<double>(8, 2.0), 0.1);
  for (double x : p) EXPECT_NEAR(x, 0.125, 1e-15);
  const std::vector<double> q = softmax_costs(std::vector<double>{0.0, 1e6}, 1e-3);
  EXPECT_EQ(q[0], 1.0);
  EXPECT_EQ(q[1], 0.0);
}

TEST(HypothesisSet, EndpointsExactAndSparseLookup) {
  const HypothesisSet h(4, 5, 9, {1, 7, 12}, {{425.0, 935.0}, {500.0, 600.0}, {700.0, 701.0}});
  EXPECT_EQ(h.depth(0, 0), 425.0);
  EXPECT_EQ(h.depth(0, 8), 935.0);
  EXPECT_DOUBLE_EQ(h.spacing(1), 12.5);
  EXPECT_EQ(h.slot_of(7), std::optional<size_t>(1));
  EXPECT_FALSE(h.slot_of(8).has_value());
  EXPECT_THROW(HypothesisSet(4, 5, 9, {7, 1}, {{1.0, 2.0}, {1.0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(HypothesisSet(4, 5, 1, {1}, {{1.0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(HypothesisSet(4, 5, 4, {1}, {{2.0, 2.0}}), std::invalid_argument);
}

class SmallScene : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new SceneSpec(test::small_preset("orchard", 0.3, 3));
    views_ = new std::vector<RenderedView>(render(*spec_));
  }
  static void TearDownTestSuite() {
    delete spec_;
    delete views_;
  }
  CameraView ref() const { return {(*views_)[0].image, (*views_)[0].camera}; }
  std::vector<CameraView> srcs() const {
    return {{(*views_)[1].image, (*views_)[1].camera}, {(*views_)[2].image, (*views_)[2].camera}};
  }
  static SceneSpec* spec_;
  static std::vector<RenderedView>* views_;
};

SceneSpec* SmallScene::spec_ = nullptr;
std::vector<RenderedView>* SmallScene::views_ = nullptr;

// Explicit per-window cost: warp each window pixel, sample bilinearly, ZNCC.
double oracle_cost(const CameraView& ref, const std::vector<CameraView>& srcs, int row, int col,
                   double depth, int radius, int& valid_views) {
  std::vector<double> a;
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) a.push_back(ref.image(row + dr, col + dc));
  }
  double sum = 0.0;
  valid_views = 0;
  for (const CameraView& src : srcs) {
    std::vector<double> b;
    bool inside = true;
    for (int dr = -radius; dr <= radius && inside; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) {
        const Pixel p = warp({double(row + dr), double(col + dc)}, depth, ref.camera, src.camera);
        if (!(p.row >= 0.0 && p.col >= 0.0 && p.row <= src.image.rows() - 1 &&
              p.col <= src.image.cols() - 1)) {
          inside = false;
          break;
        }
        b.push_back(sample_bilinear(src.image, p.row, p.col));
      }
    }
    if (!inside) continue;
    sum += 1.0 - zncc(a, b);
    ++valid_views;
  }
  return valid_views ? sum / valid_views : kInvalidCost;
}

TEST_F(SmallScene, CostsMatchExplicitWarpOracle) {
  const CameraView r = ref();
  const auto s = srcs();
  const int rows = r.image.rows(), cols = r.image.cols();
  std::vector<int32_t> pixels;
  std::vector<Interval> ranges;
  for (int p = 0; p < rows * cols; p += 37) {
    pixels.push_back(p);
    ranges.push_back({450.0 + (p % 11), 900.0 - (p % 7)});
  }
  const HypothesisSet h(rows, cols, 12, pixels, ranges);
  const CostVolume cv = build_cost_volume(r, s, h, 5);
  for (size_t slot = 0; slot < h.slots(); ++slot) {
    const int row = pixels[slot] / cols, col = pixels[slot] % cols;
    const bool border = row < 2 || col < 2 || row >= rows - 2 || col >= cols - 2;
    for (int l = 0; l < 12; ++l) {
      const size_t e = slot * 12 + l;
      if (border) {
        EXPECT_EQ(cv.cost[e], kInvalidCost);
        EXPECT_EQ(cv.view_count[e], 0);
        continue;
      }
      int views = 0;
      const double expected = oracle_cost(r, s, row, col, h.depth(slot, l), 2, views);
      EXPECT_EQ(cv.view_count[e], views);
      EXPECT_NEAR(cv.cost[e], expected, 1e-5);
    }
  }
}

TEST_F(SmallScene, SweepAgreesWithPerWindowPath) {
  const CameraView r = ref();
  const auto s = srcs();
  const int rows = r.image.rows(), cols = r.image.cols();
  const auto dense = HypothesisSet::dense(rows, cols, 16,
                                          std::vector<Interval>(size_t(rows) * cols, spec_->prior));
  const CostVolume sweep = build_cost_volume(r, s, dense, 7, true);
  const CostVolume window = build_cost_volume(r, s, dense, 7, false);
  ASSERT_EQ(sweep.cost.size(), window.cost.size());
  double worst = 0.0;
  for (size_t i = 0; i < sweep.cost.size(); ++i) {
    worst = std::max(worst, double(std::abs(sweep.cost[i] - window.cost[i])));
    ASSERT_EQ(sweep.view_count[i], window.view_count[i]);
  }
  EXPECT_LT(worst, 1e-5);

  // Sparse slot sets with one shared range take the sweep path too.
  const HypothesisSet sparse(rows, cols, 16, {100, 2000, 3000},
                             std::vector<Interval>(3, spec_->prior));
  const CostVolume a = build_cost_volume(r, s, sparse, 7, true);
  const CostVolume b = build_cost_volume(r, s, sparse, 7, false);
  for (size_t i = 0; i < a.cost.size(); ++i) EXPECT_NEAR(a.cost[i], b.cost[i], 1e-5);
}

TEST_F(SmallScene, TrueDepthHasLowCost) {
  const CameraView r = ref();
  const DepthMap& gt = (*views_)[0].depth;
  const int rows = r.image.rows(), cols = r.image.cols();
  std::vector<int32_t> pixels;
  std::vector<Interval> ranges;
  for (int row = 10; row < rows - 10; row += 7) {
    for (int col = 10; col < cols - 10; col += 7) {
      const size_t i = gt.index(row, col);
      if (!gt.valid[i]) continue;
      pixels.push_back(static_cast<int32_t>(i));
      // True depth at l = 4; 40 mm steps move the match by about a pixel.
      ranges.push_back({gt.depth[i] - 160.0, gt.depth[i] + 160.0});
    }
  }
  const HypothesisSet h(rows, cols, 9, pixels, ranges);
  const CostVolume cv = build_cost_volume(r, srcs(), h, 7);
  size_t best_at_truth = 0;
  for (size_t slot = 0; slot < h.slots(); ++slot) {
    const auto c = cv.costs(slot);
    best_at_truth += std::abs(std::min_element(c.begin(), c.end()) - c.begin() - 4) <= 1;
  }
  EXPECT_GT(best_at_truth, h.slots() * 7 / 10);
}

TEST_F(SmallScene, ProbabilityVolumeNormalized) {
  const CameraView r = ref();
  const int rows = r.image.rows(), cols = r.image.cols();
  const auto dense = HypothesisSet::dense(rows, cols, 8,
                                          std::vector<Interval>(size_t(rows) * cols, spec_->prior));
  const ProbabilityVolume pv = cost_to_probability(build_cost_volume(r, srcs(), dense, 5), 0.1, 1);
  for (size_t slot = 0; slot < dense.slots(); ++slot) {
    const auto p = pv.distribution(slot);
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    ASSERT_NEAR(sum, 1.0, 1e-6);
    if (!pv.matched[slot]) {
      for (float x : p) EXPECT_NEAR(x, 0.125, 1e-7);
    }
  }
}

TEST(CostVolume, RejectsBadArguments) {
  GrayImage img(10, 10, 1.0f);
  const CameraModel cam(test::intrinsics(10.0, 4.5, 4.5), Mat3::Identity(), Vec3::Zero(), 10, 10);
  const CameraView view{img, cam};
  const auto h = HypothesisSet::dense(10, 10, 4, std::vector<Interval>(100, {1.0, 2.0}));
  const std::vector<CameraView> one{view};
  EXPECT_THROW(build_cost_volume(view, {}, h), std::invalid_argument);
  EXPECT_THROW(build_cost_volume(view, one, h, 4), std::invalid_argument);
  const auto wrong = HypothesisSet::dense(5, 20, 4, std::vector<Interval>(100, {1.0, 2.0}));
  EXPECT_THROW(build_cost_volume(view, one, wrong), DimensionMismatch);
}

TEST(VolumeDump, RoundTrip) {
  test::TempDir dir("dump");
  const HypothesisSet h(2, 3, 2, {1, 4}, {{1.0, 2.0}, {3.0, 4.0}});
  const std::vector<float> values{0.25f, 0.75f, 0.5f, 0.5f};
  write_volume_dump(dir / "v.bin", h, values);
  const VolumeDump d = read_volume_dump(dir / "v.bin");
  EXPECT_EQ(d.rows, 2u);
  EXPECT_EQ(d.cols, 3u);
  EXPECT_EQ(d.count, 2u);
  const std::vector<float> expected{0, 0, 0.25f, 0.75f, 0, 0, 0, 0, 0.5f, 0.5f, 0, 0};
  EXPECT_EQ(d.values, expected);
}

}  // namespace
}  // namespace instmvs
