#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "instmvs/errors.hpp"
#include "instmvs/fusion.hpp"
#include "instmvs/scene.hpp"

namespace instmvs {
namespace {

double brute_nn(const Vec3& q, const std::vector<Vec3>& pts, double cap) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : pts) best = std::min(best, (p - q).norm());
  return std::min(best, cap);
}

CloudMetrics brute_metrics(const PointCloud& pred, const PointCloud& gt, double cap) {
  CloudMetrics m;
  for (const Vec3& p : pred.points) m.accuracy += brute_nn(p, gt.points, cap);
  for (const Vec3& p : gt.points) m.completeness += brute_nn(p, pred.points, cap);
  m.accuracy /= static_cast<double>(pred.size());
  m.completeness /= static_cast<double>(gt.size());
  m.overall = 0.5 * (m.accuracy + m.completeness);
  return m;
}

PointCloud random_cloud(std::mt19937_64& rng, size_t n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  PointCloud c;
  for (size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), 600.0 + u(rng));
  return c;
}

TEST(FilterByConfidence, DropsPixelsBelowThreshold) {
  DepthMap d(1, 3);
  d.depth = {500.0, 600.0, 700.0};
  d.valid = {1, 1, 0};
  ConfidenceMap c(1, 3);
  c.values = {0.2, 0.3, 0.9};
  const DepthMap f = filter_by_confidence(d, c, 0.3);
  EXPECT_EQ(f.valid, (std::vector<uint8_t>{0, 1, 0}));
  EXPECT_EQ(f.depth[1], 600.0);
  EXPECT_THROW(filter_by_confidence(d, ConfidenceMap(2, 3), 0.3), DimensionMismatch);
}

TEST(Metrics, IdenticalCloudsScoreZero) {
  std::mt19937_64 rng(30);
  const PointCloud c = random_cloud(rng, 2000, 100.0);
  const CloudMetrics m = accuracy_completeness(c, c);
  EXPECT_EQ(m.accuracy, 0.0);
  EXPECT_EQ(m.completeness, 0.0);
  EXPECT_EQ(m.overall, 0.0);
}

TEST(Metrics, SingleFarOutlierCostsTheCapOverN) {
  PointCloud gt;
  for (int i = 0; i < 10; ++i) gt.points.emplace_back(i * 1.0, 0.0, 600.0);
  PointCloud pred = gt;
  pred.points.emplace_back(0.0, 0.0, 1000.0);
  const CloudMetrics m = accuracy_completeness(pred, gt, 3.0);
  EXPECT_NEAR(m.accuracy, 3.0 / 11.0, 1e-12);
  EXPECT_EQ(m.completeness, 0.0);
}

TEST(Metrics, SwappingCloudsSwapsTheTerms) {
  std::mt19937_64 rng(31);
  const PointCloud a = random_cloud(rng, 700, 50.0);
  const PointCloud b = random_cloud(rng, 900, 50.0);
  const CloudMetrics ab = accuracy_completeness(a, b);
  const CloudMetrics ba = accuracy_completeness(b, a);
  EXPECT_DOUBLE_EQ(ab.accuracy, ba.completeness);
  EXPECT_DOUBLE_EQ(ab.completeness, ba.accuracy);
}

TEST(Metrics, MatchesBruteForceOnSmallAndLargeClouds) {
  std::mt19937_64 rng(32);
  for (const auto& [n, m, extent] : {std::tuple{50, 80, 30.0}, std::tuple{600, 1500, 80.0},
                                     std::tuple{3000, 200, 200.0}, std::tuple{2000, 2500, 400.0}}) {
    const PointCloud a = random_cloud(rng, n, extent);
    const PointCloud b = random_cloud(rng, m, extent * 1.1);
    for (double cap : {20.0, 2.0}) {
      const CloudMetrics got = accuracy_completeness(a, b, cap);
      const CloudMetrics want = brute_metrics(a, b, cap);
      EXPECT_NEAR(got.accuracy, want.accuracy, 1e-9);
      EXPECT_NEAR(got.completeness, want.completeness, 1e-9);
      EXPECT_NEAR(got.overall, want.overall, 1e-9);
    }
  }
}

TEST(Metrics, NearestNeighborIndexMatchesBruteForce) {
  std::mt19937_64 rng(33);
  const PointCloud c = random_cloud(rng, 5000, 150.0);
  const NearestNeighborIndex index(c.points, 5.0);
  std::uniform_real_distribution<double> u(-250.0, 250.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 q(u(rng), u(rng), 600.0 + u(rng));
    ASSERT_NEAR(index.distance(q, 20.0), brute_nn(q, c.points, 20.0), 1e-12);
  }
}

TEST(Metrics, EmptyCloudsAreRejected) {
  PointCloud one;
  one.points.emplace_back(0.0, 0.0, 1.0);
  EXPECT_THROW(accuracy_completeness(PointCloud{}, one), EmptyCloud);
  EXPECT_THROW(accuracy_completeness(one, PointCloud{}), EmptyCloud);
  EXPECT_THROW(accuracy_completeness(one, one, 0.0), std::invalid_argument);
}

class PlaneWallFusion : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = new SceneSpec(test::small_preset("plane-wall", 0.4, 3));
    views_ = new std::vector<RenderedView>(render(*spec_));
  }
  static void TearDownTestSuite() {
    delete spec_;
    delete views_;
  }
  static std::vector<DepthMap> depths() {
    std::vector<DepthMap> d;
    for (const RenderedView& v : *views_) d.push_back(v.depth);
    return d;
  }
  static std::vector<CameraModel> cams() {
    std::vector<CameraModel> c;
    for (const RenderedView& v : *views_) c.push_back(v.camera);
    return c;
  }
  static SceneSpec* spec_;
  static std::vector<RenderedView>* views_;
};

SceneSpec* PlaneWallFusion::spec_ = nullptr;
std::vector<RenderedView>* PlaneWallFusion::views_ = nullptr;

TEST_F(PlaneWallFusion, GroundTruthDepthsFuseOntoTheWall) {
  const PointCloud cloud = fuse(depths(), {}, cams(), FusionConfig{});
  ASSERT_GT(cloud.size(), 1000u);
  const Primitive& wall = spec_->primitives.front();
  const Vec3 normal = wall.u.cross(wall.v).normalized();
  for (const Vec3& p : cloud.points) ASSERT_LT(std::abs(normal.dot(p - wall.center)), 1.0);
  EXPECT_EQ(cloud.views.size(), cloud.size());
  EXPECT_TRUE(cloud.colors.empty());

  const PointCloud again = fuse(depths(), {}, cams(), FusionConfig{});
  ASSERT_EQ(again.size(), cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) ASSERT_EQ(again.points[i], cloud.points[i]);
}

TEST_F(PlaneWallFusion, ViewCountGates) {
  FusionConfig cfg;
  cfg.min_views = 3;  // only two other views exist
  EXPECT_TRUE(fuse(depths(), {}, cams(), cfg).empty());
  const std::vector<DepthMap> one{depths()[0]};
  const std::vector<CameraModel> cam{cams()[0]};
  EXPECT_TRUE(fuse(one, {}, cam, FusionConfig{}).empty());
  EXPECT_THROW(fuse(depths(), {}, cam, FusionConfig{}), DimensionMismatch);
}

TEST_F(PlaneWallFusion, ConfidenceThresholdEndpoints) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ConfidenceMap> confs;
  for (const RenderedView& v : *views_) {
    ConfidenceMap c(v.depth.rows, v.depth.cols);
    for (double& x : c.values) x = u(rng);
    confs.push_back(c);
  }
  FusionConfig cfg;
  cfg.min_confidence = 0.0;
  EXPECT_EQ(fuse(depths(), confs, cams(), cfg).points, fuse(depths(), {}, cams(), cfg).points);
  cfg.min_confidence = 1.01;
  EXPECT_TRUE(fuse(depths(), confs, cams(), cfg).empty());
  cfg.min_confidence = 0.5;
  const size_t half = fuse(depths(), confs, cams(), cfg).size();
  EXPECT_GT(half, 0u);
  EXPECT_LT(half, fuse(depths(), {}, cams(), cfg).size());
}

TEST_F(PlaneWallFusion, ColorsFollowTheImages) {
  std::vector<GrayImage> images;
  for (const RenderedView& v : *views_) images.push_back(v.image);
  const PointCloud cloud = fuse(depths(), {}, cams(), FusionConfig{}, images);
  EXPECT_EQ(cloud.colors.size(), cloud.size());
}

TEST(Ply, RoundTripAndMalformedFiles) {
  test::TempDir dir("ply");
  PointCloud c;
  c.points = {Vec3(1.5, -2.25, 600.0), Vec3(0.0, 0.0, 425.0)};
  c.colors = {{{1, 2, 3}}, {{250, 128, 0}}};
  write_ply(dir / "a.ply", c);
  const PointCloud back = read_ply(dir / "a.ply");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.points[0], c.points[0]);
  EXPECT_EQ(back.colors[1], c.colors[1]);

  PointCloud plain;
  plain.points = {Vec3(3.0, 4.0, 5.0)};
  write_ply(dir / "b.ply", plain);
  EXPECT_TRUE(read_ply(dir / "b.ply").colors.empty());

  std::ofstream(dir / "bad.ply") << "not a ply\n";
  EXPECT_THROW(read_ply(dir / "bad.ply"), IoError);
  EXPECT_THROW(read_ply(dir / "missing.ply"), IoError);
  c.colors.pop_back();
  EXPECT_THROW(write_ply(dir / "c.ply", c), DimensionMismatch);
}

}  // namespace
}  // namespace instmvs
