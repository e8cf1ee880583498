#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "veingrow/geometry.hpp"

using namespace veingrow;
using namespace veingrow::testing;

TEST(Centroid, SquareAndTriangle) {
  const Point2 c = polygon_centroid(square4());
  EXPECT_DOUBLE_EQ(c.x, 2.0);
  EXPECT_DOUBLE_EQ(c.y, 2.0);
  const Point2 t = polygon_centroid(Polygon({{0, 0}, {6, 0}, {0, 6}}));
  EXPECT_NEAR(t.x, 2.0, 1e-12);
  EXPECT_NEAR(t.y, 2.0, 1e-12);
}

TEST(Centroid, CrescentCentroidIsOutside) {
  const Polygon c = crescent();
  const Point2 centroid = polygon_centroid(c);
  EXPECT_FALSE(point_in_polygon(c, centroid));
  // Brute force: the centroid's pixel is not covered at 8x8 subsampling.
  const RasterGrid g{30, 30, 8};
  const RasterMask m = rasterize(c, g);
  EXPECT_EQ(m.pixel_count(static_cast<int>(centroid.x), static_cast<int>(centroid.y)), 0);
}

TEST(Centroid, DegenerateThrows) {
  try {
    polygon_centroid(Polygon({{0, 0}, {1, 1}, {2, 2}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(PointInPolygon, InsideOutsideBoundary) {
  const Polygon s = square4();
  EXPECT_TRUE(point_in_polygon(s, {2, 2}));
  EXPECT_FALSE(point_in_polygon(s, {5, 2}));
  EXPECT_TRUE(point_in_polygon(s, {4, 2}));
  EXPECT_TRUE(point_in_polygon(s, {0, 0}));
}

TEST(Validation, RejectsDefects) {
  EXPECT_THROW(Polygon::validated({{0, 0}, {4, 4}, {4, 0}, {0, 4}}), Error);  // bow tie
  EXPECT_THROW(Polygon::validated({{0, 0}, {4, 0}, {4, 0}, {0, 4}}), Error);  // duplicate
  EXPECT_THROW(Polygon::validated({{0, 0}, {1, 0}, {2, 0}}), Error);          // zero area
  EXPECT_THROW(Polygon({{0, 0}, {1, 0}}), Error);
  EXPECT_NO_THROW(Polygon::validated({{0, 0}, {4, 0}, {4, 4}, {0, 4}}));
  EXPECT_NO_THROW(notched_square().vertices());
  EXPECT_FALSE(polygon_defect(u_shape().vertices()).has_value());
}

TEST(RayCast, SquareAxisAndDiagonal) {
  const Polygon s = square4();
  EXPECT_NEAR(ray_cast_distance(s, {2, 2}, 0.0), 2.0, 1e-12);
  EXPECT_NEAR(ray_cast_distance(s, {2, 2}, kPi / 4), 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(RayCast, MultiHitTakesFarthestWall) {
  const Polygon u = u_shape();
  const Point2 origin{1.5, 8.0};
  const std::vector<Point2> v(u.vertices().begin(), u.vertices().end());
  const double oracle = march_farthest_exit(v, origin, 0.0);
  EXPECT_NEAR(oracle, 8.5, 1e-2);
  EXPECT_NEAR(ray_cast_distance(u, origin, 0.0), oracle, 1e-2);
  EXPECT_NEAR(ray_cast_distance(u, origin, 0.0), 8.5, 1e-12);
}

TEST(RayCast, OriginOutsideThrows) {
  try {
    ray_cast_distance(square4(), {5, 5}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OriginOutsideMask);
  }
  // On the boundary is not strictly inside.
  EXPECT_THROW(ray_cast_distance(square4(), {4, 2}, kPi), Error);
}

TEST(RayCast, AgreesWithMarchingOracleOnRandomPolygons) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const auto v = random_star_polygon(rng, {20, 20}, 4, 15, 14);
    const Polygon p(v);
    for (int q = 0; q < 10; ++q) {
      const Point2 o = random_interior_point(rng, p);
      const double angle = uniform(rng, 0, kTwoPi);
      EXPECT_NEAR(ray_cast_distance(p, o, angle), march_farthest_exit(v, o, angle), 1e-2);
    }
  }
}

TEST(Rasterize, SquareFillsGrid) {
  const RasterMask m = rasterize(square4(), RasterGrid{4, 4, 1});
  EXPECT_EQ(m.count(), 16);
}

TEST(Rasterize, OutOfBounds) {
  RasterGrid shifted{4, 4, 1, {10, 10}};
  try {
    rasterize(square4(), shifted);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBounds);
  }
}

TEST(Rasterize, DiamondFractionalArea) {
  // Offset grid so that no sample center lies on the 45 degree edges.
  const RasterMask m = rasterize(diamond4(), RasterGrid{5, 5, 8, {-0.37, -0.41}});
  EXPECT_NEAR(m.area(), 8.0, 0.1);
  // On the aligned grid 64 sample centers sit exactly on the edges and are
  // dropped, so the count is 512 - 64/2.
  EXPECT_EQ(rasterize(diamond4(), RasterGrid{4, 4, 8}).count(), 480);
}

TEST(Rasterize, BoundarySamplesAreExcluded) {
  // Edge (2,0)-(4,2) passes exactly through pixel center (2.5, 0.5).
  const RasterMask m = rasterize(diamond4(), RasterGrid{4, 4, 1});
  EXPECT_FALSE(m.sample(2, 0));
  EXPECT_TRUE(m.sample(1, 1));
}

TEST(Rasterize, InvalidGrid) {
  EXPECT_THROW(rasterize(square4(), RasterGrid{4, 4, 3}), Error);
  EXPECT_THROW(rasterize(square4(), RasterGrid{0, 4, 1}), Error);
}

TEST(RasterIou, IdentityInscribedDisjoint) {
  const RasterGrid g{4, 4, 8};
  EXPECT_EQ(raster_iou(square4(), square4(), g), 1.0);
  EXPECT_NEAR(raster_iou(square4(), diamond4(), RasterGrid{5, 5, 8, {-0.37, -0.41}}), 0.5, 0.01);
  const RasterGrid wide{10, 4, 4};
  const Polygon far({{6, 0}, {10, 0}, {10, 4}, {6, 4}});
  EXPECT_EQ(raster_iou(square4(), far, wide), 0.0);
}

TEST(RasterIou, EmptyUnionThrows) {
  // Neither polygon covers a sample center.
  const Polygon a = thin_l();
  try {
    raster_iou(a, a, RasterGrid{4, 4, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(RasterIou, PropertiesOnRandomPolygons) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Polygon a(random_star_polygon(rng, {30, 30}, 8, 25, 12));
    const Polygon b(random_star_polygon(rng, {30, 30}, 8, 25, 12));
    const RasterGrid g{60, 60, 2};
    EXPECT_EQ(raster_iou(a, a, g), 1.0);
    const double ab = raster_iou(a, b, g);
    EXPECT_EQ(ab, raster_iou(b, a, g));
    if (area(a) >= 100 && area(b) >= 100) {
      RasterGrid fine = g;
      fine.supersample = 4;
      EXPECT_LT(std::abs(ab - raster_iou(a, b, fine)), 0.01);
    }
  }
}

TEST(InteriorAnchor, ConvexUsesCentroid) {
  const Point2 a = interior_anchor(square4(), RasterGrid{4, 4, 1});
  EXPECT_EQ(a, (Point2{2, 2}));
}

TEST(InteriorAnchor, CrescentFallsBackInsideBody) {
  const Polygon c = crescent();
  const Point2 a = interior_anchor(c, RasterGrid{30, 30, 2});
  EXPECT_TRUE(point_in_polygon(c, a));
  // The ring is 2 px thick, so the best sample is close to its midline.
  EXPECT_GT(boundary_distance(c, a), 0.5);
  EXPECT_GE(boundary_distance(c, a), 0.0);
}

TEST(InteriorAnchor, SliverHasNoInteriorSample) {
  try {
    interior_anchor(thin_l(), RasterGrid{4, 4, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(InteriorAnchor, AlwaysInsideOnRandomPolygons) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Polygon p(random_star_polygon(rng, {25, 25}, 3, 20, 10));
    const Point2 a = interior_anchor(p, grid_for(p, 2));
    EXPECT_TRUE(point_in_polygon(p, a));
  }
}
