#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ptrack/errors.hpp"
#include "ptrack/geometry.hpp"

using namespace ptrack;

namespace {

const FrameGeometry kFrame{640, 480, 30.0};

}  // namespace

TEST(Geometry, CentroidDistanceToFrameCenter) {
    EXPECT_DOUBLE_EQ(centroid_distance({300, 220, 40, 40}, kFrame), 0.0);
    // Centroid (350, 280) is a 30-40-50 triangle away from (320, 240).
    EXPECT_DOUBLE_EQ(centroid_distance({330, 260, 40, 40}, kFrame), 50.0);
}

TEST(Geometry, EdgeBandOnEverySide) {
    EXPECT_FALSE(is_at_edge({30, 30, 580, 420}, kFrame));  // exactly the inner rectangle
    EXPECT_TRUE(is_at_edge({29.5, 100, 50, 50}, kFrame));
    EXPECT_TRUE(is_at_edge({100, 29.5, 50, 50}, kFrame));
    EXPECT_TRUE(is_at_edge({560.5, 100, 50, 50}, kFrame));
    EXPECT_TRUE(is_at_edge({100, 400.5, 50, 50}, kFrame));
    EXPECT_TRUE(is_at_edge({-20, 100, 50, 50}, kFrame));  // partly outside the frame
}

TEST(Geometry, IouBasics) {
    const BBox a{0, 0, 10, 10};
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    EXPECT_DOUBLE_EQ(iou(a, {20, 20, 5, 5}), 0.0);
    EXPECT_DOUBLE_EQ(iou(a, {10, 0, 10, 10}), 0.0);  // touching edges
    EXPECT_DOUBLE_EQ(iou(a, {5, 0, 10, 10}), 50.0 / 150.0);
    EXPECT_DOUBLE_EQ(iou(a, {2, 2, 5, 5}), 25.0 / 100.0);  // containment
}

TEST(Geometry, IouIsOneForIdenticalOddBoxes) {
    const BBox a{0.1, 1e8 + 0.3, 0.7, 3.3};
    EXPECT_EQ(iou(a, a), 1.0);
}

TEST(Geometry, IouSymmetricAndBounded) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(-50, 150);
    std::uniform_real_distribution<double> size(0.5, 80);
    for (int i = 0; i < 2000; ++i) {
        const BBox a{pos(rng), pos(rng), size(rng), size(rng)};
        const BBox b{pos(rng), pos(rng), size(rng), size(rng)};
        const double v = iou(a, b);
        EXPECT_EQ(v, iou(b, a));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Geometry, AgreesWithRasterOracle) {
    constexpr double q = 0.5;
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pos(-40, 1300);  // half-pixel units
    std::uniform_int_distribution<int> size(1, 160);
    std::uniform_int_distribution<int> shift(-60, 60);
    for (int i = 0; i < 300; ++i) {
        const BBox a{q * pos(rng), q * pos(rng), q * size(rng), q * size(rng)};
        const BBox b{a.x + q * shift(rng), a.y + q * shift(rng), q * size(rng), q * size(rng)};
        EXPECT_NEAR(iou(a, b), ref::raster_iou(a, b, q), 1e-12);
        EXPECT_EQ(is_at_edge(a, kFrame), ref::raster_at_edge(a, kFrame, q));
    }
}

TEST(Geometry, FrameValidation) {
    EXPECT_TRUE(kFrame.valid());
    EXPECT_FALSE((FrameGeometry{60, 480, 30}).valid());  // no interior left
    EXPECT_FALSE((FrameGeometry{0, 480, 30}).valid());
    EXPECT_FALSE((FrameGeometry{640, 480, -1}).valid());
    EXPECT_THROW((FrameGeometry{60, 60, 30}).validate(), ArgumentError);
}

TEST(Geometry, BoxValidity) {
    EXPECT_TRUE((BBox{0, 0, 1, 1}).valid());
    EXPECT_FALSE((BBox{0, 0, 0, 1}).valid());
    EXPECT_FALSE((BBox{0, 0, 1, -1}).valid());
    EXPECT_FALSE((BBox{std::nan(""), 0, 1, 1}).valid());
}
