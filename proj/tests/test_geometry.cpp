// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gsod/error.hpp"
#include "gsod/geometry.hpp"
#include "oracles.hpp"

namespace gsod {
namespace {

RotatedBox random_box(std::mt19937_64& rng, double extent = 100.0) {
    std::uniform_real_distribution<double> pos(-extent, extent), size(1.0, 60.0), ang(-4.0, 4.0);
    return RotatedBox(pos(rng), pos(rng), size(rng), size(rng), ang(rng));
}

TEST(CanonicalAngle, WrapsIntoHalfOpenRange) {
    EXPECT_DOUBLE_EQ(canonical_angle(0.3), 0.3);
    EXPECT_NEAR(canonical_angle(0.3 + kPi), 0.3, 1e-12);
    EXPECT_NEAR(canonical_angle(0.3 - 3 * kPi), 0.3, 1e-12);
    EXPECT_NEAR(canonical_angle(kPi / 2), -kPi / 2, 1e-12);
    EXPECT_NEAR(canonical_angle(-kPi / 2), -kPi / 2, 1e-12);
}

TEST(RotatedBox, RejectsDegenerateAndNonFinite) {
    EXPECT_THROW(RotatedBox(0, 0, 0.0, 1, 0), InvalidBoxError);
    EXPECT_THROW(RotatedBox(0, 0, 1, -2, 0), InvalidBoxError);
    EXPECT_THROW(RotatedBox(0, 0, 1e-7, 1, 0), InvalidBoxError);
    EXPECT_THROW(RotatedBox(NAN, 0, 1, 1, 0), InvalidBoxError);
    EXPECT_THROW(RotatedBox(0, 0, 1, 1, INFINITY), InvalidBoxError);
    EXPECT_NO_THROW(RotatedBox(0, 0, kMinBoxSide, 1, 0));
}

TEST(RotatedBox, ThetaIsCanonical) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const RotatedBox b = random_box(rng);
        EXPECT_GE(b.theta(), -kPi / 2);
        EXPECT_LT(b.theta(), kPi / 2);
    }
}

TEST(BoxToGaussian, AxisAligned) {
    const Gaussian2D g = box_to_gaussian(RotatedBox(0, 0, 2, 4, 0));
    EXPECT_EQ(g.mu, (Point2{0, 0}));
    EXPECT_NEAR(g.sigma.xx, 1.0, 1e-12);
    EXPECT_NEAR(g.sigma.xy, 0.0, 1e-12);
    EXPECT_NEAR(g.sigma.yy, 4.0, 1e-12);
}

TEST(BoxToGaussian, QuarterTurnSwapsAxes) {
    const Gaussian2D g = box_to_gaussian(RotatedBox(0, 0, 2, 4, kPi / 2));
    EXPECT_NEAR(g.sigma.xx, 4.0, 1e-12);
    EXPECT_NEAR(g.sigma.xy, 0.0, 1e-12);
    EXPECT_NEAR(g.sigma.yy, 1.0, 1e-12);
}

TEST(BoxToGaussian, MatchesExplicitMatrixProduct) {
    const RotatedBox b(5, 3, 6, 2, kPi / 6);
    Eigen::Matrix2d r;
    r << std::cos(kPi / 6), -std::sin(kPi / 6), std::sin(kPi / 6), std::cos(kPi / 6);
    const Eigen::Matrix2d expect = r * Eigen::Vector2d(9.0, 1.0).asDiagonal() * r.transpose();
    const Gaussian2D g = box_to_gaussian(b);
    EXPECT_EQ(g.mu, (Point2{5, 3}));
    EXPECT_NEAR(g.sigma.xx, expect(0, 0), 1e-12);
    EXPECT_NEAR(g.sigma.xy, expect(0, 1), 1e-12);
    EXPECT_NEAR(g.sigma.yy, expect(1, 1), 1e-12);
}

TEST(BoxToGaussian, DeterminantAndRepresentationInvariance) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
        const RotatedBox b = random_box(rng);
        const Gaussian2D g = box_to_gaussian(b);
        const double det = b.w() * b.w() * b.h() * b.h() / 16.0;
        EXPECT_NEAR(g.sigma.det(), det, 1e-9 * det);
        const Gaussian2D s = box_to_gaussian(swap_wh_rotate90(b));
        const double scale = std::max({std::abs(g.sigma.xx), std::abs(g.sigma.yy), 1.0});
        EXPECT_NEAR(s.sigma.xx, g.sigma.xx, 1e-9 * scale);
        EXPECT_NEAR(s.sigma.xy, g.sigma.xy, 1e-9 * scale);
        EXPECT_NEAR(s.sigma.yy, g.sigma.yy, 1e-9 * scale);
    }
}

TEST(Mahalanobis, AnchorPoints) {
    const Gaussian2D g = box_to_gaussian(RotatedBox(0, 0, 2, 4, 0));
    EXPECT_EQ(mahalanobis_sq(g, {0, 0}), 0.0);
    EXPECT_NEAR(mahalanobis_sq(g, {1, 0}), 1.0, 1e-12);
    EXPECT_NEAR(mahalanobis_sq(g, {0, 2}), 1.0, 1e-12);
}

TEST(Mahalanobis, MatchesLinearSolveOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> off(-80.0, 80.0);
    for (int i = 0; i < 2000; ++i) {
        const RotatedBox b = random_box(rng);
        const Point2 p{b.cx() + off(rng), b.cy() + off(rng)};
        const double ref = oracle::mahalanobis_sq(b, p);
        EXPECT_NEAR(mahalanobis_sq(box_to_gaussian(b), p), ref, 1e-10 * std::max(1.0, ref));
    }
}

TEST(Mahalanobis, RotationEquivariance) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> off(-30.0, 30.0), phi(-kPi, kPi);
    for (int i = 0; i < 500; ++i) {
        const RotatedBox b = random_box(rng);
        const double dx = off(rng), dy = off(rng), a = phi(rng);
        const RotatedBox rb(b.cx(), b.cy(), b.w(), b.h(), b.theta() + a);
        const Point2 rp{b.cx() + std::cos(a) * dx - std::sin(a) * dy, b.cy() + std::sin(a) * dx + std::cos(a) * dy};
        const double m0 = mahalanobis_sq(box_to_gaussian(b), {b.cx() + dx, b.cy() + dy});
        EXPECT_NEAR(mahalanobis_sq(box_to_gaussian(rb), rp), m0, 1e-9 * std::max(1.0, m0));
    }
}

TEST(Mahalanobis, IllConditionedSigmaThrows) {
    const Gaussian2D g{{0, 0}, {1.0, 0.0, 1e-13}};
    EXPECT_THROW(mahalanobis_sq(g, {1, 1}), DegenerateGaussianError);
    const Gaussian2D neg{{0, 0}, {1.0, 2.0, 1.0}};
    EXPECT_THROW(mahalanobis_sq(neg, {1, 1}), DegenerateGaussianError);
}

TEST(GaussianCenterness, Anchors) {
    const RotatedBox b(10, 20, 40, 10, 0);
    const Gaussian2D g = box_to_gaussian(b);
    EXPECT_DOUBLE_EQ(gaussian_centerness(g, {10, 20}), 1.0);
    EXPECT_NEAR(gaussian_centerness(g, {30, 20}), 0.0, 1e-9);
    EXPECT_NEAR(gaussian_centerness(g, {20, 20}), 0.75, 1e-9);  // half the major semi-axis
    EXPECT_LT(gaussian_centerness(g, {40, 20}), 0.0);              // unclamped outside
}

TEST(PointInRotatedBox, CenterAndCorners) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const RotatedBox b = random_box(rng);
        EXPECT_TRUE(point_in_rotated_box(b, b.center()));
        for (const Point2& c : b.corners()) EXPECT_TRUE(point_in_rotated_box(b, c));
    }
}

TEST(PointInRotatedBox, MatchesIndependentInverseRotation) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> off(-60.0, 60.0);
    int disagreements = 0;
    for (int i = 0; i < 200; ++i) {
        const RotatedBox b = random_box(rng);
        const auto q = oracle::corners(b);
        for (int k = 0; k < 200; ++k) {
            const Point2 p{b.cx() + off(rng), b.cy() + off(rng)};
            disagreements += point_in_rotated_box(b, p) != oracle::inside_quad(q, p.x, p.y);
        }
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(PointInRotatedBox, InscribedEllipseLiesInside) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> off(-60.0, 60.0);
    for (int i = 0; i < 200; ++i) {
        const RotatedBox b = random_box(rng);
        const Gaussian2D g = box_to_gaussian(b);
        for (int k = 0; k < 200; ++k) {
            const Point2 p{b.cx() + off(rng), b.cy() + off(rng)};
            if (mahalanobis_sq(g, p) <= 1.0) EXPECT_TRUE(point_in_rotated_box(b, p));
        }
        // Tangent points of the ellipse are exactly on the box edge.
        const double c = std::cos(b.theta()), s = std::sin(b.theta());
        EXPECT_TRUE(point_in_rotated_box(b, {b.cx() + c * b.w() / 2, b.cy() + s * b.w() / 2}));
        EXPECT_TRUE(point_in_rotated_box(b, {b.cx() - s * b.h() / 2, b.cy() + c * b.h() / 2}));
    }
}

TEST(PolygonArea, ShoelaceSign) {
    const std::vector<Point2> ccw{{0, 0}, {2, 0}, {2, 1}, {0, 1}};
    const std::vector<Point2> cw(ccw.rbegin(), ccw.rend());
    EXPECT_DOUBLE_EQ(polygon_signed_area(ccw), 2.0);
    EXPECT_DOUBLE_EQ(polygon_signed_area(cw), -2.0);
    EXPECT_DOUBLE_EQ(polygon_signed_area(std::span<const Point2>{}), 0.0);
}

TEST(RotatedIoU, AnalyticCases) {
    const RotatedBox a(0, 0, 1, 1, 0);
    EXPECT_DOUBLE_EQ(rotated_iou(a, a), 1.0);
    EXPECT_NEAR(rotated_iou(a, RotatedBox(0.5, 0, 1, 1, 0)), 1.0 / 3.0, 1e-9);
    EXPECT_EQ(rotated_iou(RotatedBox(0, 0, 10, 5, 0.3), RotatedBox(1000, 0, 10, 10, -0.2)), 0.0);
    // Edge contact only.
    EXPECT_EQ(rotated_iou(a, RotatedBox(1, 0, 1, 1, 0)), 0.0);
    // Containment: small square centered in a big one.
    EXPECT_NEAR(rotated_iou(RotatedBox(0, 0, 4, 4, 0), RotatedBox(0, 0, 2, 2, 0.7)), 0.25, 1e-12);
    // Square rotated by 45 degrees against itself unrotated.
    const double octagon = 8.0 * (std::sqrt(2.0) - 1.0);  // regular octagon, unit inradius
    EXPECT_NEAR(rotated_iou(RotatedBox(0, 0, 2, 2, 0), RotatedBox(0, 0, 2, 2, kPi / 4)),
                octagon / (8.0 - octagon), 1e-12);
}

TEST(RotatedIoU, SymmetryAndScaleInvariance) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> sc(0.01, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const RotatedBox a = random_box(rng, 20.0), b = random_box(rng, 20.0);
        const double ab = rotated_iou(a, b);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 1.0);
        EXPECT_NEAR(ab, rotated_iou(b, a), 1e-12);
        EXPECT_NEAR(rotated_iou(a, a), 1.0, 1e-12);
        const double s = sc(rng);
        EXPECT_NEAR(rotated_iou(a.scaled(s), b.scaled(s)), ab, 1e-9);
        EXPECT_NEAR(rotated_iou(swap_wh_rotate90(a), b), ab, 1e-9);
    }
}

TEST(RotatedIoU, AgreesWithMonteCarlo) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 30; ++i) {
        const RotatedBox a = random_box(rng, 15.0), b = random_box(rng, 15.0);
        EXPECT_NEAR(rotated_iou(a, b), oracle::mc_iou(a, b, 200000, 100 + i), 0.01);
    }
}

TEST(RotatedNms, TrivialCases) {
    EXPECT_TRUE(rotated_nms({}, 0.5).empty());
    const RotatedBox b(0, 0, 10, 4, 0.2);
    const std::vector<ScoredBox> one{{b, 0.3}};
    EXPECT_EQ(rotated_nms(one, 0.5), (std::vector<std::size_t>{0}));
    const std::vector<ScoredBox> two{{b, 0.8}, {b, 0.9}};
    EXPECT_EQ(rotated_nms(two, 0.5), (std::vector<std::size_t>{1}));
}

TEST(RotatedNms, TiesKeepLowerIndex) {
    const RotatedBox b(0, 0, 10, 4, 0.2);
    const std::vector<ScoredBox> tie{{b, 0.5}, {b, 0.5}, {RotatedBox(100, 0, 3, 3, 0), 0.5}};
    EXPECT_EQ(rotated_nms(tie, 0.5), (std::vector<std::size_t>{0, 2}));
}

TEST(RotatedNms, EqualsBruteForce) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ScoredBox> boxes;
        for (int i = 0; i < 10; ++i) boxes.push_back({random_box(rng, 25.0), score(rng)});
        for (double t : {0.1, 0.3, 0.5, 0.7}) EXPECT_EQ(rotated_nms(boxes, t), oracle::nms_reference(boxes, t));
    }
}

TEST(RotatedNms, RejectsBadInputs) {
    const std::vector<ScoredBox> one{{RotatedBox(0, 0, 1, 1, 0), 0.3}};
    EXPECT_THROW(rotated_nms(one, 0.0), ConfigError);
    EXPECT_THROW(rotated_nms(one, 1.0), ConfigError);
    const std::vector<ScoredBox> bad{{RotatedBox(0, 0, 1, 1, 0), NAN}};
    EXPECT_THROW(rotated_nms(bad, 0.5), DomainError);
}

}  // namespace
}  // namespace gsod
