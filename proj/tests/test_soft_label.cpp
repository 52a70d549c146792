// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gsod/error.hpp"
#include "gsod/soft_label.hpp"
#include "oracles.hpp"

namespace gsod {
namespace {

TEST(ScaleFactor, Conventions) {
    const RotatedBox quarter(512, 512, 512, 512, 0.0);  // a quarter of a 1024 x 1024 image
    CcslParams p;
    EXPECT_NEAR(scale_factor(quarter, p), std::pow(0.25, 5.0), 1e-15);
    p.convention = ExponentConvention::Power;
    EXPECT_NEAR(scale_factor(quarter, p), std::pow(0.25, 0.2), 1e-15);
    p.beta_smooth = 0.0;
    EXPECT_EQ(scale_factor(quarter, p), 1.0);
    p.convention = ExponentConvention::Root;
    EXPECT_EQ(scale_factor(quarter, p), 1.0);
}

TEST(ScaleFactor, ClampsAreaShare) {
    CcslParams p;
    p.image_w = p.image_h = 100.0;
    EXPECT_EQ(scale_factor(RotatedBox(50, 50, 400, 300, 0.0), p), 1.0);
}

TEST(ScaleFactor, GrowsWithArea) {
    CcslParams p;
    double prev = 0.0;
    for (double side = 4; side <= 1024; side *= 1.5) {
        const double g = scale_factor(RotatedBox(512, 512, side, side / 2, 0.3), p);
        EXPECT_GT(g, prev);
        prev = g;
    }
}

TEST(ScaleFactor, RejectsBadParams) {
    CcslParams p;
    p.beta_smooth = -0.1;
    EXPECT_THROW(scale_factor(RotatedBox(0, 0, 1, 1, 0), p), ConfigError);
    p = {};
    p.image_w = 0.0;
    EXPECT_THROW(scale_factor(RotatedBox(0, 0, 1, 1, 0), p), ConfigError);
}

TEST(CcslValue, CenterBoundaryAndOutside) {
    const RotatedBox b(100, 100, 60, 20, 0.4);
    const auto g = box_to_gaussian(b);
    EXPECT_EQ(ccsl_value(g, {100, 100}, 0.3), 1.0);
    const Point2 tip{100 + 30 * std::cos(0.4), 100 + 30 * std::sin(0.4)};
    EXPECT_NEAR(ccsl_value(g, tip, 0.3), 0.0, 1e-4);
    EXPECT_THROW(ccsl_value(g, {100 + 40 * std::cos(0.4), 100 + 40 * std::sin(0.4)}, 0.3), DomainError);
    EXPECT_THROW(ccsl_value(g, {100, 100}, 0.0), DomainError);
}

TEST(CcslValue, GammaOneIsCenterness) {
    const RotatedBox b(100, 100, 60, 20, -0.2);
    const auto g = box_to_gaussian(b);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-30, 30);
    for (int i = 0; i < 500; ++i) {
        const Point2 p{100 + u(rng), 100 + u(rng)};
        const double m = oracle::mahalanobis_sq(b, p);
        if (m > 1.0) continue;
        EXPECT_NEAR(ccsl_value(g, p, 1.0), 1.0 - m, 1e-12);
    }
}

TEST(CcslValue, MonotoneInDistanceAndExponent) {
    const RotatedBox b(0, 0, 80, 40, 0.0);
    const auto g = box_to_gaussian(b);
    for (double gamma : {0.01, 0.2, 1.0, 3.0}) {
        double prev = 2.0;
        for (double x = 0.0; x <= 40.0; x += 2.0) {
            const double y = ccsl_value(g, {x, 0}, gamma);
            EXPECT_GE(y, 0.0);
            EXPECT_LE(y, 1.0);
            EXPECT_LE(y, prev);
            prev = y;
        }
    }
    // A larger exponent never raises the target.
    for (double x = 0.0; x < 40.0; x += 2.0) {
        EXPECT_GE(ccsl_value(g, {x, 0}, 0.2), ccsl_value(g, {x, 0}, 1.0));
    }
}

TEST(BuildSoftTargets, MatchesPerCellFormula) {
    const std::vector<RotatedBox> boxes{RotatedBox(60, 60, 50, 20, 0.3, 1), RotatedBox(150, 100, 30, 30, 0.0, 0)};
    const auto grid = FeatureGrid::make(3, 256, 256);
    const auto a = gca_assign(boxes, grid);
    CcslParams p;
    const auto map = build_soft_targets(a, boxes, p);
    EXPECT_EQ(map.positives.size(), a.positive_count());
    for (const auto& t : map.positives) {
        const auto& cell = a.cells[t.cell];
        ASSERT_TRUE(cell.positive());
        const RotatedBox& b = boxes[*cell.box_id];
        EXPECT_EQ(t.cls, *b.category());
        const double m = oracle::mahalanobis_sq(b, grid.point(t.cell));
        EXPECT_NEAR(t.y, std::pow(std::max(0.0, 1.0 - m), scale_factor(b, p)), 1e-12);
        EXPECT_GE(t.y, cell.centerness - 1e-12);  // gamma < 1 lifts the target
    }
}

TEST(BuildSoftTargets, BetaZeroReproducesCenterness) {
    const std::vector<RotatedBox> boxes{RotatedBox(60, 60, 50, 20, 0.3, 0)};
    const auto grid = FeatureGrid::make(3, 128, 128);
    const auto a = gca_assign(boxes, grid);
    CcslParams p;
    p.beta_smooth = 0.0;
    for (const auto& t : build_soft_targets(a, boxes, p).positives) {
        EXPECT_NEAR(t.y, a.cells[t.cell].centerness, 1e-12);
    }
}

TEST(BuildSoftTargets, RectangleSamplersGetZeroOutsideEllipse) {
    const std::vector<RotatedBox> boxes{RotatedBox(32, 32, 48, 48, 0.0, 0)};
    const auto grid = FeatureGrid::make(3, 64, 64);
    const auto a = all_sampling_assign(boxes, grid);
    const auto map = build_soft_targets(a, boxes, CcslParams{});
    bool saw_zero = false;
    for (const auto& t : map.positives) saw_zero = saw_zero || t.y == 0.0;
    EXPECT_TRUE(saw_zero);
}

TEST(BuildSoftTargets, Dense) {
    const std::vector<RotatedBox> boxes{RotatedBox(20, 20, 30, 10, 0.0, 2)};
    const auto grid = FeatureGrid::make(3, 64, 64);
    const auto map = build_soft_targets(gca_assign(boxes, grid), boxes, CcslParams{});
    const auto dense = map.dense(3);
    ASSERT_EQ(dense.size(), grid.cells() * 3);
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] != 0.0) {
            ++nonzero;
            EXPECT_EQ(i % 3, 2u);
        }
    }
    EXPECT_GT(nonzero, 0u);
    EXPECT_THROW(map.dense(2), ConsistencyError);
}

TEST(BuildSoftTargets, ConsistencyErrors) {
    const std::vector<RotatedBox> boxes{RotatedBox(20, 20, 30, 10, 0.0, 1)};
    const auto grid = FeatureGrid::make(3, 64, 64);
    auto a = gca_assign(boxes, grid);
    EXPECT_THROW(build_soft_targets(a, {}, CcslParams{}), ConsistencyError);
    const std::vector<RotatedBox> relabeled{boxes[0].with_category(0)};
    EXPECT_THROW(build_soft_targets(a, relabeled, CcslParams{}), ConsistencyError);
    a.cells.pop_back();
    EXPECT_THROW(build_soft_targets(a, boxes, CcslParams{}), ConsistencyError);
}

TEST(BuildSoftTargets, SmallBoxesKeepFlatterTargets) {
    // Same normalized position inside a box and its doubled copy: the larger box
    // has the larger exponent and therefore the lower target.
    const RotatedBox small(100, 100, 40, 16, 0.2, 0);
    const RotatedBox large = small.scaled(2.0);
    const auto gs = box_to_gaussian(small), gl = box_to_gaussian(large);
    CcslParams p;
    for (double t = 0.0; t < 1.0; t += 0.1) {
        const Point2 ps{100 + t * 20 * std::cos(0.2), 100 + t * 20 * std::sin(0.2)};
        const Point2 pl{200 + t * 40 * std::cos(0.2), 200 + t * 40 * std::sin(0.2)};
        EXPECT_GE(ccsl_value(gs, ps, scale_factor(small, p)), ccsl_value(gl, pl, scale_factor(large, p)));
    }
}

}  // namespace
}  // namespace gsod
