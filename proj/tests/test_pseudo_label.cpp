// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gsod/error.hpp"
#include "gsod/pseudo_label.hpp"
#include "oracles.hpp"

namespace gsod {
namespace {

// Five 1x1..sized levels filled with zeros; callers overwrite single cells.
std::vector<DensePrediction> zeros(std::size_t classes = 1, std::size_t side = 2) {
    std::vector<DensePrediction> out;
    for (int level = 3; level <= 7; ++level) {
        out.emplace_back(level, side, side, classes, std::vector<double>(side * side * classes, 0.0),
                         std::vector<double>(side * side, 0.0));
    }
    return out;
}

DensePrediction with_cell(const DensePrediction& p, std::size_t cell, std::vector<double> scores, double cen) {
    auto s = p.raw_scores();
    auto c = p.raw_centerness();
    for (std::size_t k = 0; k < scores.size(); ++k) s[cell * p.num_classes() + k] = scores[k];
    c[cell] = cen;
    return DensePrediction(p.level(), p.height(), p.width(), p.num_classes(), std::move(s), std::move(c));
}

TEST(DensePrediction, ValidatesShapesAndRange) {
    EXPECT_THROW(DensePrediction(3, 2, 2, 1, std::vector<double>(3, 0.0), std::vector<double>(4, 0.0)), ShapeError);
    EXPECT_THROW(DensePrediction(3, 2, 2, 1, std::vector<double>(4, 0.0), std::vector<double>(3, 0.0)), ShapeError);
    EXPECT_THROW(DensePrediction(3, 2, 2, 0, {}, std::vector<double>(4, 0.0)), ShapeError);
    EXPECT_THROW(DensePrediction(3, 1, 1, 1, {1.5}, {0.5}), DomainError);
    EXPECT_THROW(DensePrediction(3, 1, 1, 1, {0.5}, {-0.1}), DomainError);
    EXPECT_THROW(DensePrediction(3, 1, 1, 1, {0.5}, {0.5}, std::vector<RotatedBox>(2, RotatedBox(0, 0, 1, 1, 0))),
                 ShapeError);
}

TEST(JointConfidence, Examples) {
    const DensePrediction a(3, 1, 3, 3, {0.0, 0.0, 0.8, 0.0, 0.0, 0.0, 0.3, 0.6, 0.0}, {0.5, 0.7, 0.9});
    const auto c = joint_confidence(a);
    EXPECT_DOUBLE_EQ(c[0].joint, 0.4);
    EXPECT_EQ(c[0].cls, 2);
    EXPECT_EQ(c[1].joint, 0.0);
    EXPECT_NEAR(c[2].joint, 0.54, 1e-15);
    EXPECT_EQ(c[2].cls, 1);
    const DensePrediction tie(3, 1, 1, 2, {0.4, 0.4}, {1.0});
    EXPECT_EQ(joint_confidence(tie)[0].cls, 0);
}

TEST(SlaSelect, LowLevelWeightIsScoreTimesCenterness) {
    auto p = zeros();
    p[0] = with_cell(p[0], 1, {0.5}, 0.8);
    const auto sel = sla_select(p);
    ASSERT_EQ(sel.n_pos(), 1u);
    EXPECT_EQ(sel.entries[0].level, 3);
    EXPECT_EQ(sel.entries[0].cell, 1u);
    EXPECT_NEAR(sel.entries[0].weight, 0.4, 1e-15);
    EXPECT_EQ(sel.n_all, 20u);
}

TEST(SlaSelect, HighLevelIgnoresCenterness) {
    auto p = zeros();
    p[3] = with_cell(p[3], 0, {0.03}, 0.01);
    const auto sel = sla_select(p);
    ASSERT_EQ(sel.n_pos(), 1u);
    EXPECT_EQ(sel.entries[0].level, 6);
    EXPECT_DOUBLE_EQ(sel.entries[0].weight, 0.03);
}

TEST(SlaSelect, TopkBeforeThreshold) {
    // topk = 1 keeps the best joint cell, which fails the threshold: nothing survives,
    // even though another cell clears it.
    auto p = zeros();
    p[0] = with_cell(p[0], 0, {0.015}, 1.0);  // joint 0.015
    p[0] = with_cell(p[0], 1, {0.05}, 0.1);   // joint 0.005
    SlaConfig cfg;
    cfg.topk = 1;
    EXPECT_EQ(sla_select(p, cfg).n_pos(), 0u);
    cfg.topk = 2;
    EXPECT_EQ(sla_select(p, cfg).n_pos(), 1u);
}

TEST(SlaSelect, TiesBrokenByCenternessThenIndex) {
    auto p = zeros();
    p[0] = with_cell(p[0], 3, {0.4}, 0.5);   // joint 0.2, centerness 0.5
    p[1] = with_cell(p[1], 0, {0.25}, 0.8);  // joint 0.2, centerness 0.8
    p[1] = with_cell(p[1], 1, {0.25}, 0.8);  // identical to the previous, later index
    SlaConfig cfg;
    cfg.topk = 2;
    const auto sel = sla_select(p, cfg);
    ASSERT_EQ(sel.n_pos(), 2u);
    EXPECT_EQ(sel.entries[0].level, 4);
    EXPECT_EQ(sel.entries[0].cell, 0u);
    EXPECT_EQ(sel.entries[1].cell, 1u);
}

TEST(SlaSelect, PerLevelScope) {
    auto p = zeros();
    p[0] = with_cell(p[0], 0, {0.9}, 0.9);
    p[0] = with_cell(p[0], 1, {0.8}, 0.9);
    p[1] = with_cell(p[1], 0, {0.1}, 0.1);
    SlaConfig cfg;
    cfg.topk = 1;
    EXPECT_EQ(sla_select(p, cfg).n_pos(), 1u);
    cfg.topk_scope = TopkScope::PerLevel;
    const auto sel = sla_select(p, cfg);
    ASSERT_EQ(sel.n_pos(), 2u);
    EXPECT_EQ(sel.entries[1].level, 4);
}

TEST(SlaSelect, ConfigAndLevelErrors) {
    auto p = zeros();
    SlaConfig bad;
    bad.topk = 0;
    EXPECT_THROW(sla_select(p, bad), ConfigError);
    bad = {};
    bad.score_thresh = 1.0;
    EXPECT_THROW(sla_select(p, bad), ConfigError);
    p.pop_back();
    EXPECT_THROW(sla_select(p), ConfigError);
    auto dup = zeros();
    dup.push_back(dup[0]);
    EXPECT_THROW(sla_select(dup), ConfigError);
}

TEST(SlaSelect, MatchesExhaustiveReference) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const bool quantize = trial % 2 == 1;  // quantized fields create many exact ties
        const auto p = oracle::random_predictions(rng, {16, 16, 8, 4, 2}, 3, quantize);
        for (double thr : {0.01, 0.02, 0.03, 0.3}) {
            for (std::size_t topk : {1u, 50u, 200u, 1000u}) {
                SlaConfig cfg;
                cfg.topk = topk;
                cfg.score_thresh = thr;
                EXPECT_EQ(oracle::tuples(sla_select(p, cfg)), oracle::sla_reference(p, topk, thr));
            }
        }
    }
}

TEST(SlaSelect, Properties) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        const auto p = oracle::random_predictions(rng, {16, 16, 8, 4, 2}, 2, trial % 3 == 0);
        SlaConfig cfg;
        cfg.topk = 100;
        const auto base = sla_select(p, cfg);
        std::size_t low = 0;
        for (const auto& e : base.entries) {
            EXPECT_GE(e.score, cfg.score_thresh);
            EXPECT_GE(e.weight, 0.0);
            EXPECT_LE(e.weight, 1.0);
            EXPECT_LE(e.weight, e.score);
            if (e.level <= 4) {
                ++low;
                EXPECT_LE(e.weight, e.centerness);
            } else {
                EXPECT_EQ(e.weight, e.score);
            }
        }
        EXPECT_LE(low, cfg.topk);
        EXPECT_LE(base.n_pos(), base.n_all);

        auto key = [](const PseudoLabel& e) { return std::make_pair(e.level, e.cell); };
        std::set<std::pair<int, std::size_t>> base_set;
        for (const auto& e : base.entries) base_set.insert(key(e));

        SlaConfig higher = cfg;
        higher.score_thresh = 0.05;
        for (const auto& e : sla_select(p, higher).entries) EXPECT_TRUE(base_set.count(key(e)));

        SlaConfig more = cfg;
        more.topk = 300;
        std::set<std::pair<int, std::size_t>> more_set;
        for (const auto& e : sla_select(p, more).entries) more_set.insert(key(e));
        for (const auto& k : base_set) EXPECT_TRUE(more_set.count(k));
    }
}

TEST(ScoreRatio, CeilRuleAndCoverAll) {
    std::vector<DensePrediction> p;
    std::vector<double> s(100);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i) / 100.0;
    p.emplace_back(3, 10, 10, 1, s, std::vector<double>(100, 0.5));
    const auto three = score_ratio_select(p, 0.03);
    ASSERT_EQ(three.n_pos(), 3u);
    EXPECT_EQ(three.entries[0].cell, 99u);
    EXPECT_DOUBLE_EQ(three.entries[0].weight, 0.99);
    EXPECT_EQ(score_ratio_select(p, 0.031).n_pos(), 4u);
    EXPECT_EQ(score_ratio_select(p, 1.0).n_pos(), 100u);
    EXPECT_THROW(score_ratio_select(p, 0.0), ConfigError);
    EXPECT_THROW(score_ratio_select(p, 1.5), ConfigError);
}

TEST(ScoreRatio, MatchesSortOracle) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = oracle::random_predictions(rng, {16, 16, 8, 4, 2}, 2, trial % 2 == 1);
        struct C {
            double s;
            int level;
            std::size_t cell;
        };
        std::vector<C> all;
        for (const auto& d : p) {
            const auto conf = joint_confidence(d);
            for (std::size_t c = 0; c < d.cells(); ++c) all.push_back({conf[c].score, d.level(), c});
        }
        std::sort(all.begin(), all.end(), [](const C& a, const C& b) {
            return std::make_tuple(-a.s, a.level, a.cell) < std::make_tuple(-b.s, b.level, b.cell);
        });
        const double ratio = 0.07;
        const auto k = static_cast<std::size_t>(std::ceil(ratio * all.size()));
        const auto sel = score_ratio_select(p, ratio);
        ASSERT_EQ(sel.n_pos(), k);
        for (std::size_t i = 0; i < k; ++i) {
            EXPECT_EQ(sel.entries[i].level, all[i].level);
            EXPECT_EQ(sel.entries[i].cell, all[i].cell);
        }
    }
}

TEST(PseudoBoxes, EmptyAndSingle) {
    auto p = zeros();
    std::vector<DensePrediction> boxed;
    for (const auto& d : p) {
        boxed.emplace_back(d.level(), d.height(), d.width(), 1, d.raw_scores(), d.raw_centerness(),
                           std::vector<RotatedBox>(d.cells(), RotatedBox(10, 10, 8, 4, 0)));
    }
    EXPECT_TRUE(pseudo_boxes(boxed, 0.5, 0.5).empty());
    auto s = boxed[2].raw_scores();
    s[1] = 0.9;
    boxed[2] = DensePrediction(5, 2, 2, 1, s, boxed[2].raw_centerness(), boxed[2].boxes());
    const auto out = pseudo_boxes(boxed, 0.5, 0.5);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].level, 5);
    EXPECT_EQ(out[0].cell, 1u);
    EXPECT_THROW(pseudo_boxes(p, 0.0, 0.5), ConsistencyError);  // cells pass but carry no boxes
}

TEST(PseudoBoxes, ClusterCollapsesToOne) {
    std::mt19937_64 rng(24);
    std::normal_distribution<double> jitter(0.0, 0.5);
    std::vector<RotatedBox> boxes;
    std::vector<double> scores;
    for (int i = 0; i < 16; ++i) {
        boxes.emplace_back(50 + jitter(rng), 50 + jitter(rng), 40 + jitter(rng), 12 + jitter(rng), 0.3 + 0.01 * jitter(rng));
        scores.push_back(0.5 + 0.01 * i);
    }
    std::vector<DensePrediction> p;
    p.emplace_back(3, 4, 4, 1, scores, std::vector<double>(16, 0.5), boxes);
    for (int level = 4; level <= 7; ++level) {
        p.emplace_back(level, 1, 1, 1, std::vector<double>{0.0}, std::vector<double>{0.0},
                       std::vector<RotatedBox>{RotatedBox(0, 0, 1, 1, 0)});
    }
    const auto out = pseudo_boxes(p, 0.1, 0.5);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].cell, 15u);
    std::vector<ScoredBox> sb;
    for (std::size_t i = 0; i < boxes.size(); ++i) sb.push_back({boxes[i], scores[i]});
    EXPECT_EQ(oracle::nms_reference(sb, 0.5), (std::vector<std::size_t>{15}));
}

}  // namespace
}  // namespace gsod
