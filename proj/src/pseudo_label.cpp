// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsod/error.hpp"

namespace gsod {

DensePrediction::DensePrediction(int level, std::size_t height, std::size_t width, std::size_t num_classes,
                                 std::vector<double> scores, std::vector<double> centerness,
                                 std::vector<RotatedBox> boxes)
    : level_(level), height_(height), width_(width), num_classes_(num_classes), scores_(std::move(scores)),
      centerness_(std::move(centerness)), boxes_(std::move(boxes)) {
    if (num_classes_ == 0) throw ShapeError("prediction needs at least one class");
    const std::size_t n = height_ * width_;
    if (scores_.size() != n * num_classes_) {
        throw ShapeError("level " + std::to_string(level) + ": expected " + std::to_string(n * num_classes_) +
                         " scores, got " + std::to_string(scores_.size()));
    }
    if (centerness_.size() != n) {
        throw ShapeError("level " + std::to_string(level) + ": expected " + std::to_string(n) +
                         " centerness values, got " + std::to_string(centerness_.size()));
    }
    if (!boxes_.empty() && boxes_.size() != n) {
        throw ShapeError("level " + std::to_string(level) + ": expected " + std::to_string(n) + " boxes, got " +
                         std::to_string(boxes_.size()));
    }
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!std::all_of(scores_.begin(), scores_.end(), in_unit) ||
        !std::all_of(centerness_.begin(), centerness_.end(), in_unit)) {
        throw DomainError("level " + std::to_string(level) + ": scores and centerness must lie in [0, 1]");
    }
}

std::vector<CellConfidence> joint_confidence(const DensePrediction& pred) {
    std::vector<CellConfidence> out(pred.cells());
    for (std::size_t cell = 0; cell < pred.cells(); ++cell) {
        const auto s = pred.scores(cell);
        const auto it = std::max_element(s.begin(), s.end());
        CellConfidence& c = out[cell];
        c.score = *it;
        c.cls = static_cast<int>(it - s.begin());
        c.joint = c.score * pred.centerness(cell);
    }
    return out;
}

void SlaConfig::validate() const {
    if (topk < 1) throw ConfigError("topk must be at least 1");
    if (!(score_thresh > 0.0 && score_thresh < 1.0)) throw ConfigError("score threshold must lie in (0, 1)");
}

namespace {

// Predictions sorted by level; rejects duplicate levels.
std::vector<const DensePrediction*> by_level(std::span<const DensePrediction> preds) {
    std::vector<const DensePrediction*> out;
    for (const auto& p : preds) out.push_back(&p);
    std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->level() < b->level(); });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i]->level() == out[i - 1]->level()) {
            throw ConfigError("duplicate prediction for level " + std::to_string(out[i]->level()));
        }
    }
    return out;
}

const DensePrediction* find_level(const std::vector<const DensePrediction*>& preds, int level) {
    for (auto* p : preds) {
        if (p->level() == level) return p;
    }
    throw ConfigError("prediction for level " + std::to_string(level) + " is missing");
}

std::size_t total_cells(std::span<const DensePrediction> preds) {
    std::size_t n = 0;
    for (const auto& p : preds) n += p.cells();
    return n;
}

struct Ranked {
    const DensePrediction* pred;
    std::size_t cell;
    CellConfidence conf;
};

PseudoLabel make_entry(const DensePrediction& pred, std::size_t cell, const CellConfidence& conf, double weight) {
    PseudoLabel e;
    e.level = pred.level();
    e.cell = cell;
    e.cls = conf.cls;
    e.score = conf.score;
    e.centerness = pred.centerness(cell);
    e.weight = weight;
    if (pred.has_boxes()) e.box = pred.box(cell);
    return e;
}

// Stable sort on candidates produced in (level, cell) order keeps the
// lower index first among equal keys.
void rank_by_joint(std::vector<Ranked>& pool) {
    std::stable_sort(pool.begin(), pool.end(), [](const Ranked& a, const Ranked& b) {
        if (a.conf.joint != b.conf.joint) return a.conf.joint > b.conf.joint;
        return a.pred->centerness(a.cell) > b.pred->centerness(b.cell);
    });
}

}  // namespace

PseudoLabelSet sla_select(std::span<const DensePrediction> preds, const SlaConfig& cfg) {
    cfg.validate();
    const auto levels = by_level(preds);
    auto low = cfg.low_levels;
    auto high = cfg.high_levels;
    std::sort(low.begin(), low.end());
    std::sort(high.begin(), high.end());

    PseudoLabelSet out;
    out.n_all = total_cells(preds);

    std::vector<std::vector<Ranked>> pools;
    for (int level : low) {
        const DensePrediction* p = find_level(levels, level);
        if (pools.empty() || cfg.topk_scope == TopkScope::PerLevel) pools.emplace_back();
        const auto conf = joint_confidence(*p);
        for (std::size_t cell = 0; cell < p->cells(); ++cell) pools.back().push_back({p, cell, conf[cell]});
    }
    for (auto& pool : pools) {
        rank_by_joint(pool);
        const std::size_t keep = std::min(cfg.topk, pool.size());
        for (std::size_t i = 0; i < keep; ++i) {
            const Ranked& r = pool[i];
            if (r.conf.score < cfg.score_thresh) continue;
            out.entries.push_back(make_entry(*r.pred, r.cell, r.conf, r.conf.joint));
        }
    }

    for (int level : high) {
        const DensePrediction* p = find_level(levels, level);
        const auto conf = joint_confidence(*p);
        for (std::size_t cell = 0; cell < p->cells(); ++cell) {
            if (conf[cell].score >= cfg.score_thresh) out.entries.push_back(make_entry(*p, cell, conf[cell], conf[cell].score));
        }
    }
    return out;
}

PseudoLabelSet score_ratio_select(std::span<const DensePrediction> preds, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio must lie in (0, 1]");
    const auto levels = by_level(preds);
    PseudoLabelSet out;
    out.n_all = total_cells(preds);

    // ceil(ratio * N) without letting representation error (0.03 * 100 =
    // 3.0000000000000004) push the count up by one.
    const double want = ratio * static_cast<double>(out.n_all);
    const double nearest = std::round(want);
    const double k = std::abs(want - nearest) <= 1e-9 * std::max(1.0, want) ? nearest : std::ceil(want);
    const auto keep = std::min(out.n_all, static_cast<std::size_t>(k));

    std::vector<Ranked> pool;
    pool.reserve(out.n_all);
    for (auto* p : levels) {
        const auto conf = joint_confidence(*p);
        for (std::size_t cell = 0; cell < p->cells(); ++cell) pool.push_back({p, cell, conf[cell]});
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Ranked& a, const Ranked& b) {
        return a.conf.score > b.conf.score;
    });
    for (std::size_t i = 0; i < keep; ++i) {
        const Ranked& r = pool[i];
        out.entries.push_back(make_entry(*r.pred, r.cell, r.conf, r.conf.score));
    }
    return out;
}

std::vector<PseudoBox> pseudo_boxes(std::span<const DensePrediction> preds, double score_thresh, double nms_iou) {
    if (!(score_thresh >= 0.0 && score_thresh <= 1.0)) throw ConfigError("score threshold must lie in [0, 1]");
    std::vector<PseudoBox> candidates;
    for (auto* p : by_level(preds)) {
        const auto conf = joint_confidence(*p);
        for (std::size_t cell = 0; cell < p->cells(); ++cell) {
            if (conf[cell].score < score_thresh) continue;
            if (!p->has_boxes()) {
                throw ConsistencyError("level " + std::to_string(p->level()) + " carries no decoded boxes");
            }
            candidates.push_back({p->box(cell), conf[cell].score, conf[cell].cls, p->level(), cell});
        }
    }
    std::vector<ScoredBox> scored;
    scored.reserve(candidates.size());
    for (const auto& c : candidates) scored.push_back({c.box, c.score});
    std::vector<PseudoBox> out;
    for (std::size_t i : rotated_nms(scored, nms_iou)) out.push_back(candidates[i]);
    return out;
}

}  // namespace gsod
