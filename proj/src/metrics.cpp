// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gsod/error.hpp"

namespace gsod {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<std::size_t> score_order(std::span<const ScoredDetection> preds) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
    return order;
}

// Greedy matching of `pred_idx` (already score-ordered) against `gt_idx`.
std::size_t greedy_matches(std::span<const ScoredDetection> preds, std::span<const RotatedBox> gts,
                           const std::vector<std::size_t>& pred_idx, const std::vector<std::size_t>& gt_idx,
                           const std::vector<std::vector<double>>& iou, double thresh) {
    std::vector<bool> taken(gt_idx.size(), false);
    std::size_t matched = 0;
    for (std::size_t pi = 0; pi < pred_idx.size(); ++pi) {
        double best = -1.0;
        std::size_t best_g = gt_idx.size();
        for (std::size_t gi = 0; gi < gt_idx.size(); ++gi) {
            if (taken[gi]) continue;
            const double v = iou[pi][gi];
            if (v > best) {
                best = v;
                best_g = gi;
            }
        }
        if (best_g < gt_idx.size() && best >= thresh) {
            taken[best_g] = true;
            ++matched;
        }
    }
    (void)preds;
    (void)gts;
    return matched;
}

std::vector<std::vector<double>> iou_table(std::span<const ScoredDetection> preds, std::span<const RotatedBox> gts,
                                           const std::vector<std::size_t>& pred_idx,
                                           const std::vector<std::size_t>& gt_idx) {
    std::vector<std::vector<double>> t(pred_idx.size(), std::vector<double>(gt_idx.size()));
    for (std::size_t i = 0; i < pred_idx.size(); ++i) {
        for (std::size_t j = 0; j < gt_idx.size(); ++j) t[i][j] = rotated_iou(preds[pred_idx[i]].box, gts[gt_idx[j]]);
    }
    return t;
}

}  // namespace

PixelPRResult& PixelPRResult::operator+=(const PixelPRResult& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    recall = ratio(tp, tp + fn);
    precision = ratio(tp, tp + fp);
    return *this;
}

PixelPRResult pixel_pr(const PseudoLabelSet& selected, std::span<const AssignmentResult> gt,
                       const PixelPROptions& opts) {
    std::map<int, const AssignmentResult*> by_level;
    for (const auto& a : gt) {
        if (a.cells.size() != a.grid.cells()) throw ConsistencyError("ground-truth assignment size mismatch");
        if (!by_level.emplace(a.grid.level, &a).second) {
            throw ConsistencyError("duplicate ground-truth level " + std::to_string(a.grid.level));
        }
    }
    std::map<int, std::vector<bool>> hit;
    for (const auto& [level, a] : by_level) hit[level].assign(a->cells.size(), false);

    PixelPRResult r;
    for (const PseudoLabel& e : selected.entries) {
        const auto it = by_level.find(e.level);
        if (it == by_level.end() || e.cell >= it->second->cells.size()) {
            throw ConsistencyError("selected cell (level " + std::to_string(e.level) + ", cell " +
                                   std::to_string(e.cell) + ") is not on the ground-truth grids");
        }
        const CellTarget& t = it->second->cells[e.cell];
        auto seen = hit[e.level][e.cell];
        const bool match = t.positive() && (!opts.class_aware || t.label == e.cls);
        if (match && !seen) {
            seen = true;
            ++r.tp;
        } else {
            ++r.fp;
        }
    }
    std::size_t gt_points = 0;
    for (const auto& [level, a] : by_level) gt_points += a->positive_count();
    r.fn = gt_points - r.tp;
    r.recall = ratio(r.tp, r.tp + r.fn);
    r.precision = ratio(r.tp, r.tp + r.fp);
    return r;
}

std::vector<ThresholdPR> precision_at_iou(std::span<const ScoredDetection> preds, std::span<const RotatedBox> gts,
                                          std::span<const double> thresholds, double score_floor) {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) throw ConfigError("IoU thresholds must lie in (0, 1)");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw ConfigError("IoU thresholds must be ascending");
    }
    std::vector<std::size_t> pred_idx;
    for (std::size_t i : score_order(preds)) {
        if (preds[i].score >= score_floor) pred_idx.push_back(i);
    }
    std::vector<std::size_t> gt_idx(gts.size());
    std::iota(gt_idx.begin(), gt_idx.end(), std::size_t{0});
    const auto iou = iou_table(preds, gts, pred_idx, gt_idx);

    std::vector<ThresholdPR> out;
    for (double t : thresholds) {
        const std::size_t m = greedy_matches(preds, gts, pred_idx, gt_idx, iou, t);
        out.push_back({t, ratio(m, pred_idx.size()), ratio(m, gts.size())});
    }
    return out;
}

double pearson(std::span<const std::pair<double, double>> samples) {
    if (samples.size() < 2) throw DomainError("correlation needs at least 2 samples");
    const double n = static_cast<double>(samples.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : samples) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [x, y] : samples) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw DomainError("correlation undefined for constant samples");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::size_t> Heatmap2D::score_marginal() const {
    std::vector<std::size_t> m(bins, 0);
    for (std::size_t i = 0; i < bins; ++i) {
        for (std::size_t j = 0; j < bins; ++j) m[i] += at(i, j);
    }
    return m;
}

std::vector<std::size_t> Heatmap2D::centerness_marginal() const {
    std::vector<std::size_t> m(bins, 0);
    for (std::size_t i = 0; i < bins; ++i) {
        for (std::size_t j = 0; j < bins; ++j) m[j] += at(i, j);
    }
    return m;
}

Heatmap2D score_centerness_heatmap(std::span<const std::pair<double, double>> samples, std::size_t bins) {
    if (bins == 0) throw ConfigError("heatmap needs at least one bin");
    Heatmap2D h;
    h.bins = bins;
    h.counts.assign(bins * bins, 0);
    h.samples = samples.size();
    auto bin_of = [bins](double v) {
        return std::min(static_cast<std::size_t>(v * static_cast<double>(bins)), bins - 1);
    };
    for (const auto& [s, c] : samples) {
        if (!(s >= 0.0 && s <= 1.0 && c >= 0.0 && c <= 1.0)) throw DomainError("heatmap samples must lie in [0, 1]");
        ++h.counts[bin_of(s) * bins + bin_of(c)];
    }
    h.pearson_r = pearson(samples);
    return h;
}

CategoryPRReport per_category_box_pr(std::span<const ScoredDetection> preds, std::span<const RotatedBox> gts,
                                     std::size_t num_categories, double iou_thresh) {
    if (!(iou_thresh > 0.0 && iou_thresh < 1.0)) throw ConfigError("IoU threshold must lie in (0, 1)");
    CategoryPRReport report;
    std::map<int, std::vector<std::size_t>> pred_by_cat;
    std::map<int, std::vector<std::size_t>> gt_by_cat;
    for (std::size_t i : score_order(preds)) {
        const auto c = preds[i].box.category();
        if (!c || *c < 0 || static_cast<std::size_t>(*c) >= num_categories) {
            ++report.unknown_predictions;
            continue;
        }
        pred_by_cat[*c].push_back(i);
    }
    for (std::size_t j = 0; j < gts.size(); ++j) {
        const int c = gts[j].category().value_or(0);
        if (c < 0 || static_cast<std::size_t>(c) >= num_categories) {
            throw ConsistencyError("ground-truth category " + std::to_string(c) + " exceeds category count");
        }
        gt_by_cat[c].push_back(j);
    }
    for (int c = 0; c < static_cast<int>(num_categories); ++c) {
        const auto& p = pred_by_cat[c];
        const auto& g = gt_by_cat[c];
        if (p.empty() && g.empty()) continue;
        const auto iou = iou_table(preds, gts, p, g);
        CategoryPR r;
        r.tp = greedy_matches(preds, gts, p, g, iou, iou_thresh);
        r.n_pred = p.size();
        r.n_gt = g.size();
        r.recall = ratio(r.tp, r.n_gt);
        r.precision = ratio(r.tp, r.n_pred);
        report.per_category[c] = r;
    }
    return report;
}

}  // namespace gsod
