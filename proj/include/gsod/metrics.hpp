// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file metrics.hpp
 * @brief Evaluation kernels: pixel-level recall/precision of pseudo-label
 *        selections, pseudo-box precision across IoU thresholds,
 *        score/centerness agreement heatmaps and per-category box PR.
 */

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "gsod/assignment.hpp"
#include "gsod/geometry.hpp"
#include "gsod/pseudo_label.hpp"

namespace gsod {

struct PixelPRResult {
    double recall = 0.0;     // tp / (tp + fn), 0 when there are no GT points
    double precision = 0.0;  // tp / (tp + fp), 0 when nothing was selected
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    PixelPRResult& operator+=(const PixelPRResult& other);  // merges counts, recomputes ratios
};

struct PixelPROptions {
    /// Count a selection as TP only when its class matches the GT label.
    bool class_aware = false;
};

/// GT points are the positive cells of `gt`. Throws ConsistencyError when a
/// selected entry references a level or cell absent from `gt`.
PixelPRResult pixel_pr(const PseudoLabelSet& selected, std::span<const AssignmentResult> gt,
                       const PixelPROptions& opts = {});

struct ScoredDetection {
    RotatedBox box;  // category() is the predicted class
    double score = 0.0;
};

struct ThresholdPR {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Predictions with score >= score_floor are visited by descending score and
/// matched to the unmatched GT with the highest IoU, provided it is >= t.
/// Class-agnostic. Thresholds must be ascending in (0, 1).
std::vector<ThresholdPR> precision_at_iou(std::span<const ScoredDetection> preds, std::span<const RotatedBox> gts,
                                          std::span<const double> thresholds, double score_floor = 0.0);

struct Heatmap2D {
    std::size_t bins = 0;
    std::vector<std::size_t> counts;  // bins x bins, row = score bin, col = centerness bin
    std::size_t samples = 0;
    double pearson_r = 0.0;

    std::size_t at(std::size_t score_bin, std::size_t centerness_bin) const {
        return counts[score_bin * bins + centerness_bin];
    }
    std::vector<std::size_t> score_marginal() const;
    std::vector<std::size_t> centerness_marginal() const;
};

/// 2D histogram over [0, 1]^2 plus the Pearson correlation of the raw pairs.
/// Throws DomainError with fewer than 2 samples, zero variance, or values
/// outside [0, 1].
Heatmap2D score_centerness_heatmap(std::span<const std::pair<double, double>> samples, std::size_t bins = 10);

/// Pearson correlation coefficient.
double pearson(std::span<const std::pair<double, double>> samples);

struct CategoryPR {
    double recall = 0.0;
    double precision = 0.0;
    std::size_t tp = 0;
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
};

struct CategoryPRReport {
    std::map<int, CategoryPR> per_category;
    std::size_t unknown_predictions = 0;  // class missing or >= num_categories; excluded
};

/// Greedy matching as in precision_at_iou, restricted to same-class pairs.
CategoryPRReport per_category_box_pr(std::span<const ScoredDetection> preds, std::span<const RotatedBox> gts,
                                     std::size_t num_categories, double iou_thresh = 0.5);

}  // namespace gsod
