// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file pseudo_label.hpp
 * @brief Pixel-level pseudo-label selection on dense teacher predictions.
 *
 * Scale-aware selection treats the levels differently. Low levels (P3, P4)
 * pool their cells, rank them by joint confidence (max class score times
 * centerness), keep the top-k and then drop candidates whose score is below
 * the threshold; those entries are weighted by score * centerness. High
 * levels (P5..P7) keep every cell whose score clears the threshold and are
 * weighted by the score alone.
 */

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gsod/geometry.hpp"

namespace gsod {

/// Teacher (or student) output over one feature grid.
class DensePrediction {
public:
    /// `scores` holds height*width*num_classes values, cell-major.
    /// `boxes` is either empty or one decoded box per cell.
    /// Throws ShapeError on mismatched lengths and DomainError on values
    /// outside [0, 1].
    DensePrediction(int level, std::size_t height, std::size_t width, std::size_t num_classes,
                    std::vector<double> scores, std::vector<double> centerness,
                    std::vector<RotatedBox> boxes = {});

    int level() const noexcept { return level_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t cells() const noexcept { return height_ * width_; }
    std::size_t num_classes() const noexcept { return num_classes_; }

    std::span<const double> scores(std::size_t cell) const {
        return {scores_.data() + cell * num_classes_, num_classes_};
    }
    double centerness(std::size_t cell) const { return centerness_[cell]; }
    bool has_boxes() const noexcept { return !boxes_.empty(); }
    const RotatedBox& box(std::size_t cell) const { return boxes_.at(cell); }

    const std::vector<double>& raw_scores() const noexcept { return scores_; }
    const std::vector<double>& raw_centerness() const noexcept { return centerness_; }
    const std::vector<RotatedBox>& boxes() const noexcept { return boxes_; }

private:
    int level_;
    std::size_t height_, width_, num_classes_;
    std::vector<double> scores_;
    std::vector<double> centerness_;
    std::vector<RotatedBox> boxes_;
};

struct CellConfidence {
    double joint = 0.0;  // max score * centerness
    double score = 0.0;  // max class score
    int cls = 0;         // argmax class (lowest index on ties)
};

std::vector<CellConfidence> joint_confidence(const DensePrediction& pred);

enum class TopkScope { Joint, PerLevel };

struct SlaConfig {
    std::size_t topk = 2000;
    double score_thresh = 0.02;
    std::vector<int> low_levels{3, 4};
    std::vector<int> high_levels{5, 6, 7};
    TopkScope topk_scope = TopkScope::Joint;

    /// Throws ConfigError unless topk >= 1 and 0 < score_thresh < 1.
    void validate() const;
};

struct PseudoLabel {
    int level = 0;
    std::size_t cell = 0;
    int cls = 0;
    double score = 0.0;       // raw teacher max class score
    double centerness = 0.0;  // teacher centerness
    double weight = 0.0;      // localization weight
    std::optional<RotatedBox> box;
};

struct PseudoLabelSet {
    std::vector<PseudoLabel> entries;
    std::size_t n_all = 0;

    std::size_t n_pos() const noexcept { return entries.size(); }
};

/// Scale-aware selection. Entries come out low levels first (in rank
/// order), then high levels by (level, cell). Throws ConfigError if a
/// configured level is missing from `preds`.
PseudoLabelSet sla_select(std::span<const DensePrediction> preds, const SlaConfig& cfg = {});

/// Global top ceil(ratio * N_all) cells by max class score, ties broken by
/// lower (level, cell); weight = score.
PseudoLabelSet score_ratio_select(std::span<const DensePrediction> preds, double ratio);

struct PseudoBox {
    RotatedBox box;
    double score;
    int cls;
    int level;
    std::size_t cell;
};

/// Decoded boxes of every cell with max score >= score_thresh, followed by
/// class-agnostic rotated NMS.
std::vector<PseudoBox> pseudo_boxes(std::span<const DensePrediction> preds, double score_thresh, double nms_iou);

}  // namespace gsod
