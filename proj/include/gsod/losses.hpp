// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file losses.hpp
 * @brief Scalar losses with analytic gradients and the supervised /
 *        unsupervised aggregations of the teacher-student objective.
 *
 * Reductions use pairwise summation over the input order so that results
 * are reproducible; reordering cells changes the result by round-off only.
 */

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gsod {

inline constexpr double kProbEps = 1e-7;

struct LossGrad {
    double loss = 0.0;
    double grad = 0.0;  // d loss / d prediction
};

/// Quality focal loss: -|y - p|^focusing * [(1 - y) log(1 - p) + y log p].
/// p is clamped to [1e-7, 1 - 1e-7]. Throws DomainError for y outside [0, 1].
LossGrad qfl(double prob, double target, double focusing = 2.0);

/// Bernoulli cross-entropy measured against the target's own entropy, i.e.
/// KL(target || prob). Same gradient as plain BCE, zero iff prob == target.
LossGrad bce(double prob, double target);

/// 0.5 d^2 / delta for |d| < delta, |d| - 0.5 delta otherwise; d = pred - target.
LossGrad smooth_l1(double pred, double target, double delta = 1.0);

struct LossConfig {
    double alpha = 1.0;         // weight of the positive-sample terms
    double unsup_weight = 1.0;  // total = sup + unsup_weight * unsup
    double qfl_focusing = 2.0;
    double smooth_l1_delta = 1.0;

    void validate() const;
};

struct PositiveSample {
    double centerness_pred = 0.0;
    double centerness_target = 0.0;
    std::array<double, 5> regression_pred{};
    std::array<double, 5> regression_target{};
    double weight = 1.0;  // localization weight; ignored by the supervised loss
};

/// One image's worth of predictions and targets.
struct LossBatch {
    std::size_t num_classes = 1;
    std::vector<double> cls_prob;    // N_all x num_classes
    std::vector<double> cls_target;  // N_all x num_classes
    std::vector<PositiveSample> positives;

    std::size_t n_all() const noexcept { return num_classes == 0 ? 0 : cls_prob.size() / num_classes; }
    std::size_t n_pos() const noexcept { return positives.size(); }
    void validate() const;
};

struct LossBreakdown {
    double cls = 0.0;
    double cen = 0.0;
    double reg = 0.0;
    double total = 0.0;  // cls + cen + reg
};

/// (1/N_all) sum_all qfl + (alpha/N_pos) sum_pos w_j (bce_j + smooth_l1_j).
/// The positive term is 0 when N_pos = 0. Throws ShapeError when N_all = 0.
LossBreakdown unsupervised_loss(const LossBatch& batch, const LossConfig& cfg = {});

/// qfl over all cells, bce and smooth_l1 over positives, each normalized by
/// max(N_pos, 1).
LossBreakdown supervised_loss(const LossBatch& batch, const LossConfig& cfg = {});

struct TotalLoss {
    LossBreakdown sup;
    LossBreakdown unsup;
    double total = 0.0;
};

/// sup + unsup_weight * unsup.
TotalLoss total_loss(const LossBatch& labeled, const LossBatch& unlabeled, const LossConfig& cfg = {});

/// Pairwise (cascade) summation, in input order.
double pairwise_sum(std::span<const double> values);

}  // namespace gsod
