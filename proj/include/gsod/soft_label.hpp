// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file soft_label.hpp
 * @brief Confidence-consistent soft classification targets.
 *
 * A positive cell's target at its class index is y = (1 - d)^gamma where d
 * is the squared Mahalanobis distance to the assigned box's Gaussian and
 * gamma depends on the box's share of the image area x = (w*h)/(W*H):
 *   root convention:  gamma = x^(1/beta)
 *   power convention: gamma = x^beta
 * beta = 0 is accepted and means gamma = 1 (plain Gaussian centerness).
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gsod/assignment.hpp"
#include "gsod/geometry.hpp"

namespace gsod {

enum class ExponentConvention { Root, Power };

struct CcslParams {
    double beta_smooth = 0.2;
    double image_w = 1024.0;
    double image_h = 1024.0;
    ExponentConvention convention = ExponentConvention::Root;

    void validate() const;
};

/// gamma for a box; the area share is clamped to (0, 1].
double scale_factor(const RotatedBox& box, const CcslParams& params);

/// (1 - mahalanobis_sq)^gamma with the base clamped to [0, 1]. Throws
/// DomainError when p lies outside the ellipse (negative base) or gamma <= 0.
double ccsl_value(const Gaussian2D& g, Point2 p, double gamma);

struct SoftTarget {
    std::size_t cell = 0;
    int cls = 0;
    double y = 0.0;
};

/// Sparse soft targets of one level: one entry per positive cell, every
/// other cell keeps an all-zero target vector.
struct SoftTargetMap {
    FeatureGrid grid;
    std::vector<SoftTarget> positives;

    /// Dense cell-major (cells x num_classes) target matrix.
    std::vector<double> dense(std::size_t num_classes) const;
};

/// Throws ConsistencyError when an assigned box id is out of range or its
/// class disagrees with the cell label. Cells outside the inscribed ellipse
/// (possible for the rectangle-based samplers) get y = 0.
SoftTargetMap build_soft_targets(const AssignmentResult& assignment, std::span<const RotatedBox> boxes,
                                 const CcslParams& params);

}  // namespace gsod
