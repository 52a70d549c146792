// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/soft_label.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsod/error.hpp"

namespace gsod {

namespace {
constexpr double kBoundarySlack = 1e-12;
}

void CcslParams::validate() const {
    if (!(beta_smooth >= 0.0) || !std::isfinite(beta_smooth)) throw ConfigError("beta must be finite and >= 0");
    if (!(image_w >= 1.0) || !(image_h >= 1.0)) throw ConfigError("image area must be non-zero");
}

double scale_factor(const RotatedBox& box, const CcslParams& params) {
    params.validate();
    if (params.beta_smooth == 0.0) return 1.0;
    const double x = std::min(1.0, box.area() / (params.image_w * params.image_h));
    const double exponent =
        params.convention == ExponentConvention::Root ? 1.0 / params.beta_smooth : params.beta_smooth;
    return std::pow(x, exponent);
}

double ccsl_value(const Gaussian2D& g, Point2 p, double gamma) {
    if (!(gamma > 0.0)) throw DomainError("soft-label exponent must be positive");
    const double base = 1.0 - mahalanobis_sq(g, p);
    if (base < -kBoundarySlack) throw DomainError("point lies outside the box ellipse");
    return std::pow(std::clamp(base, 0.0, 1.0), gamma);
}

std::vector<double> SoftTargetMap::dense(std::size_t num_classes) const {
    std::vector<double> out(grid.cells() * num_classes, 0.0);
    for (const SoftTarget& t : positives) {
        if (t.cls < 0 || static_cast<std::size_t>(t.cls) >= num_classes) {
            throw ConsistencyError("soft target class " + std::to_string(t.cls) + " exceeds class count");
        }
        out[t.cell * num_classes + static_cast<std::size_t>(t.cls)] = t.y;
    }
    return out;
}

SoftTargetMap build_soft_targets(const AssignmentResult& assignment, std::span<const RotatedBox> boxes,
                                 const CcslParams& params) {
    params.validate();
    if (assignment.cells.size() != assignment.grid.cells()) throw ConsistencyError("assignment size mismatch");
    SoftTargetMap out{assignment.grid, {}};
    for (std::size_t cell = 0; cell < assignment.cells.size(); ++cell) {
        const CellTarget& t = assignment.cells[cell];
        if (!t.positive()) continue;
        if (!t.box_id || *t.box_id >= boxes.size()) {
            throw ConsistencyError("positive cell " + std::to_string(cell) + " references an unknown box");
        }
        const RotatedBox& box = boxes[*t.box_id];
        if (box.category().value_or(0) != t.label) {
            throw ConsistencyError("cell " + std::to_string(cell) + " label disagrees with its box");
        }
        const double gamma = scale_factor(box, params);
        const double base = std::clamp(1.0 - mahalanobis_sq(box_to_gaussian(box), assignment.grid.point(cell)), 0.0, 1.0);
        out.positives.push_back({cell, t.label, std::pow(base, gamma)});
    }
    return out;
}

}  // namespace gsod
