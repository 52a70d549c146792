// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file assignment.hpp
 * @brief Supervised label assignment over FPN feature grids.
 *
 * Three samplers share one target definition so they differ only in which
 * cells become positive:
 *  - Gaussian center assignment: the cell center lies inside the box's
 *    inscribed ellipse, i.e. mahalanobis_sq <= 1 under the box Gaussian;
 *  - center sampling: within radius_factor * stride of the box center
 *    (axis-aligned square) and inside the rotated box;
 *  - all sampling: anywhere inside the rotated box.
 *
 * Overlapping candidates go to the box with the smaller area, then the larger
 * centerness, then the lower box index.
 */

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gsod/geometry.hpp"

namespace gsod {

inline constexpr int kMinLevel = 3;
inline constexpr int kMaxLevel = 7;
inline constexpr int kBackground = -1;

struct FeatureGrid {
    int level = kMinLevel;
    double stride = 8.0;
    std::size_t width = 0;
    std::size_t height = 0;
    double image_w = 0.0;
    double image_h = 0.0;

    /// stride = 2^level; width/height = ceil(image / stride).
    /// Throws ConfigError for levels outside 3..7 or empty images.
    static FeatureGrid make(int level, double image_w, double image_h);

    std::size_t cells() const noexcept { return width * height; }
    std::size_t index(std::size_t row, std::size_t col) const noexcept { return row * width + col; }
    /// Image-space location of cell (row, col): (stride/2 + col*stride, stride/2 + row*stride).
    Point2 point(std::size_t row, std::size_t col) const noexcept;
    Point2 point(std::size_t cell) const noexcept { return point(cell / width, cell % width); }

    friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;
};

/// Grids for levels 3..7 of one image.
std::vector<FeatureGrid> make_pyramid(double image_w, double image_h);

/// Row-major cell centers.
std::vector<Point2> grid_points(const FeatureGrid& grid);

/// FCOS regress range (lo, hi] of max(w, h) routed to a level.
struct ScaleRange {
    double lo;
    double hi;
};
ScaleRange level_scale_range(int level);

/// Level whose range (0,64], (64,128], (128,256], (256,512], (512,inf) holds max(w, h).
int level_for_box(const RotatedBox& box);

/// Per-grid lists of indices into `boxes`.
std::vector<std::vector<std::size_t>> assign_boxes_to_levels(std::span<const RotatedBox> boxes,
                                                             std::span<const FeatureGrid> grids);

struct CellTarget {
    int label = kBackground;
    double centerness = 0.0;
    /// (dcx/stride, dcy/stride, log(w/stride), log(h/stride), theta) toward the assigned box.
    std::array<double, 5> regression{};
    std::optional<std::size_t> box_id;

    bool positive() const noexcept { return label != kBackground; }
    friend bool operator==(const CellTarget&, const CellTarget&) = default;
};

struct AssignmentResult {
    FeatureGrid grid;
    std::vector<CellTarget> cells;  // row-major, grid.cells() entries

    std::size_t positive_count() const;
    friend bool operator==(const AssignmentResult&, const AssignmentResult&) = default;
};

enum class Sampler { Gaussian, Center, All };

struct AssignOptions {
    double center_radius = 1.5;
    /// Drop positives whose largest box-frame edge distance falls outside
    /// the level's regress range.
    bool limit_regress_range = false;
};

/// Assigns the given boxes (already routed to `grid`) to its cells.
/// `box_ids`, when non-empty, relabels box i as box_ids[i] in the output.
AssignmentResult gca_assign(std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                            const AssignOptions& opts = {}, std::span<const std::size_t> box_ids = {});
AssignmentResult center_sampling_assign(std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                                        const AssignOptions& opts = {},
                                        std::span<const std::size_t> box_ids = {});
AssignmentResult all_sampling_assign(std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                                     const AssignOptions& opts = {}, std::span<const std::size_t> box_ids = {});

AssignmentResult assign(Sampler sampler, std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                        const AssignOptions& opts = {}, std::span<const std::size_t> box_ids = {});

/// Routes boxes to levels and assigns every grid; box ids index `boxes`.
std::vector<AssignmentResult> assign_image(Sampler sampler, std::span<const RotatedBox> boxes,
                                           std::span<const FeatureGrid> grids, const AssignOptions& opts = {});

}  // namespace gsod
