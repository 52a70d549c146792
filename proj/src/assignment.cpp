// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gsod/error.hpp"

namespace gsod {

FeatureGrid FeatureGrid::make(int level, double image_w, double image_h) {
    if (level < kMinLevel || level > kMaxLevel) {
        throw ConfigError("feature level " + std::to_string(level) + " outside 3..7");
    }
    if (!(image_w >= 1.0) || !(image_h >= 1.0)) throw ConfigError("image size must be at least 1x1");
    FeatureGrid g;
    g.level = level;
    g.stride = std::ldexp(1.0, level);
    g.width = static_cast<std::size_t>(std::ceil(image_w / g.stride));
    g.height = static_cast<std::size_t>(std::ceil(image_h / g.stride));
    g.image_w = image_w;
    g.image_h = image_h;
    return g;
}

Point2 FeatureGrid::point(std::size_t row, std::size_t col) const noexcept {
    return {stride / 2.0 + static_cast<double>(col) * stride, stride / 2.0 + static_cast<double>(row) * stride};
}

std::vector<FeatureGrid> make_pyramid(double image_w, double image_h) {
    std::vector<FeatureGrid> out;
    for (int l = kMinLevel; l <= kMaxLevel; ++l) out.push_back(FeatureGrid::make(l, image_w, image_h));
    return out;
}

std::vector<Point2> grid_points(const FeatureGrid& grid) {
    std::vector<Point2> pts;
    pts.reserve(grid.cells());
    for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) pts.push_back(grid.point(r, c));
    }
    return pts;
}

ScaleRange level_scale_range(int level) {
    if (level < kMinLevel || level > kMaxLevel) throw ConfigError("feature level outside 3..7");
    const double lo = level == kMinLevel ? 0.0 : std::ldexp(1.0, level + 2);
    const double hi = level == kMaxLevel ? std::numeric_limits<double>::infinity() : std::ldexp(1.0, level + 3);
    return {lo, hi};
}

int level_for_box(const RotatedBox& box) {
    const double s = box.max_side();
    for (int l = kMinLevel; l < kMaxLevel; ++l) {
        if (s <= level_scale_range(l).hi) return l;
    }
    return kMaxLevel;
}

std::vector<std::vector<std::size_t>> assign_boxes_to_levels(std::span<const RotatedBox> boxes,
                                                             std::span<const FeatureGrid> grids) {
    std::vector<std::vector<std::size_t>> out(grids.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const int level = level_for_box(boxes[i]);
        for (std::size_t g = 0; g < grids.size(); ++g) {
            if (grids[g].level == level) out[g].push_back(i);
        }
    }
    return out;
}

std::size_t AssignmentResult::positive_count() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellTarget& c) {
        return c.positive();
    }));
}

namespace {

struct Candidate {
    double area = std::numeric_limits<double>::infinity();
    double raw_centerness = -std::numeric_limits<double>::infinity();
};

AssignmentResult run_sampler(Sampler sampler, std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                             const AssignOptions& opts, std::span<const std::size_t> box_ids) {
    if (!box_ids.empty() && box_ids.size() != boxes.size()) {
        throw ShapeError("box_ids must be empty or match the box count");
    }
    AssignmentResult result{grid, std::vector<CellTarget>(grid.cells())};
    if (grid.cells() == 0) return result;
    std::vector<Candidate> best(grid.cells());
    const double stride = grid.stride;
    const ScaleRange range = level_scale_range(grid.level);

    for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
        const RotatedBox& box = boxes[bi];
        const Gaussian2D g = box_to_gaussian(box);
        const double c = std::cos(box.theta());
        const double s = std::sin(box.theta());

        // Cells whose centers can touch the box, with one cell of margin.
        double xmin = box.cx(), xmax = box.cx(), ymin = box.cy(), ymax = box.cy();
        for (const Point2& p : box.corners()) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        auto cell_lo = [&](double v, std::size_t n) -> std::size_t {
            const double k = std::floor((v - stride / 2.0) / stride) - 1.0;
            return k <= 0.0 ? 0 : std::min(static_cast<std::size_t>(k), n);
        };
        auto cell_hi = [&](double v, std::size_t n) -> std::size_t {
            const double k = std::ceil((v - stride / 2.0) / stride) + 2.0;
            return k <= 0.0 ? 0 : std::min(static_cast<std::size_t>(k), n);
        };
        const std::size_t c0 = cell_lo(xmin, grid.width), c1 = cell_hi(xmax, grid.width);
        const std::size_t r0 = cell_lo(ymin, grid.height), r1 = cell_hi(ymax, grid.height);

        for (std::size_t row = r0; row < r1; ++row) {
            for (std::size_t col = c0; col < c1; ++col) {
                const Point2 p = grid.point(row, col);
                const double m = mahalanobis_sq(g, p);
                bool member = false;
                switch (sampler) {
                    case Sampler::Gaussian:
                        member = m <= 1.0;
                        break;
                    case Sampler::Center: {
                        const double r = opts.center_radius * stride;
                        member = std::abs(p.x - box.cx()) <= r && std::abs(p.y - box.cy()) <= r &&
                                 point_in_rotated_box(box, p);
                        break;
                    }
                    case Sampler::All:
                        member = point_in_rotated_box(box, p);
                        break;
                }
                if (!member) continue;
                if (opts.limit_regress_range) {
                    const double dx = p.x - box.cx();
                    const double dy = p.y - box.cy();
                    const double u = c * dx + s * dy;
                    const double v = -s * dx + c * dy;
                    const double reach = std::max({box.w() / 2.0 + std::abs(u), box.h() / 2.0 + std::abs(v)});
                    if (!(reach > range.lo && reach <= range.hi)) continue;
                }

                const std::size_t cell = grid.index(row, col);
                const double raw = 1.0 - m;
                Candidate& cur = best[cell];
                const bool better = box.area() < cur.area || (box.area() == cur.area && raw > cur.raw_centerness);
                if (!better) continue;
                cur = {box.area(), raw};

                CellTarget& t = result.cells[cell];
                t.label = box.category().value_or(0);
                t.centerness = std::clamp(raw, 0.0, 1.0);
                t.regression = {(box.cx() - p.x) / stride, (box.cy() - p.y) / stride, std::log(box.w() / stride),
                                std::log(box.h() / stride), box.theta()};
                t.box_id = box_ids.empty() ? bi : box_ids[bi];
            }
        }
    }
    return result;
}

}  // namespace

AssignmentResult gca_assign(std::span<const RotatedBox> boxes, const FeatureGrid& grid, const AssignOptions& opts,
                            std::span<const std::size_t> box_ids) {
    return run_sampler(Sampler::Gaussian, boxes, grid, opts, box_ids);
}

AssignmentResult center_sampling_assign(std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                                        const AssignOptions& opts, std::span<const std::size_t> box_ids) {
    return run_sampler(Sampler::Center, boxes, grid, opts, box_ids);
}

AssignmentResult all_sampling_assign(std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                                     const AssignOptions& opts, std::span<const std::size_t> box_ids) {
    return run_sampler(Sampler::All, boxes, grid, opts, box_ids);
}

AssignmentResult assign(Sampler sampler, std::span<const RotatedBox> boxes, const FeatureGrid& grid,
                        const AssignOptions& opts, std::span<const std::size_t> box_ids) {
    return run_sampler(sampler, boxes, grid, opts, box_ids);
}

std::vector<AssignmentResult> assign_image(Sampler sampler, std::span<const RotatedBox> boxes,
                                           std::span<const FeatureGrid> grids, const AssignOptions& opts) {
    const auto routed = assign_boxes_to_levels(boxes, grids);
    std::vector<AssignmentResult> out;
    out.reserve(grids.size());
    for (std::size_t g = 0; g < grids.size(); ++g) {
        std::vector<RotatedBox> level_boxes;
        level_boxes.reserve(routed[g].size());
        for (std::size_t i : routed[g]) level_boxes.push_back(boxes[i]);
        out.push_back(run_sampler(sampler, level_boxes, grids[g], opts, routed[g]));
    }
    return out;
}

}  // namespace gsod
