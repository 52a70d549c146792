// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file ingest.hpp
 * @brief DOTA annotation parsing, quadrilateral to rotated-box conversion,
 *        image tiling and aspect-ratio statistics.
 */

#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsod/geometry.hpp"

namespace gsod {

struct QuadAnnotation {
    std::array<Point2, 4> corners;
    std::string category;
    int difficulty = 0;  // 0 or 1
    std::size_t line = 0;  // source line, 1-based; 0 when built by hand
};

struct ParseIssue {
    std::size_t line = 0;  // 1-based
    std::string message;
};

/// Parser output: every valid record plus one issue per rejected line.
struct DotaParseResult {
    std::vector<QuadAnnotation> records;
    std::vector<ParseIssue> errors;

    bool ok() const noexcept { return errors.empty(); }
};

/// Reads "x1 y1 x2 y2 x3 y3 x4 y4 category difficulty" records. Lines starting
/// with "imagesource" or "gsd" and blank lines are skipped. Never throws on
/// malformed content.
DotaParseResult parse_dota_file(std::istream& in);

/// Interns category names to dense indices.
class CategoryTable {
public:
    CategoryTable() = default;

    /// Pre-populated with the 16 DOTA-v1.5 classes, in their usual order.
    static CategoryTable dota_v15();

    int intern(std::string_view name);
    /// -1 if unknown.
    int find(std::string_view name) const;
    const std::string& name(int index) const;
    std::size_t size() const noexcept { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::map<std::string, int, std::less<>> index_;
};

/// Minimum-area enclosing rectangle of the quad's corners (rotating
/// calipers over the convex hull). The long side becomes `w` and theta is
/// canonicalized; category/difficulty carry over. Throws
/// DegenerateAnnotationError for collinear corners.
RotatedBox quad_to_rotated_box(const QuadAnnotation& q, CategoryTable& categories);

/// Same, with an explicit class index.
RotatedBox quad_to_rotated_box(const QuadAnnotation& q, std::optional<int> category);

struct TileWindow {
    double x0 = 0.0;
    double y0 = 0.0;
    double size = 0.0;
    std::string source_image;

    /// Half-open containment [x0, x0 + size) x [y0, y0 + size).
    bool contains(Point2 p) const noexcept {
        return p.x >= x0 && p.x < x0 + size && p.y >= y0 && p.y < y0 + size;
    }
};

/// Window origins along one axis: multiples of (size - overlap), the last
/// one clamped so the window ends at the image edge.
std::vector<double> tile_origins(double extent, double size, double overlap);

/// Row-major grid of windows covering the image. Throws ConfigError when
/// overlap >= size or the image is empty.
std::vector<TileWindow> tile_windows(double image_w, double image_h, double size = 1024.0,
                                     double overlap = 200.0, std::string_view source_image = {});

/// A box belongs to every window that holds its center; coordinates are
/// translated into the window frame.
std::vector<std::vector<RotatedBox>> assign_annotations_to_tiles(std::span<const RotatedBox> boxes,
                                                                 std::span<const TileWindow> windows);

struct RatioBin {
    double low = 0.0;
    double high = 0.0;
    std::size_t count = 0;
};

/// Distribution of r = min(w, h) / max(w, h) over a box collection.
class AspectRatioStats {
public:
    AspectRatioStats(std::vector<double> ratios, std::vector<std::string> categories, std::size_t bins);

    std::size_t total() const noexcept { return ratios_.size(); }
    const std::vector<RatioBin>& bins() const noexcept { return bins_; }
    /// count(r < threshold) / total
    double fraction_below(double threshold) const;

    struct CategoryCount {
        std::size_t count = 0;
        std::size_t below_half = 0;
    };
    const std::map<std::string, CategoryCount>& per_category() const noexcept { return per_category_; }

    /// Merge statistics gathered independently (e.g. per file).
    AspectRatioStats merged(const AspectRatioStats& other) const;

private:
    std::vector<double> ratios_;  // input order, aligned with categories_
    std::vector<std::string> categories_;
    std::vector<double> sorted_;
    std::vector<RatioBin> bins_;
    std::map<std::string, CategoryCount> per_category_;
};

struct StatsOptions {
    std::size_t bins = 20;
    bool include_difficult = true;
};

/// Throws EmptyDatasetError when no box survives filtering.
AspectRatioStats aspect_ratio_stats(std::span<const RotatedBox> boxes, const StatsOptions& opts = {},
                                    const CategoryTable* categories = nullptr);

}  // namespace gsod
