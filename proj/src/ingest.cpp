// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gsod/error.hpp"

namespace gsod {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool parse_double(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

bool parse_int(std::string_view tok, int& out) {
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

double orient(Point2 a, Point2 b, Point2 c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool segments_cross(Point2 a, Point2 b, Point2 c, Point2 d) {
    const double d1 = orient(a, b, c);
    const double d2 = orient(a, b, d);
    const double d3 = orient(c, d, a);
    const double d4 = orient(c, d, b);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool self_intersecting(const std::array<Point2, 4>& q) {
    return segments_cross(q[0], q[1], q[2], q[3]) || segments_cross(q[1], q[2], q[3], q[0]);
}

// Andrew's monotone chain; collinear points are dropped.
std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point2& p : pts) {
        while (k >= 2 && orient(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        const Point2& p = pts[i];
        while (k >= lower && orient(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

DotaParseResult parse_dota_file(std::istream& in) {
    DotaParseResult result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens[0].starts_with("imagesource") || tokens[0].starts_with("gsd")) continue;

        if (tokens.size() != 10) {
            result.errors.push_back({lineno, "expected 10 fields, found " + std::to_string(tokens.size())});
            continue;
        }
        QuadAnnotation q;
        q.line = lineno;
        bool ok = true;
        for (std::size_t i = 0; i < 4 && ok; ++i) {
            ok = parse_double(tokens[2 * i], q.corners[i].x) && parse_double(tokens[2 * i + 1], q.corners[i].y);
        }
        if (!ok) {
            result.errors.push_back({lineno, "non-numeric or non-finite coordinate"});
            continue;
        }
        q.category = std::string(tokens[8]);
        if (!parse_int(tokens[9], q.difficulty) || (q.difficulty != 0 && q.difficulty != 1)) {
            result.errors.push_back({lineno, "difficulty must be 0 or 1, got '" + std::string(tokens[9]) + "'"});
            continue;
        }
        if (self_intersecting(q.corners)) {
            result.errors.push_back({lineno, "self-intersecting quadrilateral"});
            continue;
        }
        result.records.push_back(std::move(q));
    }
    return result;
}

CategoryTable CategoryTable::dota_v15() {
    CategoryTable t;
    for (const char* name : {"plane", "baseball-diamond", "bridge", "ground-track-field", "small-vehicle",
                             "large-vehicle", "ship", "tennis-court", "basketball-court", "storage-tank",
                             "soccer-ball-field", "roundabout", "harbor", "swimming-pool", "helicopter",
                             "container-crane"}) {
        t.intern(name);
    }
    return t;
}

int CategoryTable::intern(std::string_view name) {
    if (const int idx = find(name); idx >= 0) return idx;
    const int idx = static_cast<int>(names_.size());
    names_.emplace_back(name);
    index_.emplace(std::string(name), idx);
    return idx;
}

int CategoryTable::find(std::string_view name) const {
    const auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

const std::string& CategoryTable::name(int index) const {
    if (index < 0 || static_cast<std::size_t>(index) >= names_.size()) {
        throw ConsistencyError("category index " + std::to_string(index) + " out of range");
    }
    return names_[static_cast<std::size_t>(index)];
}

RotatedBox quad_to_rotated_box(const QuadAnnotation& q, CategoryTable& categories) {
    return quad_to_rotated_box(q, categories.intern(q.category));
}

RotatedBox quad_to_rotated_box(const QuadAnnotation& q, std::optional<int> category) {
    const auto hull = convex_hull({q.corners.begin(), q.corners.end()});
    if (hull.size() < 3) throw DegenerateAnnotationError("quadrilateral corners are collinear");

    double best_area = std::numeric_limits<double>::infinity();
    double best_w = 0.0, best_h = 0.0, best_theta = 0.0;
    Point2 best_center;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Point2 a = hull[i];
        const Point2 b = hull[(i + 1) % hull.size()];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const Point2 u{(b.x - a.x) / len, (b.y - a.y) / len};
        const Point2 v{-u.y, u.x};
        double umin = 0, umax = 0, vmin = 0, vmax = 0;
        for (const Point2& p : hull) {
            const double pu = (p.x - a.x) * u.x + (p.y - a.y) * u.y;
            const double pv = (p.x - a.x) * v.x + (p.y - a.y) * v.y;
            umin = std::min(umin, pu);
            umax = std::max(umax, pu);
            vmin = std::min(vmin, pv);
            vmax = std::max(vmax, pv);
        }
        const double area = (umax - umin) * (vmax - vmin);
        // Relative slack keeps the first of several equal-area edges.
        if (area < best_area * (1.0 - 1e-12)) {
            best_area = area;
            best_w = umax - umin;
            best_h = vmax - vmin;
            best_theta = std::atan2(u.y, u.x);
            const double cu = (umin + umax) / 2.0;
            const double cv = (vmin + vmax) / 2.0;
            best_center = {a.x + cu * u.x + cv * v.x, a.y + cu * u.y + cv * v.y};
        }
    }
    if (best_h < kMinBoxSide || best_w < kMinBoxSide) {
        throw DegenerateAnnotationError("quadrilateral has zero area");
    }
    if (best_w < best_h) {
        std::swap(best_w, best_h);
        best_theta += kPi / 2.0;
    }
    return RotatedBox(best_center.x, best_center.y, best_w, best_h, best_theta, category, q.difficulty);
}

std::vector<double> tile_origins(double extent, double size, double overlap) {
    if (!(size > 0.0) || !(overlap >= 0.0) || overlap >= size) {
        throw ConfigError("tiling requires 0 <= overlap < size");
    }
    if (!(extent >= 1.0)) throw ConfigError("image extent must be at least 1 pixel");
    const double stride = size - overlap;
    std::vector<double> origins{0.0};
    while (origins.back() + size < extent) {
        const double next = origins.back() + stride;
        origins.push_back(next + size > extent ? extent - size : next);
    }
    return origins;
}

std::vector<TileWindow> tile_windows(double image_w, double image_h, double size, double overlap,
                                     std::string_view source_image) {
    const auto xs = tile_origins(image_w, size, overlap);
    const auto ys = tile_origins(image_h, size, overlap);
    std::vector<TileWindow> out;
    out.reserve(xs.size() * ys.size());
    for (double y : ys) {
        for (double x : xs) out.push_back({x, y, size, std::string(source_image)});
    }
    return out;
}

std::vector<std::vector<RotatedBox>> assign_annotations_to_tiles(std::span<const RotatedBox> boxes,
                                                                 std::span<const TileWindow> windows) {
    std::vector<std::vector<RotatedBox>> out(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w) {
        for (const RotatedBox& b : boxes) {
            if (windows[w].contains(b.center())) out[w].push_back(b.translated(-windows[w].x0, -windows[w].y0));
        }
    }
    return out;
}

AspectRatioStats::AspectRatioStats(std::vector<double> ratios, std::vector<std::string> categories,
                                   std::size_t bins)
    : ratios_(std::move(ratios)), categories_(std::move(categories)) {
    if (ratios_.empty()) throw EmptyDatasetError("aspect-ratio statistics need at least one box");
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    if (categories_.size() != ratios_.size()) throw ShapeError("ratio/category length mismatch");

    bins_.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        bins_[i].low = static_cast<double>(i) / static_cast<double>(bins);
        bins_[i].high = static_cast<double>(i + 1) / static_cast<double>(bins);
    }
    for (std::size_t i = 0; i < ratios_.size(); ++i) {
        const double r = ratios_[i];
        if (!(r > 0.0 && r <= 1.0)) throw DomainError("aspect ratio outside (0, 1]");
        const auto b = std::min(static_cast<std::size_t>(r * static_cast<double>(bins)), bins - 1);
        ++bins_[b].count;
        auto& cat = per_category_[categories_[i]];
        ++cat.count;
        if (r < 0.5) ++cat.below_half;
    }
    sorted_ = ratios_;
    std::sort(sorted_.begin(), sorted_.end());
}

double AspectRatioStats::fraction_below(double threshold) const {
    const auto n = std::lower_bound(sorted_.begin(), sorted_.end(), threshold) - sorted_.begin();
    return static_cast<double>(n) / static_cast<double>(sorted_.size());
}

AspectRatioStats AspectRatioStats::merged(const AspectRatioStats& other) const {
    if (other.bins_.size() != bins_.size()) throw ConsistencyError("cannot merge histograms with different bins");
    auto ratios = ratios_;
    auto cats = categories_;
    ratios.insert(ratios.end(), other.ratios_.begin(), other.ratios_.end());
    cats.insert(cats.end(), other.categories_.begin(), other.categories_.end());
    return AspectRatioStats(std::move(ratios), std::move(cats), bins_.size());
}

AspectRatioStats aspect_ratio_stats(std::span<const RotatedBox> boxes, const StatsOptions& opts,
                                    const CategoryTable* categories) {
    std::vector<double> ratios;
    std::vector<std::string> names;
    for (const RotatedBox& b : boxes) {
        if (!opts.include_difficult && b.difficulty() != 0) continue;
        ratios.push_back(b.min_side() / b.max_side());
        const auto cat = b.category();
        if (!cat) {
            names.emplace_back("unknown");
        } else if (categories && *cat >= 0 && static_cast<std::size_t>(*cat) < categories->size()) {
            names.push_back(categories->name(*cat));
        } else {
            names.push_back("class_" + std::to_string(*cat));
        }
    }
    if (ratios.empty()) throw EmptyDatasetError("no boxes to summarize");
    return AspectRatioStats(std::move(ratios), std::move(names), opts.bins);
}

}  // namespace gsod
