// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file geometry.hpp
 * @brief Rotated-box algebra: Gaussian conversion, Mahalanobis tests,
 *        Gaussian centerness, rotated IoU and rotated NMS.
 *
 * Angle convention ("le90"): theta is measured counter-clockwise from the
 * x-axis to the w edge and canonicalized to [-pi/2, pi/2).
 */

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gsod {

inline constexpr double kPi = 3.14159265358979323846;

/// Boxes with a side below this (in pixels) are rejected at construction.
inline constexpr double kMinBoxSide = 1e-6;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Wraps an angle into [-pi/2, pi/2) by adding multiples of pi.
double canonical_angle(double theta);

/// Oriented rectangle (cx, cy, w, h, theta) with an optional class index.
/// Immutable once built; all constructors validate.
class RotatedBox {
public:
    /// Throws InvalidBoxError on non-finite fields or a side < kMinBoxSide.
    RotatedBox(double cx, double cy, double w, double h, double theta,
               std::optional<int> category = std::nullopt, int difficulty = 0);

    double cx() const noexcept { return cx_; }
    double cy() const noexcept { return cy_; }
    double w() const noexcept { return w_; }
    double h() const noexcept { return h_; }
    double theta() const noexcept { return theta_; }
    Point2 center() const noexcept { return {cx_, cy_}; }
    std::optional<int> category() const noexcept { return category_; }
    int difficulty() const noexcept { return difficulty_; }

    double area() const noexcept { return w_ * h_; }
    double max_side() const noexcept { return w_ > h_ ? w_ : h_; }
    double min_side() const noexcept { return w_ < h_ ? w_ : h_; }

    /// Corners in counter-clockwise order (in a y-up frame).
    std::array<Point2, 4> corners() const;

    RotatedBox with_category(std::optional<int> category) const;
    RotatedBox translated(double dx, double dy) const;
    RotatedBox scaled(double s) const;  // scales center and size about the origin

    friend bool operator==(const RotatedBox&, const RotatedBox&) = default;

private:
    double cx_, cy_, w_, h_, theta_;
    std::optional<int> category_;
    int difficulty_;
};

/// The equivalent representation (h, w, theta + pi/2), re-canonicalized.
RotatedBox swap_wh_rotate90(const RotatedBox& box);

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    double det() const noexcept { return xx * yy - xy * xy; }
};

struct Gaussian2D {
    Point2 mu;
    Sym2 sigma;
};

/// mu = center, sigma = R(theta) diag(w^2/4, h^2/4) R(theta)^T.
Gaussian2D box_to_gaussian(const RotatedBox& box);

/// (p - mu)^T sigma^-1 (p - mu) via the closed-form 2x2 inverse.
/// Throws DegenerateGaussianError when cond(sigma) > 1e12 or sigma is not PD.
double mahalanobis_sq(const Gaussian2D& g, Point2 p);

/// 1 - mahalanobis_sq. Unclamped; meaningful in [0, 1] for positive points.
double gaussian_centerness(const Gaussian2D& g, Point2 p);

/// Closed-region membership test; the half-extents carry a 1e-9 relative
/// slack so that corners and ellipse tangent points survive round-off.
bool point_in_rotated_box(const RotatedBox& box, Point2 p);

/// Signed shoelace area (positive for counter-clockwise vertices).
double polygon_signed_area(std::span<const Point2> poly);

/// Area of the intersection of two rotated boxes (convex polygon clipping).
double rotated_intersection_area(const RotatedBox& a, const RotatedBox& b);

/// Intersection over union in [0, 1]. Intersections below 1e-12 px^2 report 0.
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

struct ScoredBox {
    RotatedBox box;
    double score;
};

/// Greedy NMS. Candidates are visited by descending score (ties: lower
/// index first); a box is suppressed when its IoU with a kept box exceeds
/// `iou_thresh`. Returns kept input indices in visiting order.
std::vector<std::size_t> rotated_nms(std::span<const ScoredBox> boxes, double iou_thresh);

}  // namespace gsod
