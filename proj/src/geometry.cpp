// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gsod/error.hpp"

namespace gsod {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kMinIntersection = 1e-12;
constexpr double kMembershipSlack = 1e-9;

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

Point2 sub(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

// Clips `subject` against the half-plane left of the directed edge e0->e1.
std::vector<Point2> clip_half_plane(const std::vector<Point2>& subject, Point2 e0, Point2 e1) {
    std::vector<Point2> out;
    if (subject.empty()) return out;
    out.reserve(subject.size() + 2);
    const Point2 edge = sub(e1, e0);
    auto side = [&](Point2 p) { return cross(edge, sub(p, e0)); };

    Point2 prev = subject.back();
    double prev_side = side(prev);
    for (const Point2& cur : subject) {
        const double cur_side = side(cur);
        const bool cur_in = cur_side >= 0.0;
        const bool prev_in = prev_side >= 0.0;
        if (cur_in != prev_in) {
            const double t = prev_side / (prev_side - cur_side);
            out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
        }
        if (cur_in) out.push_back(cur);
        prev = cur;
        prev_side = cur_side;
    }
    return out;
}

}  // namespace

double canonical_angle(double theta) {
    if (!std::isfinite(theta)) return theta;
    double t = std::fmod(theta + kPi / 2.0, kPi);
    if (t < 0.0) t += kPi;
    t -= kPi / 2.0;
    // fmod can land exactly on the excluded upper end after the shift.
    if (t >= kPi / 2.0) t -= kPi;
    return t;
}

RotatedBox::RotatedBox(double cx, double cy, double w, double h, double theta,
                       std::optional<int> category, int difficulty)
    : cx_(cx), cy_(cy), w_(w), h_(h), theta_(canonical_angle(theta)),
      category_(category), difficulty_(difficulty) {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h) ||
        !std::isfinite(theta)) {
        throw InvalidBoxError("rotated box has non-finite fields");
    }
    if (w < kMinBoxSide || h < kMinBoxSide) {
        throw InvalidBoxError("rotated box side below minimum (w=" + std::to_string(w) +
                              ", h=" + std::to_string(h) + ")");
    }
}

std::array<Point2, 4> RotatedBox::corners() const {
    const double c = std::cos(theta_);
    const double s = std::sin(theta_);
    const double hw = w_ / 2.0;
    const double hh = h_ / 2.0;
    auto at = [&](double u, double v) -> Point2 {
        return {cx_ + u * c - v * s, cy_ + u * s + v * c};
    };
    return {at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)};
}

RotatedBox RotatedBox::with_category(std::optional<int> category) const {
    return RotatedBox(cx_, cy_, w_, h_, theta_, category, difficulty_);
}

RotatedBox RotatedBox::translated(double dx, double dy) const {
    return RotatedBox(cx_ + dx, cy_ + dy, w_, h_, theta_, category_, difficulty_);
}

RotatedBox RotatedBox::scaled(double s) const {
    return RotatedBox(cx_ * s, cy_ * s, w_ * s, h_ * s, theta_, category_, difficulty_);
}

RotatedBox swap_wh_rotate90(const RotatedBox& box) {
    return RotatedBox(box.cx(), box.cy(), box.h(), box.w(), box.theta() + kPi / 2.0,
                      box.category(), box.difficulty());
}

Gaussian2D box_to_gaussian(const RotatedBox& box) {
    const double c = std::cos(box.theta());
    const double s = std::sin(box.theta());
    const double a = box.w() * box.w() / 4.0;
    const double b = box.h() * box.h() / 4.0;
    Gaussian2D g;
    g.mu = box.center();
    g.sigma.xx = c * c * a + s * s * b;
    g.sigma.xy = c * s * (a - b);
    g.sigma.yy = s * s * a + c * c * b;
    return g;
}

double mahalanobis_sq(const Gaussian2D& g, Point2 p) {
    const Sym2& m = g.sigma;
    const double half_trace = (m.xx + m.yy) / 2.0;
    const double spread = std::hypot((m.xx - m.yy) / 2.0, m.xy);
    const double lo = half_trace - spread;
    const double hi = half_trace + spread;
    if (!(lo > 0.0) || hi / lo > kMaxCondition) {
        throw DegenerateGaussianError("covariance is singular or ill-conditioned");
    }
    const double dx = p.x - g.mu.x;
    const double dy = p.y - g.mu.y;
    // Divide last so axis-aligned boundary points evaluate to exactly 1.
    const double num = m.yy * dx * dx - 2.0 * m.xy * dx * dy + m.xx * dy * dy;
    return std::max(0.0, num / m.det());
}

double gaussian_centerness(const Gaussian2D& g, Point2 p) { return 1.0 - mahalanobis_sq(g, p); }

bool point_in_rotated_box(const RotatedBox& box, Point2 p) {
    const double c = std::cos(box.theta());
    const double s = std::sin(box.theta());
    const double dx = p.x - box.cx();
    const double dy = p.y - box.cy();
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    const double hw = box.w() / 2.0;
    const double hh = box.h() / 2.0;
    return std::abs(u) <= hw * (1.0 + kMembershipSlack) && std::abs(v) <= hh * (1.0 + kMembershipSlack);
}

double polygon_signed_area(std::span<const Point2> poly) {
    if (poly.size() < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        acc += p.x * q.y - q.x * p.y;
    }
    return acc / 2.0;
}

double rotated_intersection_area(const RotatedBox& a, const RotatedBox& b) {
    const auto ca = a.corners();
    auto cb = b.corners();
    if (polygon_signed_area(cb) < 0.0) std::reverse(cb.begin(), cb.end());

    std::vector<Point2> poly(ca.begin(), ca.end());
    for (std::size_t i = 0; i < cb.size() && !poly.empty(); ++i) {
        poly = clip_half_plane(poly, cb[i], cb[(i + 1) % cb.size()]);
    }
    const double area = std::abs(polygon_signed_area(poly));
    return area < kMinIntersection ? 0.0 : area;
}

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
    const double inter = rotated_intersection_area(a, b);
    if (inter == 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> rotated_nms(std::span<const ScoredBox> boxes, double iou_thresh) {
    if (!(iou_thresh > 0.0 && iou_thresh < 1.0)) {
        throw ConfigError("nms iou threshold must lie in (0, 1)");
    }
    for (const auto& b : boxes) {
        if (!std::isfinite(b.score)) throw DomainError("nms received a non-finite score");
    }
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return boxes[i].score > boxes[j].score;
    });

    std::vector<bool> suppressed(boxes.size(), false);
    std::vector<std::size_t> keep;
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::size_t i = order[oi];
        if (suppressed[i]) continue;
        keep.push_back(i);
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const std::size_t j = order[oj];
            if (suppressed[j]) continue;
            if (rotated_iou(boxes[i].box, boxes[j].box) > iou_thresh) suppressed[j] = true;
        }
    }
    return keep;
}

}  // namespace gsod
