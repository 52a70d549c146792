// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <string>
#include <thread>

#include "gsod/error.hpp"
#include "gsod/losses.hpp"
#include "gsod/text.hpp"

namespace gsod {

namespace {

constexpr int kPlacementAttempts = 1000;
constexpr std::uint64_t kSceneSalt = 0x5CE7E5A17ULL;
constexpr std::uint64_t kTeacherSalt = 0x7EAC4E25ULL;

// Portable transforms on top of mt19937_64, whose output sequence is fixed
// by the standard. The <random> distributions are implementation-defined.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    std::size_t below(std::size_t n) { return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1); }
    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean, double stddev) {
        if (stddev == 0.0) return mean;
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

private:
    std::mt19937_64 eng_;
};

void require(bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

RotatedBox sample_box(Stream& rng, const SceneConfig& cfg) {
    const double l = rng.log_uniform(cfg.long_side_min, cfg.long_side_max);
    const double s = std::max(kMinBoxSide, l * rng.log_uniform(cfg.aspect_min, cfg.aspect_max));
    const double theta = cfg.angle_min == cfg.angle_max ? cfg.angle_min : rng.uniform(cfg.angle_min, cfg.angle_max);
    const double ex = 0.5 * (std::abs(l * std::cos(theta)) + std::abs(s * std::sin(theta)));
    const double ey = 0.5 * (std::abs(l * std::sin(theta)) + std::abs(s * std::cos(theta)));
    const double span_x = std::max(0.0, cfg.image_size - 2.0 * ex);
    const double span_y = std::max(0.0, cfg.image_size - 2.0 * ey);
    const double cx = ex + rng.uniform() * span_x;
    const double cy = ey + rng.uniform() * span_y;
    const int cat = static_cast<int>(rng.below(static_cast<std::size_t>(cfg.categories)));
    return RotatedBox(cx, cy, l, s, theta, cat);
}

bool inside_image(const RotatedBox& b, double size) {
    for (const Point2& c : b.corners()) {
        if (c.x < 0.0 || c.y < 0.0 || c.x > size || c.y > size) return false;
    }
    return true;
}

}  // namespace

void NoiseModel::validate() const {
    for (double s : {center_sigma, size_sigma, angle_sigma, score_tp_std, score_fp_std, centerness_noise_std}) {
        require(s >= 0.0 && std::isfinite(s), "noise standard deviations must be finite and >= 0");
    }
    require(fp_rate >= 0.0 && fp_rate <= 0.1, "fp_rate must lie in [0, 0.1]");
    require(score_tp_mean >= 0.0 && score_tp_mean <= 1.0, "score_tp_mean must lie in [0, 1]");
    require(score_fp_mean >= 0.0 && score_fp_mean <= 1.0, "score_fp_mean must lie in [0, 1]");
    for (double a : attenuation) require(a >= 0.0 && a <= 1.0, "attenuation factors must lie in [0, 1]");
}

void SceneConfig::validate() const {
    require(image_size >= 1.0 && std::isfinite(image_size), "image_size must be >= 1");
    require(count_min <= count_max, "count range is empty");
    require(long_side_min > 0.0 && long_side_min <= long_side_max, "long-side range must be positive and non-empty");
    require(long_side_max < image_size, "long_side_max must be smaller than the image");
    require(aspect_min > 0.0 && aspect_min <= aspect_max && aspect_max <= 1.0,
            "aspect range must be non-empty inside (0, 1]");
    require(std::isfinite(angle_min) && std::isfinite(angle_max) && angle_min <= angle_max,
            "angle range is empty");
    require(categories >= 1, "categories must be >= 1");
    require(max_pair_iou >= 0.0 && max_pair_iou <= 1.0, "max_pair_iou must lie in [0, 1]");
}

void ParamVector::validate() const {
    for (double v : values) {
        if (!std::isfinite(v)) throw DomainError("parameter vector has non-finite entries");
    }
}

std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<RotatedBox> generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    Stream rng(mix_seed(cfg.seed ^ kSceneSalt));
    const std::size_t count = cfg.count_min + rng.below(cfg.count_max - cfg.count_min + 1);
    std::vector<RotatedBox> boxes;
    boxes.reserve(count);
    while (boxes.size() < count) {
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
            const RotatedBox b = sample_box(rng, cfg);
            if (!inside_image(b, cfg.image_size)) continue;
            placed = std::none_of(boxes.begin(), boxes.end(),
                                  [&](const RotatedBox& o) { return rotated_iou(b, o) > cfg.max_pair_iou; });
            if (placed) boxes.push_back(b);
        }
        if (!placed) {
            throw PlacementError("could not place object " + std::to_string(boxes.size() + 1) + " of " +
                                 std::to_string(count) + " within " + std::to_string(kPlacementAttempts) +
                                 " attempts");
        }
    }
    return boxes;
}

std::vector<DensePrediction> simulate_teacher(std::span<const RotatedBox> boxes,
                                              std::span<const FeatureGrid> grids, const NoiseModel& noise,
                                              int num_classes) {
    noise.validate();
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    for (const RotatedBox& b : boxes) {
        const int c = b.category().value_or(0);
        if (c < 0 || c >= num_classes) throw ConsistencyError("box category exceeds num_classes");
    }
    Stream rng(mix_seed(noise.seed ^ kTeacherSalt));
    const auto classes = static_cast<std::size_t>(num_classes);
    const auto gt = assign_image(Sampler::Gaussian, boxes, grids);

    std::vector<DensePrediction> out;
    out.reserve(grids.size());
    for (const AssignmentResult& a : gt) {
        const FeatureGrid& g = a.grid;
        const double att = noise.attenuation[static_cast<std::size_t>(g.level - kMinLevel)];
        std::vector<double> scores(g.cells() * classes, 0.0);
        std::vector<double> centerness(g.cells(), 0.0);
        std::vector<RotatedBox> pred_boxes;
        pred_boxes.reserve(g.cells());
        for (std::size_t cell = 0; cell < g.cells(); ++cell) {
            const CellTarget& t = a.cells[cell];
            const Point2 p = g.point(cell);
            if (t.positive()) {
                const RotatedBox& b = boxes[*t.box_id];
                const double jitter = noise.center_sigma * b.min_side();
                const double cx = rng.normal(b.cx(), jitter);
                const double cy = rng.normal(b.cy(), jitter);
                const double w = b.w() * std::exp(rng.normal(0.0, noise.size_sigma));
                const double h = b.h() * std::exp(rng.normal(0.0, noise.size_sigma));
                const double th = rng.normal(b.theta(), noise.angle_sigma);
                pred_boxes.emplace_back(cx, cy, w, h, th, t.label);
                scores[cell * classes + static_cast<std::size_t>(t.label)] =
                    clamp01(rng.normal(noise.score_tp_mean, noise.score_tp_std)) * att;
                centerness[cell] = clamp01(t.centerness + rng.normal(0.0, noise.centerness_noise_std));
            } else {
                const bool spike = rng.bernoulli(noise.fp_rate);
                int cls = 0;
                if (spike) {
                    cls = static_cast<int>(rng.below(classes));
                    scores[cell * classes + static_cast<std::size_t>(cls)] =
                        clamp01(rng.normal(noise.score_fp_mean, noise.score_fp_std));
                }
                centerness[cell] = rng.uniform();
                pred_boxes.emplace_back(p.x, p.y, 4.0 * g.stride, 4.0 * g.stride, 0.0, cls);
            }
        }
        out.emplace_back(g.level, g.height, g.width, classes, std::move(scores), std::move(centerness),
                         std::move(pred_boxes));
    }
    return out;
}

ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double momentum) {
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("EMA momentum must lie in [0, 1)");
    if (teacher.values.size() != student.values.size()) {
        throw ShapeError("EMA operands differ in length: " + std::to_string(teacher.values.size()) + " vs " +
                         std::to_string(student.values.size()));
    }
    teacher.validate();
    student.validate();
    ParamVector out;
    out.values.resize(teacher.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = momentum * teacher.values[i] + (1.0 - momentum) * student.values[i];
    }
    return out;
}

Strategy Strategy::parse(const std::string& text) {
    const auto parts = split(text, ':');
    Strategy s;
    if (parts.size() == 3 && parts[0] == "sla") {
        s.kind = Kind::Sla;
        s.sla.score_thresh = parse_double(parts[1], "strategy threshold");
        const double k = parse_double(parts[2], "strategy topk");
        if (!(k >= 1.0) || k != std::floor(k)) throw ConfigError("strategy topk must be a positive integer");
        s.sla.topk = static_cast<std::size_t>(k);
        s.sla.validate();
        return s;
    }
    if (parts.size() == 2 && parts[0] == "ratio") {
        s.kind = Kind::Ratio;
        s.ratio = parse_double(parts[1], "strategy ratio");
        if (!(s.ratio > 0.0 && s.ratio <= 1.0)) throw ConfigError("strategy ratio must lie in (0, 1]");
        return s;
    }
    throw ConfigError("unknown strategy '" + text + "' (expected sla:<thr>:<topk> or ratio:<fraction>)");
}

std::string Strategy::name() const {
    if (kind == Kind::Ratio) return "ratio:" + format_double(ratio);
    return "sla:" + format_double(sla.score_thresh) + ":" + std::to_string(sla.topk);
}

namespace {

std::vector<PixelPRResult> run_repetition(const SceneConfig& scene, const NoiseModel& noise,
                                          std::span<const Strategy> strategies) {
    const auto boxes = generate_scene(scene);
    const auto grids = make_pyramid(scene.image_size, scene.image_size);
    const auto gt = assign_image(Sampler::Gaussian, boxes, grids);
    const auto preds = simulate_teacher(boxes, grids, noise, scene.categories);
    std::vector<PixelPRResult> out;
    out.reserve(strategies.size());
    for (const Strategy& s : strategies) {
        const PseudoLabelSet sel =
            s.kind == Strategy::Kind::Sla ? sla_select(preds, s.sla) : score_ratio_select(preds, s.ratio);
        out.push_back(pixel_pr(sel, gt));
    }
    return out;
}

void summarize(StrategySummary& row) {
    const std::size_t n = row.per_seed.size();
    std::vector<double> r(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = row.per_seed[i].recall;
        p[i] = row.per_seed[i].precision;
    }
    const auto mean_std = [n](std::vector<double>& v, double& mean, double& sd) {
        mean = pairwise_sum(v) / static_cast<double>(n);
        if (n < 2) {
            sd = 0.0;
            return;
        }
        for (double& x : v) x = (x - mean) * (x - mean);
        sd = std::sqrt(pairwise_sum(v) / static_cast<double>(n - 1));
    };
    mean_std(r, row.recall_mean, row.recall_std);
    mean_std(p, row.precision_mean, row.precision_std);
}

}  // namespace

AblationResult run_ablation(const SceneConfig& scene, const NoiseModel& noise, std::span<const Strategy> strategies,
                            std::size_t repetitions, unsigned threads) {
    if (strategies.empty()) throw ConfigError("ablation needs at least one strategy");
    if (repetitions == 0) throw ConfigError("ablation needs at least one repetition");
    scene.validate();
    noise.validate();
    for (const Strategy& s : strategies) {
        if (s.kind == Strategy::Kind::Sla) s.sla.validate();
    }

    std::vector<std::vector<PixelPRResult>> per_rep(repetitions);
    std::vector<std::exception_ptr> failures(repetitions);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t r = next++; r < repetitions; r = next++) {
            try {
                SceneConfig sc = scene;
                sc.seed = scene.seed + r;
                NoiseModel nm = noise;
                nm.seed = mix_seed(sc.seed);
                per_rep[r] = run_repetition(sc, nm, strategies);
            } catch (...) {
                failures[r] = std::current_exception();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, repetitions));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    AblationResult out;
    for (std::size_t r = 0; r < repetitions; ++r) out.seeds.push_back(scene.seed + r);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        StrategySummary row;
        row.strategy = strategies[s].name();
        row.repetitions = repetitions;
        for (std::size_t r = 0; r < repetitions; ++r) row.per_seed.push_back(per_rep[r][s]);
        summarize(row);
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace gsod
