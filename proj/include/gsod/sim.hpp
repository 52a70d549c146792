// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file sim.hpp
 * @brief Synthetic teacher-student harness: random scenes, a noisy stand-in
 *        teacher built from ground truth, pseudo-label selection ablations
 *        and the EMA parameter update.
 *
 * No network is trained here. The teacher is a parametric corruption of the
 * ground truth, good enough to compare selection strategies by pixel-level
 * recall and precision.
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gsod/assignment.hpp"
#include "gsod/geometry.hpp"
#include "gsod/metrics.hpp"
#include "gsod/pseudo_label.hpp"

namespace gsod {

struct NoiseModel {
    double center_sigma = 0.1;  // fraction of min(w, h)
    double size_sigma = 0.1;    // log-space
    double angle_sigma = 0.05;  // radians
    double score_tp_mean = 0.5;
    double score_tp_std = 0.2;
    double score_fp_mean = 0.05;
    double score_fp_std = 0.05;
    double centerness_noise_std = 0.1;
    double fp_rate = 0.002;  // expected false-positive spikes per background cell
    /// Score multiplier for P3..P7; higher levels predict lower scores.
    std::array<double, 5> attenuation{1.0, 0.9, 0.7, 0.5, 0.35};
    std::uint64_t seed = 0;

    /// Throws ConfigError on negative stds, fp_rate outside [0, 0.1],
    /// means outside [0, 1] or attenuation outside [0, 1].
    void validate() const;
};

struct SceneConfig {
    double image_size = 1024.0;
    std::size_t count_min = 100;
    std::size_t count_max = 200;
    double long_side_min = 12.0;
    double long_side_max = 300.0;
    double aspect_min = 0.1;  // short / long, sampled log-uniformly
    double aspect_max = 1.0;
    double angle_min = -kPi / 2.0;  // uniform
    double angle_max = kPi / 2.0;
    int categories = 3;
    double max_pair_iou = 0.3;
    std::uint64_t seed = 0;

    /// Throws ConfigError on empty or non-positive ranges.
    void validate() const;
};

struct ParamVector {
    std::vector<double> values;

    /// Throws DomainError on non-finite entries.
    void validate() const;
    friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Boxes fully inside the image with pairwise rotated IoU <= max_pair_iou.
/// Each object gets at most 1000 placement attempts; throws PlacementError
/// when one cannot be placed.
std::vector<RotatedBox> generate_scene(const SceneConfig& cfg);

/// Noisy dense predictions for every grid. Cells positive under
/// gca_assign(route by level) carry the GT class with an attenuated score,
/// the true Gaussian centerness plus noise and a perturbed box. Background
/// cells score 0 except for false-positive spikes.
std::vector<DensePrediction> simulate_teacher(std::span<const RotatedBox> boxes,
                                              std::span<const FeatureGrid> grids, const NoiseModel& noise,
                                              int num_classes);

/// m * teacher + (1 - m) * student. Throws ConfigError unless 0 <= m < 1 and
/// ShapeError on length mismatch.
ParamVector ema_update(const ParamVector& teacher, const ParamVector& student, double momentum);

struct Strategy {
    enum class Kind { Sla, Ratio };
    Kind kind = Kind::Sla;
    SlaConfig sla;
    double ratio = 0.03;

    /// "sla:<thr>:<topk>" or "ratio:<fraction>". Throws ConfigError.
    static Strategy parse(const std::string& text);
    /// Canonical name, parseable by parse().
    std::string name() const;
};

struct StrategySummary {
    std::string strategy;
    std::size_t repetitions = 0;
    double recall_mean = 0.0;
    double recall_std = 0.0;  // sample standard deviation, 0 for one repetition
    double precision_mean = 0.0;
    double precision_std = 0.0;
    std::vector<PixelPRResult> per_seed;  // indexed by repetition
};

struct AblationResult {
    std::vector<StrategySummary> rows;  // one per strategy, in input order
    std::vector<std::uint64_t> seeds;   // scene seed of each repetition
};

/// Repetition r uses scene seed scene.seed + r and teacher seed
/// mix_seed(scene.seed + r). Results do not depend on `threads`
/// (0 = hardware concurrency). Throws ConfigError with no strategies or
/// zero repetitions.
AblationResult run_ablation(const SceneConfig& scene, const NoiseModel& noise, std::span<const Strategy> strategies,
                            std::size_t repetitions, unsigned threads = 0);

}  // namespace gsod
