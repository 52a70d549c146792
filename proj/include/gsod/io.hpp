// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file io.hpp
 * @brief File formats shared by the command-line tool: annotation loading,
 *        prediction dumps (JSON lines), CSV/JSON writers and the flat
 *        key = value simulator configuration.
 *
 * Readers throw ParseError naming the source and line of the first bad
 * record. Writers format reals with the shortest round-trip representation,
 * so equal inputs give byte-identical files.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsod/assignment.hpp"
#include "gsod/ingest.hpp"
#include "gsod/losses.hpp"
#include "gsod/metrics.hpp"
#include "gsod/pseudo_label.hpp"
#include "gsod/sim.hpp"
#include "gsod/soft_label.hpp"

namespace gsod {

// ---- annotations ---------------------------------------------------------

/// Parses one DOTA file into rotated boxes; categories are interned into
/// `categories`. Throws ParseError on the first malformed or degenerate
/// record.
std::vector<RotatedBox> load_dota_file(const std::filesystem::path& path, CategoryTable& categories);

/// A single file, or every *.txt in a directory (sorted by name, merged).
std::vector<RotatedBox> load_dota_path(const std::filesystem::path& path, CategoryTable& categories);

// ---- prediction dumps ----------------------------------------------------

/// One JSON object per line: {"level", "h", "w", "scores", "centerness",
/// "boxes"}. "scores" is either one array of class scores per cell or a flat
/// cell-major array accompanied by "num_classes". "boxes" is optional.
std::vector<DensePrediction> read_predictions(std::istream& in, std::string_view source);
std::vector<DensePrediction> read_predictions(const std::filesystem::path& path);
void write_predictions(std::ostream& out, std::span<const DensePrediction> preds);

// ---- CSV writers ---------------------------------------------------------

/// level,cell,class,score,centerness,weight
void write_selection_csv(std::ostream& out, const PseudoLabelSet& sel);
/// Reads the selection CSV back; n_all is left at 0.
PseudoLabelSet read_selection_csv(std::istream& in, std::string_view source);

/// level,row,col,label,centerness,box_id; negatives use box_id -1.
void write_assignment_csv(std::ostream& out, std::span<const AssignmentResult> levels, bool include_negatives);

/// level,cell,class,y
void write_soft_targets_csv(std::ostream& out, std::span<const SoftTargetMap> levels);

/// ratio_bin_low,ratio_bin_high,count
void write_stats_csv(std::ostream& out, const AspectRatioStats& stats);
/// {"total", "fraction_below_0.5", "per_category": {name: {"count", "fraction_below_0.5"}}}
void write_stats_json(std::ostream& out, const AspectRatioStats& stats);

/// threshold,precision,recall
void write_threshold_pr_csv(std::ostream& out, std::span<const ThresholdPR> rows);
/// score_bin,centerness_bin,count
void write_heatmap_csv(std::ostream& out, const Heatmap2D& h);
/// category,recall,precision; names come from `categories` when given.
void write_category_pr_csv(std::ostream& out, const CategoryPRReport& report, const CategoryTable* categories);
/// {"recall", "precision", "tp", "fp", "fn"}
void write_pixel_pr_json(std::ostream& out, const PixelPRResult& r);

// ---- losses --------------------------------------------------------------

/// {"config": {...}?, "labeled": batch?, "unlabeled": batch}, where a batch
/// is {"num_classes", "cls_prob", "cls_target", "positives": [{
/// "centerness_pred", "centerness_target", "regression_pred",
/// "regression_target", "weight"}]}.
struct LossInput {
    LossConfig config;
    std::optional<LossBatch> labeled;
    LossBatch unlabeled;
};
LossInput read_loss_input(std::istream& in, std::string_view source);

/// {"cls", "cen", "reg", "sup", "unsup", "total"}. The components are those
/// of the combined objective: sup.x + unsup_weight * unsup.x.
void write_loss_json(std::ostream& out, const TotalLoss& t, const LossConfig& cfg);

// ---- simulator -----------------------------------------------------------

struct SimSettings {
    SceneConfig scene;
    NoiseModel noise;
    std::size_t repetitions = 100;
    std::vector<Strategy> strategies{Strategy::parse("sla:0.02:2000"), Strategy::parse("ratio:0.03")};
};

struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Flat "key = value" lines; '#' and ';' start comments, [section] headers
/// are ignored, values may be double-quoted.
std::vector<KeyValue> parse_key_values(std::istream& in, std::string_view source);

/// Applies recognized keys (see canonical_config for the list). Unknown keys
/// and bad values throw ParseError naming the line.
void apply_key_values(SimSettings& settings, std::span<const KeyValue> kv, std::string_view source);

/// Every setting as sorted "key = value" lines; this is what gets hashed.
std::string canonical_config(const SimSettings& settings);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// strategy,repetitions,recall_mean,recall_std,precision_mean,precision_std
void write_ablation_csv(std::ostream& out, const AblationResult& result);
/// {"config_hash", "config", "repetitions", "seeds", "strategies"}
void write_manifest_json(std::ostream& out, const SimSettings& settings, const AblationResult& result);

}  // namespace gsod
