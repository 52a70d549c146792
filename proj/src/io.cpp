// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "gsod/error.hpp"
#include "gsod/text.hpp"

namespace gsod {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return in;
}

}  // namespace

// ---- annotations ---------------------------------------------------------

std::vector<RotatedBox> load_dota_file(const fs::path& path, CategoryTable& categories) {
    auto in = open_input(path);
    const DotaParseResult parsed = parse_dota_file(in);
    if (!parsed.ok()) throw ParseError(parsed.errors.front().message, parsed.errors.front().line, path.string());
    std::vector<RotatedBox> boxes;
    boxes.reserve(parsed.records.size());
    for (const QuadAnnotation& q : parsed.records) {
        try {
            boxes.push_back(quad_to_rotated_box(q, categories));
        } catch (const DegenerateAnnotationError& e) {
            throw ParseError(e.what(), q.line, path.string());
        }
    }
    return boxes;
}

std::vector<RotatedBox> load_dota_path(const fs::path& path, CategoryTable& categories) {
    if (!fs::is_directory(path)) return load_dota_file(path, categories);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RotatedBox> boxes;
    for (const auto& f : files) {
        auto part = load_dota_file(f, categories);
        boxes.insert(boxes.end(), part.begin(), part.end());
    }
    return boxes;
}

// ---- prediction dumps ----------------------------------------------------

namespace {

std::vector<double> number_array(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(std::string(what) + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::size_t size_field(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
        throw ConfigError(std::string("field '") + key + "' must be a non-negative integer");
    }
    return j.at(key).get<std::size_t>();
}

DensePrediction prediction_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("record must be a JSON object");
    if (!j.contains("level") || !j.at("level").is_number_integer()) throw ConfigError("field 'level' must be an integer");
    const int level = j.at("level").get<int>();
    const std::size_t h = size_field(j, "h");
    const std::size_t w = size_field(j, "w");
    if (!j.contains("scores") || !j.contains("centerness")) throw ConfigError("fields 'scores' and 'centerness' are required");

    const json& js = j.at("scores");
    std::vector<double> scores;
    std::size_t classes = 0;
    if (js.is_array() && !js.empty() && js.front().is_array()) {
        classes = js.front().size();
        for (const auto& row : js) {
            if (!row.is_array() || row.size() != classes) throw ShapeError("every cell needs the same number of class scores");
            const auto v = number_array(row, "scores");
            scores.insert(scores.end(), v.begin(), v.end());
        }
    } else {
        scores = number_array(js, "scores");
        classes = j.contains("num_classes") ? size_field(j, "num_classes") : 1;
    }
    auto centerness = number_array(j.at("centerness"), "centerness");

    std::vector<RotatedBox> boxes;
    if (j.contains("boxes") && !j.at("boxes").is_null()) {
        const json& jb = j.at("boxes");
        if (!jb.is_array()) throw ConfigError("field 'boxes' must be an array");
        boxes.reserve(jb.size());
        for (const auto& b : jb) {
            const auto v = number_array(b, "box");
            if (v.size() != 5) throw ShapeError("boxes are [cx, cy, w, h, theta]");
            boxes.emplace_back(v[0], v[1], v[2], v[3], v[4]);
        }
    }
    return DensePrediction(level, h, w, classes, std::move(scores), std::move(centerness), std::move(boxes));
}

}  // namespace

std::vector<DensePrediction> read_predictions(std::istream& in, std::string_view source) {
    std::vector<DensePrediction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(prediction_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), lineno, std::string(source));
        } catch (const Error& e) {
            throw ParseError(e.what(), lineno, std::string(source));
        }
    }
    return out;
}

std::vector<DensePrediction> read_predictions(const fs::path& path) {
    auto in = open_input(path);
    return read_predictions(in, path.string());
}

void write_predictions(std::ostream& out, std::span<const DensePrediction> preds) {
    for (const DensePrediction& p : preds) {
        ordered_json j;
        j["level"] = p.level();
        j["h"] = p.height();
        j["w"] = p.width();
        json scores = json::array();
        for (std::size_t c = 0; c < p.cells(); ++c) {
            const auto s = p.scores(c);
            scores.push_back(std::vector<double>(s.begin(), s.end()));
        }
        j["scores"] = std::move(scores);
        j["centerness"] = p.raw_centerness();
        if (p.has_boxes()) {
            json boxes = json::array();
            for (const RotatedBox& b : p.boxes()) boxes.push_back({b.cx(), b.cy(), b.w(), b.h(), b.theta()});
            j["boxes"] = std::move(boxes);
        }
        out << j.dump() << '\n';
    }
}

// ---- CSV writers ---------------------------------------------------------

void write_selection_csv(std::ostream& out, const PseudoLabelSet& sel) {
    out << "level,cell,class,score,centerness,weight\n";
    for (const PseudoLabel& e : sel.entries) {
        out << e.level << ',' << e.cell << ',' << e.cls << ',' << format_double(e.score) << ','
            << format_double(e.centerness) << ',' << format_double(e.weight) << '\n';
    }
}

PseudoLabelSet read_selection_csv(std::istream& in, std::string_view source) {
    PseudoLabelSet sel;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (lineno == 1 && !f.empty() && f[0] == "level") continue;
        try {
            if (f.size() != 6) throw ConfigError("expected 6 fields, found " + std::to_string(f.size()));
            PseudoLabel e;
            e.level = static_cast<int>(parse_unsigned(f[0], "level"));
            e.cell = static_cast<std::size_t>(parse_unsigned(f[1], "cell"));
            e.cls = static_cast<int>(parse_unsigned(f[2], "class"));
            e.score = parse_double(f[3], "score");
            e.centerness = parse_double(f[4], "centerness");
            e.weight = parse_double(f[5], "weight");
            sel.entries.push_back(e);
        } catch (const Error& e) {
            throw ParseError(e.what(), lineno, std::string(source));
        }
    }
    return sel;
}

void write_assignment_csv(std::ostream& out, std::span<const AssignmentResult> levels, bool include_negatives) {
    out << "level,row,col,label,centerness,box_id\n";
    for (const AssignmentResult& a : levels) {
        for (std::size_t cell = 0; cell < a.cells.size(); ++cell) {
            const CellTarget& t = a.cells[cell];
            if (!t.positive() && !include_negatives) continue;
            out << a.grid.level << ',' << cell / a.grid.width << ',' << cell % a.grid.width << ',' << t.label << ','
                << format_double(t.centerness) << ',';
            if (t.box_id) {
                out << *t.box_id;
            } else {
                out << -1;
            }
            out << '\n';
        }
    }
}

void write_soft_targets_csv(std::ostream& out, std::span<const SoftTargetMap> levels) {
    out << "level,cell,class,y\n";
    for (const SoftTargetMap& m : levels) {
        for (const SoftTarget& t : m.positives) {
            out << m.grid.level << ',' << t.cell << ',' << t.cls << ',' << format_double(t.y) << '\n';
        }
    }
}

void write_stats_csv(std::ostream& out, const AspectRatioStats& stats) {
    out << "ratio_bin_low,ratio_bin_high,count\n";
    for (const RatioBin& b : stats.bins()) {
        out << format_double(b.low) << ',' << format_double(b.high) << ',' << b.count << '\n';
    }
}

void write_stats_json(std::ostream& out, const AspectRatioStats& stats) {
    ordered_json j;
    j["total"] = stats.total();
    j["fraction_below_0.5"] = stats.fraction_below(0.5);
    ordered_json per = ordered_json::object();
    for (const auto& [name, c] : stats.per_category()) {
        ordered_json entry;
        entry["count"] = c.count;
        entry["fraction_below_0.5"] =
            c.count == 0 ? 0.0 : static_cast<double>(c.below_half) / static_cast<double>(c.count);
        per[name] = std::move(entry);
    }
    j["per_category"] = std::move(per);
    out << j.dump(2) << '\n';
}

void write_threshold_pr_csv(std::ostream& out, std::span<const ThresholdPR> rows) {
    out << "threshold,precision,recall\n";
    for (const ThresholdPR& r : rows) {
        out << format_double(r.threshold) << ',' << format_double(r.precision) << ',' << format_double(r.recall)
            << '\n';
    }
}

void write_heatmap_csv(std::ostream& out, const Heatmap2D& h) {
    out << "score_bin,centerness_bin,count\n";
    for (std::size_t i = 0; i < h.bins; ++i) {
        for (std::size_t k = 0; k < h.bins; ++k) out << i << ',' << k << ',' << h.at(i, k) << '\n';
    }
}

void write_category_pr_csv(std::ostream& out, const CategoryPRReport& report, const CategoryTable* categories) {
    out << "category,recall,precision\n";
    for (const auto& [c, r] : report.per_category) {
        if (categories != nullptr && static_cast<std::size_t>(c) < categories->size()) {
            out << categories->name(c);
        } else {
            out << c;
        }
        out << ',' << format_double(r.recall) << ',' << format_double(r.precision) << '\n';
    }
}

void write_pixel_pr_json(std::ostream& out, const PixelPRResult& r) {
    ordered_json j;
    j["recall"] = r.recall;
    j["precision"] = r.precision;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    out << j.dump(2) << '\n';
}

// ---- losses --------------------------------------------------------------

namespace {

double number_field(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::array<double, 5> regression_field(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("field '") + key + "' is required");
    const auto v = number_array(j.at(key), key);
    if (v.size() != 5) throw ShapeError(std::string("field '") + key + "' needs 5 values");
    return {v[0], v[1], v[2], v[3], v[4]};
}

LossBatch batch_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("a batch must be a JSON object");
    LossBatch b;
    b.num_classes = j.contains("num_classes") ? size_field(j, "num_classes") : 1;
    if (!j.contains("cls_prob") || !j.contains("cls_target")) throw ConfigError("fields 'cls_prob' and 'cls_target' are required");
    b.cls_prob = number_array(j.at("cls_prob"), "cls_prob");
    b.cls_target = number_array(j.at("cls_target"), "cls_target");
    if (j.contains("positives")) {
        if (!j.at("positives").is_array()) throw ConfigError("field 'positives' must be an array");
        for (const auto& p : j.at("positives")) {
            if (!p.is_object()) throw ConfigError("positives must be JSON objects");
            PositiveSample s;
            s.centerness_pred = number_field(p, "centerness_pred", 0.0);
            s.centerness_target = number_field(p, "centerness_target", 0.0);
            s.regression_pred = regression_field(p, "regression_pred");
            s.regression_target = regression_field(p, "regression_target");
            s.weight = number_field(p, "weight", 1.0);
            b.positives.push_back(s);
        }
    }
    b.validate();
    return b;
}

}  // namespace

LossInput read_loss_input(std::istream& in, std::string_view source) {
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        const json j = json::parse(text);
        if (!j.is_object() || !j.contains("unlabeled")) throw ConfigError("field 'unlabeled' is required");
        LossInput li;
        if (j.contains("config")) {
            const json& c = j.at("config");
            li.config.alpha = number_field(c, "alpha", li.config.alpha);
            li.config.unsup_weight = number_field(c, "unsup_weight", li.config.unsup_weight);
            li.config.qfl_focusing = number_field(c, "qfl_focusing", li.config.qfl_focusing);
            li.config.smooth_l1_delta = number_field(c, "smooth_l1_delta", li.config.smooth_l1_delta);
            li.config.validate();
        }
        if (j.contains("labeled") && !j.at("labeled").is_null()) li.labeled = batch_from_json(j.at("labeled"));
        li.unlabeled = batch_from_json(j.at("unlabeled"));
        return li;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), 0, std::string(source));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what(), 0, std::string(source));
    }
}

void write_loss_json(std::ostream& out, const TotalLoss& t, const LossConfig& cfg) {
    ordered_json j;
    j["cls"] = t.sup.cls + cfg.unsup_weight * t.unsup.cls;
    j["cen"] = t.sup.cen + cfg.unsup_weight * t.unsup.cen;
    j["reg"] = t.sup.reg + cfg.unsup_weight * t.unsup.reg;
    j["sup"] = t.sup.total;
    j["unsup"] = t.unsup.total;
    j["total"] = t.total;
    out << j.dump(2) << '\n';
}

// ---- simulator -----------------------------------------------------------

std::vector<KeyValue> parse_key_values(std::istream& in, std::string_view source) {
    std::vector<KeyValue> out;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (!quoted && (line[i] == '#' || line[i] == ';')) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", lineno, std::string(source));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno, std::string(source));
        KeyValue kv;
        kv.key = std::string(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        kv.value = std::string(value);
        kv.line = lineno;
        if (kv.key.empty()) throw ParseError("empty key", lineno, std::string(source));
        out.push_back(std::move(kv));
    }
    return out;
}

namespace {

struct Field {
    std::function<void(SimSettings&, std::string_view)> set;
    std::function<std::string(const SimSettings&)> get;
};

template <class T>
Field real_field(T SimSettings::*part, double T::*member) {
    return {[=](SimSettings& s, std::string_view v) { (s.*part).*member = parse_double(v, "value"); },
            [=](const SimSettings& s) { return format_double((s.*part).*member); }};
}

std::string join_attenuation(const std::array<double, 5>& a) {
    std::string out;
    for (std::size_t i = 0; i < a.size(); ++i) out += (i ? "," : "") + format_double(a[i]);
    return out;
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["image_size"] = real_field(&SimSettings::scene, &SceneConfig::image_size);
        t["long_side_min"] = real_field(&SimSettings::scene, &SceneConfig::long_side_min);
        t["long_side_max"] = real_field(&SimSettings::scene, &SceneConfig::long_side_max);
        t["aspect_min"] = real_field(&SimSettings::scene, &SceneConfig::aspect_min);
        t["aspect_max"] = real_field(&SimSettings::scene, &SceneConfig::aspect_max);
        t["angle_min"] = real_field(&SimSettings::scene, &SceneConfig::angle_min);
        t["angle_max"] = real_field(&SimSettings::scene, &SceneConfig::angle_max);
        t["max_pair_iou"] = real_field(&SimSettings::scene, &SceneConfig::max_pair_iou);
        t["count_min"] = {[](SimSettings& s, std::string_view v) { s.scene.count_min = parse_unsigned(v, "value"); },
                          [](const SimSettings& s) { return std::to_string(s.scene.count_min); }};
        t["count_max"] = {[](SimSettings& s, std::string_view v) { s.scene.count_max = parse_unsigned(v, "value"); },
                          [](const SimSettings& s) { return std::to_string(s.scene.count_max); }};
        t["categories"] = {
            [](SimSettings& s, std::string_view v) { s.scene.categories = static_cast<int>(parse_unsigned(v, "value")); },
            [](const SimSettings& s) { return std::to_string(s.scene.categories); }};
        t["seed"] = {[](SimSettings& s, std::string_view v) { s.scene.seed = parse_unsigned(v, "value"); },
                     [](const SimSettings& s) { return std::to_string(s.scene.seed); }};
        t["center_sigma"] = real_field(&SimSettings::noise, &NoiseModel::center_sigma);
        t["size_sigma"] = real_field(&SimSettings::noise, &NoiseModel::size_sigma);
        t["angle_sigma"] = real_field(&SimSettings::noise, &NoiseModel::angle_sigma);
        t["score_tp_mean"] = real_field(&SimSettings::noise, &NoiseModel::score_tp_mean);
        t["score_tp_std"] = real_field(&SimSettings::noise, &NoiseModel::score_tp_std);
        t["score_fp_mean"] = real_field(&SimSettings::noise, &NoiseModel::score_fp_mean);
        t["score_fp_std"] = real_field(&SimSettings::noise, &NoiseModel::score_fp_std);
        t["centerness_noise_std"] = real_field(&SimSettings::noise, &NoiseModel::centerness_noise_std);
        t["fp_rate"] = real_field(&SimSettings::noise, &NoiseModel::fp_rate);
        t["attenuation"] = {[](SimSettings& s, std::string_view v) {
                                const auto parts = split(v, ',');
                                if (parts.size() != 5) throw ConfigError("attenuation needs 5 comma-separated factors");
                                for (std::size_t i = 0; i < 5; ++i) s.noise.attenuation[i] = parse_double(parts[i], "value");
                            },
                            [](const SimSettings& s) { return join_attenuation(s.noise.attenuation); }};
        t["repetitions"] = {[](SimSettings& s, std::string_view v) { s.repetitions = parse_unsigned(v, "value"); },
                            [](const SimSettings& s) { return std::to_string(s.repetitions); }};
        t["strategies"] = {[](SimSettings& s, std::string_view v) {
                               s.strategies.clear();
                               for (const auto& part : split(v, ',')) s.strategies.push_back(Strategy::parse(part));
                           },
                           [](const SimSettings& s) {
                               std::string out;
                               for (std::size_t i = 0; i < s.strategies.size(); ++i) {
                                   out += (i ? "," : "") + s.strategies[i].name();
                               }
                               return out;
                           }};
        return t;
    }();
    return table;
}

}  // namespace

void apply_key_values(SimSettings& settings, std::span<const KeyValue> kv, std::string_view source) {
    for (const KeyValue& e : kv) {
        const auto it = fields().find(e.key);
        if (it == fields().end()) throw ParseError("unknown key '" + e.key + "'", e.line, std::string(source));
        try {
            it->second.set(settings, e.value);
        } catch (const Error& err) {
            throw ParseError(e.key + ": " + err.what(), e.line, std::string(source));
        }
    }
}

std::string canonical_config(const SimSettings& settings) {
    std::string out;
    for (const auto& [key, f] : fields()) out += key + " = " + f.get(settings) + "\n";
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_ablation_csv(std::ostream& out, const AblationResult& result) {
    out << "strategy,repetitions,recall_mean,recall_std,precision_mean,precision_std\n";
    for (const StrategySummary& r : result.rows) {
        out << r.strategy << ',' << r.repetitions << ',' << format_double(r.recall_mean) << ','
            << format_double(r.recall_std) << ',' << format_double(r.precision_mean) << ','
            << format_double(r.precision_std) << '\n';
    }
}

void write_manifest_json(std::ostream& out, const SimSettings& settings, const AblationResult& result) {
    const std::string canon = canonical_config(settings);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(canon)));
    ordered_json j;
    j["config_hash"] = std::string(hash);
    ordered_json cfg = ordered_json::object();
    for (const auto& [key, f] : fields()) cfg[key] = f.get(settings);
    j["config"] = std::move(cfg);
    j["repetitions"] = settings.repetitions;
    j["seeds"] = result.seeds;
    json names = json::array();
    for (const auto& r : result.rows) names.push_back(r.strategy);
    j["strategies"] = std::move(names);
    out << j.dump(2) << '\n';
}

}  // namespace gsod
