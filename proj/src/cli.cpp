// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "gsod/error.hpp"
#include "gsod/io.hpp"
#include "gsod/text.hpp"

namespace gsod::cli {

namespace {

namespace fs = std::filesystem;

/// Output sink: "-" is the caller's stream, anything else a file.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (path == "-") {
            stream_ = &fallback;
            return;
        }
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
        if (!*file_) throw DomainError("cannot write " + path);
        stream_ = file_.get();
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

std::ifstream open_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open " + path);
    return in;
}

Sampler parse_sampler(const std::string& s) {
    if (s == "gca") return Sampler::Gaussian;
    if (s == "center") return Sampler::Center;
    return Sampler::All;
}

struct ImageOpts {
    double width = 1024.0;
    double height = 1024.0;
};

void add_image_opts(CLI::App* cmd, ImageOpts& img) {
    cmd->add_option("--width", img.width, "Image width in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--height", img.height, "Image height in pixels")->capture_default_str()->check(CLI::PositiveNumber);
}

std::vector<RotatedBox> load_boxes(const std::string& path, CategoryTable& table) {
    return load_dota_path(path, table);
}

std::vector<ScoredDetection> detections(std::span<const DensePrediction> preds, double score_thr, double nms) {
    std::vector<ScoredDetection> out;
    for (const PseudoBox& p : pseudo_boxes(preds, score_thr, nms)) out.push_back({p.box.with_category(p.cls), p.score});
    return out;
}

void write_dota(std::ostream& out, std::span<const RotatedBox> boxes, const CategoryTable& table) {
    for (const RotatedBox& b : boxes) {
        for (const Point2& c : b.corners()) out << format_double(c.x) << ' ' << format_double(c.y) << ' ';
        const int cat = b.category().value_or(0);
        out << (static_cast<std::size_t>(cat) < table.size() ? table.name(cat) : "class_" + std::to_string(cat)) << ' '
            << b.difficulty() << '\n';
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gaussian-centered oriented object detection toolkit", "gsod"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    std::function<void()> action;

    // ---- stats
    std::string in_path, out_path = "-", csv_path;
    std::size_t bins = 20;
    bool exclude_difficult = false;
    auto* stats = app.add_subcommand("stats", "Aspect-ratio statistics over DOTA annotations");
    stats->add_option("--in", in_path, "Annotation file or directory")->required()->check(CLI::ExistingPath);
    stats->add_option("--out", out_path, "JSON summary ('-' for stdout)")->capture_default_str();
    stats->add_option("--csv", csv_path, "Optional histogram CSV");
    stats->add_option("--bins", bins, "Histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
    stats->add_flag("--exclude-difficult", exclude_difficult, "Drop records marked difficult");
    stats->callback([&] {
        action = [&] {
            CategoryTable table = CategoryTable::dota_v15();
            const auto boxes = load_boxes(in_path, table);
            const auto s = aspect_ratio_stats(boxes, {bins, !exclude_difficult}, &table);
            Sink sink(out_path, out);
            write_stats_json(*sink, s);
            if (!csv_path.empty()) {
                Sink csv(csv_path, out);
                write_stats_csv(*csv, s);
            }
        };
    });

    // ---- assign
    ImageOpts img;
    std::string sampler_name = "gca";
    AssignOptions assign_opts;
    bool include_negatives = false;
    auto* assign_cmd = app.add_subcommand("assign", "Dump label assignments for one annotation file");
    assign_cmd->add_option("--in", in_path, "Annotation file")->required()->check(CLI::ExistingFile);
    assign_cmd->add_option("--out", out_path, "CSV output ('-' for stdout)")->capture_default_str();
    assign_cmd->add_option("--sampler", sampler_name, "gca, center or all")
        ->capture_default_str()
        ->check(CLI::IsMember({"gca", "center", "all"}));
    assign_cmd->add_option("--radius", assign_opts.center_radius, "Center-sampling radius in strides")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    assign_cmd->add_flag("--limit-range", assign_opts.limit_regress_range, "Apply per-level regress ranges");
    assign_cmd->add_flag("--include-negatives", include_negatives, "Also emit background cells");
    add_image_opts(assign_cmd, img);
    assign_cmd->callback([&] {
        action = [&] {
            CategoryTable table = CategoryTable::dota_v15();
            const auto boxes = load_boxes(in_path, table);
            const auto grids = make_pyramid(img.width, img.height);
            const auto result = assign_image(parse_sampler(sampler_name), boxes, grids, assign_opts);
            Sink sink(out_path, out);
            write_assignment_csv(*sink, result, include_negatives);
        };
    });

    // ---- select
    std::string strategy = "sla", scope = "joint";
    SlaConfig sla;
    double ratio = 0.03, nms = 0.1;
    auto* select = app.add_subcommand("select", "Pseudo-label selection on a prediction dump");
    select->add_option("--in", in_path, "Prediction dump (JSON lines)")->required()->check(CLI::ExistingFile);
    select->add_option("--out", out_path, "CSV output ('-' for stdout)")->capture_default_str();
    select->add_option("--strategy", strategy, "sla, ratio or boxes")
        ->capture_default_str()
        ->check(CLI::IsMember({"sla", "ratio", "boxes"}));
    select->add_option("--thr", sla.score_thresh, "Score threshold")->capture_default_str();
    select->add_option("--topk", sla.topk, "Low-level top-k")->capture_default_str();
    select->add_option("--topk-scope", scope, "joint or per-level")
        ->capture_default_str()
        ->check(CLI::IsMember({"joint", "per-level"}));
    select->add_option("--ratio", ratio, "Fraction of cells kept by the ratio strategy")->capture_default_str();
    select->add_option("--nms", nms, "IoU threshold of the box strategy")->capture_default_str();
    select->callback([&] {
        action = [&] {
            const auto preds = read_predictions(fs::path(in_path));
            Sink sink(out_path, out);
            if (strategy == "boxes") {
                *sink << "level,cell,class,score,cx,cy,w,h,theta\n";
                for (const PseudoBox& p : pseudo_boxes(preds, sla.score_thresh, nms)) {
                    *sink << p.level << ',' << p.cell << ',' << p.cls << ',' << format_double(p.score) << ','
                          << format_double(p.box.cx()) << ',' << format_double(p.box.cy()) << ','
                          << format_double(p.box.w()) << ',' << format_double(p.box.h()) << ','
                          << format_double(p.box.theta()) << '\n';
                }
                return;
            }
            sla.topk_scope = scope == "joint" ? TopkScope::Joint : TopkScope::PerLevel;
            const PseudoLabelSet sel = strategy == "sla" ? sla_select(preds, sla) : score_ratio_select(preds, ratio);
            write_selection_csv(*sink, sel);
        };
    });

    // ---- softlabel
    CcslParams ccsl;
    std::string convention = "root";
    auto* soft = app.add_subcommand("softlabel", "Soft classification targets for one annotation file");
    soft->add_option("--in", in_path, "Annotation file")->required()->check(CLI::ExistingFile);
    soft->add_option("--out", out_path, "CSV output ('-' for stdout)")->capture_default_str();
    soft->add_option("--beta", ccsl.beta_smooth, "Smoothing parameter beta")->capture_default_str()->check(CLI::NonNegativeNumber);
    soft->add_option("--convention", convention, "Exponent convention: root (x^(1/beta)) or power (x^beta)")
        ->capture_default_str()
        ->check(CLI::IsMember({"root", "power"}));
    soft->add_option("--sampler", sampler_name, "gca, center or all")
        ->capture_default_str()
        ->check(CLI::IsMember({"gca", "center", "all"}));
    add_image_opts(soft, img);
    soft->callback([&] {
        action = [&] {
            CategoryTable table = CategoryTable::dota_v15();
            const auto boxes = load_boxes(in_path, table);
            ccsl.image_w = img.width;
            ccsl.image_h = img.height;
            ccsl.convention = convention == "root" ? ExponentConvention::Root : ExponentConvention::Power;
            const auto grids = make_pyramid(img.width, img.height);
            std::vector<SoftTargetMap> maps;
            for (const auto& a : assign_image(parse_sampler(sampler_name), boxes, grids)) {
                maps.push_back(build_soft_targets(a, boxes, ccsl));
            }
            Sink sink(out_path, out);
            write_soft_targets_csv(*sink, maps);
        };
    });

    // ---- loss
    auto* loss = app.add_subcommand("loss", "Evaluate the training losses on a dumped batch");
    loss->add_option("--in", in_path, "Batch JSON")->required()->check(CLI::ExistingFile);
    loss->add_option("--out", out_path, "JSON output ('-' for stdout)")->capture_default_str();
    loss->callback([&] {
        action = [&] {
            auto in = open_file(in_path);
            const LossInput li = read_loss_input(in, in_path);
            TotalLoss t;
            t.unsup = unsupervised_loss(li.unlabeled, li.config);
            if (li.labeled) t.sup = supervised_loss(*li.labeled, li.config);
            t.total = t.sup.total + li.config.unsup_weight * t.unsup.total;
            Sink sink(out_path, out);
            write_loss_json(*sink, t, li.config);
        };
    });

    // ---- simulate
    std::string config_path, manifest_path, strategies_text, dump_dir;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    auto* sim = app.add_subcommand("simulate", "Selection ablation on synthetic scenes");
    sim->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    auto* reps_opt = sim->add_option("--reps", reps, "Repetitions (overrides the config)")->check(CLI::PositiveNumber);
    auto* seed_opt = sim->add_option("--seed", seed, "Base seed (overrides the config)");
    auto* strat_opt = sim->add_option("--strategies", strategies_text,
                                      "Comma list of sla:<thr>:<topk> / ratio:<fraction> (overrides the config)");
    sim->add_option("--threads", threads, "Worker threads, 0 = all cores")->capture_default_str();
    sim->add_option("--out", out_path, "Ablation CSV ('-' for stdout)")->capture_default_str();
    sim->add_option("--manifest", manifest_path, "Run manifest JSON");
    sim->add_option("--dump-dir", dump_dir, "Write the first scene's annotations and teacher predictions here");
    sim->callback([&] {
        action = [&] {
            SimSettings settings;
            if (!config_path.empty()) {
                auto in = open_file(config_path);
                apply_key_values(settings, parse_key_values(in, config_path), config_path);
            }
            if (reps_opt->count() > 0) settings.repetitions = reps;
            if (seed_opt->count() > 0) settings.scene.seed = seed;
            if (strat_opt->count() > 0) {
                const KeyValue kv{"strategies", strategies_text, 0};
                apply_key_values(settings, std::span(&kv, 1), "--strategies");
            }
            const AblationResult result =
                run_ablation(settings.scene, settings.noise, settings.strategies, settings.repetitions, threads);
            {
                Sink sink(out_path, out);
                write_ablation_csv(*sink, result);
            }
            if (!manifest_path.empty()) {
                Sink sink(manifest_path, out);
                write_manifest_json(*sink, settings, result);
            }
            if (!dump_dir.empty()) {
                fs::create_directories(dump_dir);
                const auto boxes = generate_scene(settings.scene);
                const auto grids = make_pyramid(settings.scene.image_size, settings.scene.image_size);
                NoiseModel nm = settings.noise;
                nm.seed = mix_seed(settings.scene.seed);
                const auto preds = simulate_teacher(boxes, grids, nm, settings.scene.categories);
                Sink ann((fs::path(dump_dir) / "scene.txt").string(), out);
                write_dota(*ann, boxes, CategoryTable::dota_v15());
                Sink pj((fs::path(dump_dir) / "preds.jsonl").string(), out);
                write_predictions(*pj, preds);
            }
        };
    });

    // ---- pr
    auto* pr = app.add_subcommand("pr", "Evaluation metrics over dumps");
    pr->require_subcommand(1);
    std::string sel_path, pred_path, gt_path;
    bool class_aware = false;
    double score_thr = 0.05;
    std::vector<double> ious{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
    double iou = 0.5;
    std::size_t heat_bins = 10;

    auto* pixel = pr->add_subcommand("pixel", "Pixel-level recall/precision of a selection");
    pixel->add_option("--sel", sel_path, "Selection CSV")->required()->check(CLI::ExistingFile);
    pixel->add_option("--gt", gt_path, "Annotation file")->required()->check(CLI::ExistingFile);
    pixel->add_option("--out", out_path, "JSON output ('-' for stdout)")->capture_default_str();
    pixel->add_flag("--class-aware", class_aware, "Require matching classes");
    add_image_opts(pixel, img);
    pixel->callback([&] {
        action = [&] {
            CategoryTable table = CategoryTable::dota_v15();
            const auto boxes = load_boxes(gt_path, table);
            const auto gt = assign_image(Sampler::Gaussian, boxes, make_pyramid(img.width, img.height));
            auto in = open_file(sel_path);
            const PseudoLabelSet sel = read_selection_csv(in, sel_path);
            Sink sink(out_path, out);
            write_pixel_pr_json(*sink, pixel_pr(sel, gt, {class_aware}));
        };
    });

    auto* box = pr->add_subcommand("box", "Pseudo-box precision/recall across IoU thresholds");
    box->add_option("--pred", pred_path, "Prediction dump")->required()->check(CLI::ExistingFile);
    box->add_option("--gt", gt_path, "Annotation file")->required()->check(CLI::ExistingFile);
    box->add_option("--out", out_path, "CSV output ('-' for stdout)")->capture_default_str();
    box->add_option("--score-thr", score_thr, "Score threshold for decoded boxes")->capture_default_str();
    box->add_option("--nms", nms, "NMS IoU threshold")->capture_default_str();
    box->add_option("--iou", ious, "Ascending IoU thresholds")->delimiter(',')->capture_default_str();
    box->callback([&] {
        action = [&] {
            CategoryTable table = CategoryTable::dota_v15();
            const auto gts = load_boxes(gt_path, table);
            const auto preds = read_predictions(fs::path(pred_path));
            const auto dets = detections(preds, score_thr, nms);
            Sink sink(out_path, out);
            write_threshold_pr_csv(*sink, precision_at_iou(dets, gts, ious));
        };
    });

    auto* heat = pr->add_subcommand("heatmap", "Score/centerness histogram over ground-truth positive cells");
    heat->add_option("--pred", pred_path, "Prediction dump")->required()->check(CLI::ExistingFile);
    heat->add_option("--gt", gt_path, "Annotation file")->required()->check(CLI::ExistingFile);
    heat->add_option("--out", out_path, "CSV output ('-' for stdout)")->capture_default_str();
    heat->add_option("--bins", heat_bins, "Bins per axis")->capture_default_str()->check(CLI::PositiveNumber);
    add_image_opts(heat, img);
    heat->callback([&] {
        action = [&] {
            CategoryTable table = CategoryTable::dota_v15();
            const auto boxes = load_boxes(gt_path, table);
            const auto gt = assign_image(Sampler::Gaussian, boxes, make_pyramid(img.width, img.height));
            const auto preds = read_predictions(fs::path(pred_path));
            std::vector<std::pair<double, double>> samples;
            for (const AssignmentResult& a : gt) {
                const auto it = std::find_if(preds.begin(), preds.end(),
                                             [&](const DensePrediction& p) { return p.level() == a.grid.level; });
                if (it == preds.end() || it->cells() != a.cells.size()) {
                    throw ConsistencyError("prediction dump does not cover level " + std::to_string(a.grid.level));
                }
                const auto conf = joint_confidence(*it);
                for (std::size_t c = 0; c < a.cells.size(); ++c) {
                    if (a.cells[c].positive()) samples.emplace_back(conf[c].score, it->centerness(c));
                }
            }
            const Heatmap2D h = score_centerness_heatmap(samples, heat_bins);
            Sink sink(out_path, out);
            write_heatmap_csv(*sink, h);
            err << "pearson_r " << format_double(h.pearson_r) << '\n';
        };
    });

    auto* cat = pr->add_subcommand("category", "Per-category box recall/precision");
    cat->add_option("--pred", pred_path, "Prediction dump")->required()->check(CLI::ExistingFile);
    cat->add_option("--gt", gt_path, "Annotation file")->required()->check(CLI::ExistingFile);
    cat->add_option("--out", out_path, "CSV output ('-' for stdout)")->capture_default_str();
    cat->add_option("--score-thr", score_thr, "Score threshold for decoded boxes")->capture_default_str();
    cat->add_option("--nms", nms, "NMS IoU threshold")->capture_default_str();
    cat->add_option("--iou", iou, "Match IoU threshold")->capture_default_str();
    cat->callback([&] {
        action = [&] {
            CategoryTable table = CategoryTable::dota_v15();
            const auto gts = load_boxes(gt_path, table);
            const auto preds = read_predictions(fs::path(pred_path));
            const auto report = per_category_box_pr(detections(preds, score_thr, nms), gts, table.size(), iou);
            Sink sink(out_path, out);
            write_category_pr_csv(*sink, report, &table);
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsageError;
    }
    try {
        if (action) action();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomainError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomainError;
    }
}

}  // namespace gsod::cli
