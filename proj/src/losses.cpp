// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#include "gsod/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gsod/error.hpp"

namespace gsod {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

void check_target(double y, const char* what) {
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError(std::string(what) + " target must lie in [0, 1]");
}

// t * log(t / p) with the 0 * log 0 = 0 convention.
double xlogx_over(double t, double p) { return t == 0.0 ? 0.0 : t * std::log(t / p); }

}  // namespace

LossGrad qfl(double prob, double target, double focusing) {
    check_target(target, "quality focal loss");
    if (!(focusing >= 0.0)) throw ConfigError("focusing parameter must be >= 0");
    const double p = clamp_prob(prob);
    const double y = target;
    const double d = p - y;
    const double ad = std::abs(d);

    const double ce = -((1.0 - y) * std::log1p(-p) + y * std::log(p));
    const double dce = (1.0 - y) / (1.0 - p) - y / p;
    const double mod = std::pow(ad, focusing);
    double dmod = 0.0;
    if (ad > 0.0 && focusing > 0.0) dmod = focusing * std::pow(ad, focusing - 1.0) * (d > 0.0 ? 1.0 : -1.0);
    return {mod * ce, dmod * ce + mod * dce};
}

LossGrad bce(double prob, double target) {
    check_target(target, "cross-entropy");
    const double p = clamp_prob(prob);
    const double t = target;
    const double loss = xlogx_over(t, p) + xlogx_over(1.0 - t, 1.0 - p);
    return {std::max(0.0, loss), (p - t) / (p * (1.0 - p))};
}

LossGrad smooth_l1(double pred, double target, double delta) {
    if (!(delta > 0.0)) throw ConfigError("smooth-l1 delta must be positive");
    const double d = pred - target;
    const double ad = std::abs(d);
    if (ad < delta) return {0.5 * d * d / delta, d / delta};
    return {ad - 0.5 * delta, d > 0.0 ? 1.0 : -1.0};
}

void LossConfig::validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!(unsup_weight >= 0.0)) throw ConfigError("unsupervised weight must be >= 0");
    if (!(qfl_focusing >= 0.0)) throw ConfigError("focusing parameter must be >= 0");
    if (!(smooth_l1_delta > 0.0)) throw ConfigError("smooth-l1 delta must be positive");
}

void LossBatch::validate() const {
    if (num_classes == 0) throw ShapeError("batch needs at least one class");
    if (cls_prob.size() != cls_target.size()) throw ShapeError("class predictions and targets differ in length");
    if (cls_prob.size() % num_classes != 0) throw ShapeError("class predictions are not a multiple of num_classes");
    for (const auto& p : positives) {
        if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) throw DomainError("localization weight must be >= 0");
    }
}

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kLeaf = 8;
    if (values.size() <= kLeaf) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

struct Sums {
    double cls = 0.0;
    double cen = 0.0;
    double reg = 0.0;
};

Sums accumulate(const LossBatch& batch, const LossConfig& cfg, bool weighted) {
    std::vector<double> terms(batch.cls_prob.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
        terms[i] = qfl(batch.cls_prob[i], batch.cls_target[i], cfg.qfl_focusing).loss;
    }
    Sums s;
    s.cls = pairwise_sum(terms);

    std::vector<double> cen(batch.positives.size());
    std::vector<double> reg(batch.positives.size());
    for (std::size_t j = 0; j < batch.positives.size(); ++j) {
        const PositiveSample& p = batch.positives[j];
        const double w = weighted ? p.weight : 1.0;
        cen[j] = w * bce(p.centerness_pred, p.centerness_target).loss;
        double r = 0.0;
        for (std::size_t k = 0; k < 5; ++k) {
            r += smooth_l1(p.regression_pred[k], p.regression_target[k], cfg.smooth_l1_delta).loss;
        }
        reg[j] = w * r;
    }
    s.cen = pairwise_sum(cen);
    s.reg = pairwise_sum(reg);
    return s;
}

}  // namespace

LossBreakdown unsupervised_loss(const LossBatch& batch, const LossConfig& cfg) {
    cfg.validate();
    batch.validate();
    if (batch.n_all() == 0) throw ShapeError("unsupervised loss needs at least one cell (N_all = 0)");
    const Sums s = accumulate(batch, cfg, true);
    LossBreakdown out;
    out.cls = s.cls / static_cast<double>(batch.n_all());
    if (batch.n_pos() > 0) {
        const double scale = cfg.alpha / static_cast<double>(batch.n_pos());
        out.cen = scale * s.cen;
        out.reg = scale * s.reg;
    }
    out.total = out.cls + out.cen + out.reg;
    return out;
}

LossBreakdown supervised_loss(const LossBatch& batch, const LossConfig& cfg) {
    cfg.validate();
    batch.validate();
    if (batch.n_all() == 0) throw ShapeError("supervised loss needs at least one cell (N_all = 0)");
    const Sums s = accumulate(batch, cfg, false);
    const double norm = static_cast<double>(std::max<std::size_t>(batch.n_pos(), 1));
    LossBreakdown out;
    out.cls = s.cls / norm;
    out.cen = s.cen / norm;
    out.reg = s.reg / norm;
    out.total = out.cls + out.cen + out.reg;
    return out;
}

TotalLoss total_loss(const LossBatch& labeled, const LossBatch& unlabeled, const LossConfig& cfg) {
    TotalLoss t;
    t.sup = supervised_loss(labeled, cfg);
    t.unsup = unsupervised_loss(unlabeled, cfg);
    t.total = t.sup.total + cfg.unsup_weight * t.unsup.total;
    return t;
}

}  // namespace gsod
