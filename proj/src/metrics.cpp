// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/metrics.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace classengage {

double mof(const FrameLabelStream& pred, const FrameLabelStream& gt) {
    if (pred.labels.size() != gt.labels.size())
        throw Error(ErrorKind::data, "MoF: prediction has " + std::to_string(pred.labels.size()) +
                                         " frames, ground truth " + std::to_string(gt.labels.size()));
    if (gt.labels.empty()) throw Error(ErrorKind::data, "MoF: empty streams");
    std::size_t hits = 0;
    for (std::size_t f = 0; f < gt.labels.size(); ++f) hits += pred.labels[f] == gt.labels[f];
    return 100.0 * static_cast<double>(hits) / static_cast<double>(gt.labels.size());
}

std::size_t levenshtein(std::span<const LabelId> a, std::span<const LabelId> b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = a[i - 1] == b[j - 1] ? diag : 1 + std::min({diag, up, row[j - 1]});
            diag = up;
        }
    }
    return row[b.size()];
}

double edit_score(const ActionSequence& pred, const ActionSequence& gt) {
    const auto p = pred.label_order();
    const auto g = gt.label_order();
    const auto longest = std::max(p.size(), g.size());
    if (longest == 0) return 100.0;
    const double dist = static_cast<double>(levenshtein(p, g));
    return std::max(0.0, 100.0 * (1.0 - dist / static_cast<double>(longest)));
}

double SegmentCounts::f1() const noexcept {
    const auto denom = 2 * tp + fp + fn;
    if (denom == 0) return 100.0;
    return 100.0 * static_cast<double>(2 * tp) / static_cast<double>(denom);
}

namespace {

void check_tau(int tau, const F1Options& opts) {
    if (opts.restrict_taus) {
        if (std::find(kDefaultTaus.begin(), kDefaultTaus.end(), tau) == kDefaultTaus.end())
            throw Error(ErrorKind::config, "F1 threshold " + std::to_string(tau) + " not in {10, 25, 50}");
    } else if (tau < 0 || tau > 100) {
        throw Error(ErrorKind::config, "F1 threshold " + std::to_string(tau) + " outside [0, 100]");
    }
}

}  // namespace

SegmentCounts segment_counts(const ActionSequence& pred, const ActionSequence& gt, int tau, F1Options opts) {
    check_tau(tau, opts);
    const auto& gsegs = gt.segments();
    std::vector<bool> claimed(gsegs.size(), false);
    SegmentCounts counts;

    for (const auto& p : pred.segments()) {
        std::size_t best = gsegs.size();
        FrameIndex best_inter = 0, best_union = 1;
        for (std::size_t j = 0; j < gsegs.size(); ++j) {
            const auto& g = gsegs[j];
            if (claimed[j] || g.label != p.label) continue;
            const auto inter = std::max<FrameIndex>(
                0, std::min(p.span.end_frame, g.span.end_frame) - std::max(p.span.start_frame, g.span.start_frame));
            const auto uni = std::max(p.span.end_frame, g.span.end_frame) - std::min(p.span.start_frame, g.span.start_frame);
            // inter/uni > best_inter/best_union; strict so the earlier segment keeps ties
            if (best == gsegs.size() || inter * best_union > best_inter * uni) {
                best = j;
                best_inter = inter;
                best_union = uni;
            }
        }
        bool hit = false;
        if (best < gsegs.size() && best_inter > 0) {
            const auto lhs = best_inter * 100;
            const auto rhs = static_cast<FrameIndex>(tau) * best_union;
            hit = opts.rule == IouRule::exceeds ? lhs > rhs : lhs >= rhs;
        }
        if (hit) {
            ++counts.tp;
            claimed[best] = true;
        } else {
            ++counts.fp;
        }
    }
    counts.fn = static_cast<std::size_t>(std::count(claimed.begin(), claimed.end(), false));
    return counts;
}

double f1_at_tau(const ActionSequence& pred, const ActionSequence& gt, int tau, F1Options opts) {
    return segment_counts(pred, gt, tau, opts).f1();
}

namespace {

FrameIndex matched_frames(const ActionSequence& pred, const ActionSequence& gt) {
    FrameIndex hits = 0;
    const auto& a = pred.segments();
    const auto& b = gt.segments();
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const auto lo = std::max(a[i].span.start_frame, b[j].span.start_frame);
        const auto hi = std::min(a[i].span.end_frame, b[j].span.end_frame);
        if (a[i].label == b[j].label && hi > lo) hits += hi - lo;
        if (a[i].span.end_frame < b[j].span.end_frame) {
            ++i;
        } else if (b[j].span.end_frame < a[i].span.end_frame) {
            ++j;
        } else {
            ++i;
            ++j;
        }
    }
    return hits;
}

}  // namespace

SegWindowResult evaluate_window(const ActionSequence& pred, const ActionSequence& gt, F1Options opts) {
    if (pred.length() != gt.length())
        throw Error(ErrorKind::data, "student '" + gt.student_id() + "': prediction covers " +
                                         std::to_string(pred.length()) + " frames, ground truth " +
                                         std::to_string(gt.length()));
    if (gt.length() == 0) throw Error(ErrorKind::data, "cannot evaluate an empty window");
    SegWindowResult r;
    r.total_frames = gt.length();
    r.matched_frames = matched_frames(pred, gt);
    r.report.mof = 100.0 * static_cast<double>(r.matched_frames) / static_cast<double>(r.total_frames);
    r.report.edit = edit_score(pred, gt);
    for (int tau : kDefaultTaus) {
        r.counts[tau] = segment_counts(pred, gt, tau, opts);
        r.report.f1_at[tau] = r.counts[tau].f1();
    }
    return r;
}

SegAggregate aggregate(std::span<const SegWindowResult> results) {
    SegAggregate agg;
    agg.windows = results.size();
    if (results.empty()) return agg;

    FrameIndex matched = 0, total = 0;
    std::map<int, SegmentCounts> pooled_counts;
    double edit_sum = 0.0, mof_sum = 0.0;
    std::map<int, double> f1_sum;
    for (const auto& r : results) {
        matched += r.matched_frames;
        total += r.total_frames;
        edit_sum += r.report.edit;
        mof_sum += r.report.mof;
        for (const auto& [tau, c] : r.counts) pooled_counts[tau] += c;
        for (const auto& [tau, f] : r.report.f1_at) f1_sum[tau] += f;
    }
    const double n = static_cast<double>(results.size());
    agg.pooled.mof = 100.0 * static_cast<double>(matched) / static_cast<double>(total);
    agg.pooled.edit = edit_sum / n;
    for (const auto& [tau, c] : pooled_counts) agg.pooled.f1_at[tau] = c.f1();
    agg.mean.mof = mof_sum / n;
    agg.mean.edit = edit_sum / n;
    for (const auto& [tau, s] : f1_sum) agg.mean.f1_at[tau] = s / n;
    return agg;
}

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t predicted, std::size_t actual) {
    ClassMetrics m;
    m.support = actual;
    m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

}  // namespace

ClsEvalReport classification_report(std::span<const Engagement> preds, std::span<const Engagement> gts) {
    if (preds.size() != gts.size())
        throw Error(ErrorKind::data, std::to_string(preds.size()) + " predictions for " + std::to_string(gts.size()) +
                                         " ground-truth labels");
    if (gts.empty()) throw Error(ErrorKind::data, "classification report needs at least one labeled window");

    std::size_t tp_e = 0, tp_d = 0, pred_e = 0, pred_d = 0, gt_e = 0, gt_d = 0;
    for (std::size_t i = 0; i < gts.size(); ++i) {
        const bool pe = preds[i] == Engagement::engaged;
        const bool ge = gts[i] == Engagement::engaged;
        pred_e += pe;
        pred_d += !pe;
        gt_e += ge;
        gt_d += !ge;
        tp_e += pe && ge;
        tp_d += !pe && !ge;
    }
    ClsEvalReport r;
    r.total = gts.size();
    r.engaged = class_metrics(tp_e, pred_e, gt_e);
    r.disengaged = class_metrics(tp_d, pred_d, gt_d);
    const double n = static_cast<double>(r.total);
    const double we = static_cast<double>(gt_e) / n, wd = static_cast<double>(gt_d) / n;
    r.weighted.precision = we * r.engaged.precision + wd * r.disengaged.precision;
    r.weighted.recall = we * r.engaged.recall + wd * r.disengaged.recall;
    r.weighted.f1 = we * r.engaged.f1 + wd * r.disengaged.f1;
    r.weighted.support = r.total;
    r.accuracy = static_cast<double>(tp_e + tp_d) / n;
    return r;
}

}  // namespace classengage
