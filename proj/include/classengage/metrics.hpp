// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>

#include "classengage/core.hpp"

namespace classengage {

/// Overlap thresholds reported for F1@tau, in percent.
inline constexpr std::array<int, 3> kDefaultTaus{10, 25, 50};

/// Percentage of frames whose predicted label equals ground truth. Throws Error(data) on length mismatch.
double mof(const FrameLabelStream& pred, const FrameLabelStream& gt);

std::size_t levenshtein(std::span<const LabelId> a, std::span<const LabelId> b);

/// 100 * (1 - lev(pred, gt) / max(|pred|, |gt|)) over segment label orders, clamped at 0.
double edit_score(const ActionSequence& pred, const ActionSequence& gt);

enum class IouRule {
    exceeds,   ///< IoU > tau (default)
    at_least,  ///< IoU >= tau
};

struct F1Options {
    IouRule rule = IouRule::exceeds;
    /// Reject tau outside kDefaultTaus.
    bool restrict_taus = true;
};

struct SegmentCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    SegmentCounts& operator+=(const SegmentCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    /// 2TP / (2TP + FP + FN) in percent; 100 when all counts are zero.
    double f1() const noexcept;

    friend bool operator==(const SegmentCounts&, const SegmentCounts&) = default;
};

/**
 * Segment matching for F1@tau. Predicted segments are visited in temporal order; each is
 * matched to the unclaimed same-label ground-truth segment of largest IoU (earlier start
 * wins ties). A match whose IoU passes tau is a TP and claims the ground-truth segment;
 * anything else is a FP. Unclaimed ground-truth segments are FN.
 */
SegmentCounts segment_counts(const ActionSequence& pred, const ActionSequence& gt, int tau, F1Options opts = {});
double f1_at_tau(const ActionSequence& pred, const ActionSequence& gt, int tau, F1Options opts = {});

struct SegEvalReport {
    double mof = 0.0;
    double edit = 0.0;
    std::map<int, double> f1_at;
};

/// Everything needed to pool one window into micro averages.
struct SegWindowResult {
    SegEvalReport report;
    std::map<int, SegmentCounts> counts;
    FrameIndex matched_frames = 0;
    FrameIndex total_frames = 0;
};

SegWindowResult evaluate_window(const ActionSequence& pred, const ActionSequence& gt, F1Options opts = {});

struct SegAggregate {
    SegEvalReport pooled;  ///< MoF over all frames, F1 from summed TP/FP/FN, mean Edit
    SegEvalReport mean;    ///< unweighted mean of per-window reports
    std::size_t windows = 0;
};

SegAggregate aggregate(std::span<const SegWindowResult> results);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct ClsEvalReport {
    ClassMetrics engaged;
    ClassMetrics disengaged;
    ClassMetrics weighted;  ///< support-weighted means
    double accuracy = 0.0;
    std::size_t total = 0;
};

/// Empty denominators yield 0. Throws Error(data) on empty or mismatched input.
ClsEvalReport classification_report(std::span<const Engagement> preds, std::span<const Engagement> gts);

}  // namespace classengage
