// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "classengage/core.hpp"

namespace classengage {

struct WindowingConfig {
    /// Length of each non-overlapping segment handed to the recognizer.
    Rational segment_seconds{5};
    /// Frames sampled uniformly from each segment (with repetition when the segment is shorter).
    int frames_per_clip = 32;
    /// Concurrent recognizer calls per window.
    int max_in_flight = 4;
    /// Attempts per segment on transient transport failures.
    int max_attempts = 3;
};

/// Contiguous spans of segment_seconds covering [0, num_frames); the last may be shorter.
std::vector<TimeSpan> split_windows(FrameIndex num_frames, Rational fps, const WindowingConfig& cfg);
std::vector<TimeSpan> split_windows(const FrameLabelStream& stream, const WindowingConfig& cfg);

/// `count` frame indices spread uniformly over the span (centre of each sub-interval).
std::vector<FrameIndex> sample_clip_frames(const TimeSpan& span, int count);

struct RecognizerVerdict {
    LabelId label = 0;
    /// Per-class probabilities in dictionary order; empty when the recognizer gives only a label.
    std::vector<double> scores;
};

/// Argmax with lowest-index tie-break. Throws Error(data) unless scores are finite,
/// non-negative and sum to 1 within 1e-6.
RecognizerVerdict verdict_from_scores(std::vector<double> scores);

struct ClipRequest {
    std::string request_id;
    std::string student_id;
    /// Absolute frames within the student's session track.
    TimeSpan span;
    std::vector<FrameIndex> frame_indices;
};

/**
 * @brief Segment-level action recognizer.
 *
 * Implementations must be safe to call from several threads at once.
 * Transient failures are reported as TransportError{transient=true}.
 */
class RecognizerPort {
public:
    virtual ~RecognizerPort() = default;
    virtual RecognizerVerdict recognize(const ClipRequest& clip) = 0;
};

/// Answers with the modal ground-truth label of each span (ties to the lowest id).
class OracleRecognizer final : public RecognizerPort {
public:
    explicit OracleRecognizer(std::vector<FrameLabelStream> ground_truth);

    RecognizerVerdict recognize(const ClipRequest& clip) override;

private:
    std::map<std::string, FrameLabelStream> tracks_;
};

/**
 * Recognizes every span of one student's window. Calls run with bounded concurrency and
 * transient failures are retried; verdicts come back in span order. If any span still
 * fails the whole window is rejected with Error(recognition) naming the failed spans.
 */
std::vector<RecognizerVerdict> recognize_segments(std::span<const TimeSpan> spans, RecognizerPort& recognizer,
                                                  const std::string& student_id, const WindowingConfig& cfg,
                                                  FrameIndex frame_offset = 0);

/// Fuses consecutive identical verdicts into a sequence. Spans must be contiguous from frame 0.
ActionSequence merge_verdicts(std::span<const TimeSpan> spans, std::span<const RecognizerVerdict> verdicts,
                              const std::string& student_id);

/// Majority peer action over time, as contiguous fused segments.
struct ContextTimeline {
    Rational fps{15};
    std::vector<ActionSegment> segments;

    FrameIndex length() const noexcept { return segments.empty() ? 0 : segments.back().span.end_frame; }
    ActionSequence as_sequence() const;
};

/**
 * For each bin of bin_seconds, the modal action over all peer frames in that bin;
 * ties go to the lowest label id, adjacent equal bins are fused. The target is never
 * counted. Throws Error(context_unavailable) when the window has no peers.
 */
ContextTimeline aggregate_context(const ClassroomWindow& window, Rational bin_seconds);

/// Time spent in each action, kept in frames so equality is exact.
struct ActionHistogram {
    Rational fps{15};
    std::map<LabelId, FrameIndex> frames;

    double seconds(LabelId label) const;
    FrameIndex total_frames() const;

    friend bool operator==(const ActionHistogram&, const ActionHistogram&) = default;
};

ActionHistogram to_histogram(const ActionSequence& seq);
/// Works on any segment list, fused or not.
ActionHistogram to_histogram(std::span<const ActionSegment> segments, Rational fps);

/// "name (mm:ss-mm:ss); name (mm:ss-mm:ss)".
std::string render_sequence_text(const ActionSequence& seq, const ActionDictionary& dict);
std::string render_sequence_text(const ContextTimeline& context, const ActionDictionary& dict);
/// "name: mm:ss; ..." in dictionary order, zero entries omitted.
std::string render_histogram_text(const ActionHistogram& hist, const ActionDictionary& dict);

}  // namespace classengage
