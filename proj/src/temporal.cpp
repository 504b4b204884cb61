// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/temporal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "classengage/concurrency.hpp"
#include "classengage/kernels.hpp"

namespace classengage {

std::vector<TimeSpan> split_windows(FrameIndex num_frames, Rational fps, const WindowingConfig& cfg) {
    if (num_frames <= 0) throw Error(ErrorKind::data, "cannot split a zero-length stream");
    const auto seg = frames_in(cfg.segment_seconds, fps);
    if (seg <= 0)
        throw Error(ErrorKind::config, "segment length " + cfg.segment_seconds.str() + " s is shorter than one frame at " +
                                           fps.str() + " fps");
    std::vector<TimeSpan> spans;
    spans.reserve(static_cast<std::size_t>((num_frames + seg - 1) / seg));
    for (FrameIndex start = 0; start < num_frames; start += seg) spans.push_back({start, std::min(start + seg, num_frames), fps});
    return spans;
}

std::vector<TimeSpan> split_windows(const FrameLabelStream& stream, const WindowingConfig& cfg) {
    return split_windows(stream.size(), stream.fps, cfg);
}

std::vector<FrameIndex> sample_clip_frames(const TimeSpan& span, int count) {
    if (count <= 0) throw Error(ErrorKind::config, "frames_per_clip must be positive");
    std::vector<FrameIndex> out(static_cast<std::size_t>(count));
    const auto len = span.length();
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = span.start_frame + ((2 * i + 1) * len) / (2 * count);
    return out;
}

RecognizerVerdict verdict_from_scores(std::vector<double> scores) {
    if (scores.empty()) throw Error(ErrorKind::data, "empty score vector");
    double sum = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0) throw Error(ErrorKind::data, "score vector has a negative or non-finite entry");
        sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorKind::data, "scores sum to " + std::to_string(sum) + ", expected 1");
    const auto best = std::max_element(scores.begin(), scores.end());  // first maximum = lowest id
    return {static_cast<LabelId>(best - scores.begin()), std::move(scores)};
}

// ---------------------------------------------------------------------------

OracleRecognizer::OracleRecognizer(std::vector<FrameLabelStream> ground_truth) {
    for (auto& s : ground_truth) {
        auto id = s.student_id;
        tracks_.emplace(std::move(id), std::move(s));
    }
}

RecognizerVerdict OracleRecognizer::recognize(const ClipRequest& clip) {
    const auto it = tracks_.find(clip.student_id);
    if (it == tracks_.end()) throw Error(ErrorKind::data, "oracle has no ground truth for student '" + clip.student_id + "'");
    const auto& labels = it->second.labels;
    if (clip.span.start_frame < 0 || clip.span.end_frame > it->second.size() || clip.span.length() <= 0)
        throw Error(ErrorKind::data, "oracle span outside ground truth of student '" + clip.student_id + "'");

    std::map<LabelId, FrameIndex> counts;
    for (auto f = clip.span.start_frame; f < clip.span.end_frame; ++f) ++counts[labels[static_cast<std::size_t>(f)]];
    LabelId best = counts.begin()->first;
    FrameIndex best_count = 0;
    for (const auto& [label, n] : counts) {
        if (n > best_count) {
            best = label;
            best_count = n;
        }
    }
    return {best, {}};
}

std::vector<RecognizerVerdict> recognize_segments(std::span<const TimeSpan> spans, RecognizerPort& recognizer,
                                                  const std::string& student_id, const WindowingConfig& cfg,
                                                  FrameIndex frame_offset) {
    std::vector<RecognizerVerdict> verdicts(spans.size());
    std::vector<std::string> failures(spans.size());

    bounded_for(spans.size(), static_cast<std::size_t>(std::max(1, cfg.max_in_flight)), [&](std::size_t i) {
        ClipRequest clip;
        clip.student_id = student_id;
        clip.span = spans[i];
        clip.span.start_frame += frame_offset;
        clip.span.end_frame += frame_offset;
        clip.request_id = student_id + "@" + std::to_string(clip.span.start_frame);
        try {
            clip.frame_indices = sample_clip_frames(clip.span, cfg.frames_per_clip);
        } catch (const std::exception& e) {
            failures[i] = e.what();
            return;
        }

        const int attempts = std::max(1, cfg.max_attempts);
        for (int attempt = 1; attempt <= attempts; ++attempt) {
            try {
                verdicts[i] = recognizer.recognize(clip);
                failures[i].clear();
                return;
            } catch (const TransportError& e) {
                failures[i] = e.what();
                if (!e.transient() || attempt == attempts) return;
                std::this_thread::sleep_for(std::chrono::milliseconds(10) * (1 << (attempt - 1)));
            } catch (const std::exception& e) {
                failures[i] = e.what();
                return;
            }
        }
    });

    std::string report;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (failures[i].empty()) continue;
        ++failed;
        if (failed <= 5) report += "; span " + std::to_string(i) + ": " + failures[i];
    }
    if (failed > 0)
        throw Error(ErrorKind::recognition, "student '" + student_id + "': " + std::to_string(failed) + " of " +
                                                std::to_string(spans.size()) + " segments failed" + report);
    return verdicts;
}

ActionSequence merge_verdicts(std::span<const TimeSpan> spans, std::span<const RecognizerVerdict> verdicts,
                              const std::string& student_id) {
    if (spans.size() != verdicts.size())
        throw Error(ErrorKind::data, "merge_verdicts: " + std::to_string(spans.size()) + " spans but " +
                                         std::to_string(verdicts.size()) + " verdicts");
    if (spans.empty()) throw Error(ErrorKind::data, "merge_verdicts: no spans");
    std::vector<ActionSegment> segs;
    segs.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) segs.push_back({verdicts[i].label, spans[i]});
    return ActionSequence::make(student_id, spans.front().fps, std::move(segs));
}

// ---------------------------------------------------------------------------

ActionSequence ContextTimeline::as_sequence() const {
    return ActionSequence::make("context", fps, segments);
}

ContextTimeline aggregate_context(const ClassroomWindow& window, Rational bin_seconds) {
    if (window.peers.empty())
        throw Error(ErrorKind::context_unavailable, "window '" + window.window_id + "' has no peers for context");
    validate_window(window);

    const auto fps = window.target.fps();
    const auto len = window.target.length();
    const auto bin = std::max<FrameIndex>(1, frames_in(bin_seconds, fps));

    int num_labels = 0;
    for (const auto& p : window.peers)
        for (const auto& s : p.segments()) num_labels = std::max(num_labels, s.label + 1);

    const auto grid = kernels::make_grid(window.peers);
    const auto modes = kernels::parallel::bin_modes(grid, bin, num_labels);

    std::vector<ActionSegment> segs;
    segs.reserve(modes.size());
    for (std::size_t b = 0; b < modes.size(); ++b) {
        const auto start = static_cast<FrameIndex>(b) * bin;
        segs.push_back({modes[b], {start, std::min(start + bin, len), fps}});
    }
    return {fps, fuse_segments(segs)};
}

// ---------------------------------------------------------------------------

double ActionHistogram::seconds(LabelId label) const {
    const auto it = frames.find(label);
    return it == frames.end() ? 0.0 : static_cast<double>(it->second) / fps.value();
}

FrameIndex ActionHistogram::total_frames() const {
    FrameIndex total = 0;
    for (const auto& [label, n] : frames) total += n;
    return total;
}

ActionHistogram to_histogram(std::span<const ActionSegment> segments, Rational fps) {
    ActionHistogram h{fps, {}};
    for (const auto& s : segments) h.frames[s.label] += s.span.length();
    return h;
}

ActionHistogram to_histogram(const ActionSequence& seq) {
    return to_histogram(seq.segments(), seq.fps());
}

namespace {

std::string render_segments(std::span<const ActionSegment> segments, Rational fps, const ActionDictionary& dict) {
    std::string out;
    for (const auto& s : segments) {
        if (!out.empty()) out += "; ";
        out += dict.name(s.label);
        out += " (";
        out += render_timestamp(s.span.start_frame, fps);
        out += '-';
        out += render_timestamp(s.span.end_frame, fps);
        out += ')';
    }
    return out;
}

}  // namespace

std::string render_sequence_text(const ActionSequence& seq, const ActionDictionary& dict) {
    return render_segments(seq.segments(), seq.fps(), dict);
}

std::string render_sequence_text(const ContextTimeline& context, const ActionDictionary& dict) {
    return render_segments(context.segments, context.fps, dict);
}

std::string render_histogram_text(const ActionHistogram& hist, const ActionDictionary& dict) {
    std::string out;
    for (const auto& [label, n] : hist.frames) {
        if (n <= 0) continue;
        if (!out.empty()) out += "; ";
        out += dict.name(label);
        out += ": ";
        out += render_timestamp(n, hist.fps);
    }
    return out;
}

}  // namespace classengage
