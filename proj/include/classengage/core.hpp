// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "classengage/error.hpp"

namespace classengage {

using LabelId = int;
using FrameIndex = std::int64_t;

/**
 * @brief Positive rational number, kept in lowest terms.
 *
 * Used for frame rates (15, 30000/1001) and durations in seconds so that
 * frame arithmetic stays exact.
 */
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    bool integral() const noexcept { return den == 1; }

    /// "15" or "30000/1001".
    std::string str() const;
    static Rational parse(std::string_view text);

    friend bool operator==(const Rational&, const Rational&) = default;
};

Rational operator*(const Rational& a, const Rational& b);

/// floor(seconds * fps), the number of whole frames in a duration.
FrameIndex frames_in(Rational seconds, Rational fps);
/// floor(frame / fps), the whole second a frame falls in.
std::int64_t floor_seconds(FrameIndex frame, Rational fps);
/// ceil(seconds * fps), the first frame at or after a second boundary.
FrameIndex first_frame_at(std::int64_t seconds, Rational fps);

/// "mm:ss" for the second containing `frame`. Minutes widen past 99.
std::string render_timestamp(FrameIndex frame, Rational fps);
/// Inverse of render_timestamp at second resolution. Throws Error(data) on malformed input.
std::int64_t parse_timestamp(std::string_view text);

struct ActionLabel {
    LabelId id = 0;
    std::string name;
};

/// Several labels presented as one class (e.g. writing + reading).
struct MergeGroup {
    std::string name;
    std::vector<LabelId> members;
};

/// Lowercases and collapses runs of whitespace; label lookup is done on this form.
std::string normalize_label_name(std::string_view name);

/**
 * @brief Closed vocabulary of actions with optional merge groups.
 *
 * Ids are dense 0..size()-1 in list order. Merge groups are disjoint; labels
 * not in any group map to themselves.
 */
class ActionDictionary {
public:
    ActionDictionary() = default;
    explicit ActionDictionary(std::vector<std::string> names, std::vector<MergeGroup> merge_groups = {});

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<ActionLabel>& labels() const noexcept { return labels_; }
    const std::vector<MergeGroup>& merge_groups() const noexcept { return groups_; }
    bool has_merge_groups() const noexcept { return !groups_.empty(); }

    bool contains(LabelId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < labels_.size(); }
    const std::string& name(LabelId id) const;
    std::optional<LabelId> find(std::string_view name) const;
    /// Like find() but throws Error(dictionary_mismatch).
    LabelId id_of(std::string_view name) const;
    std::vector<std::string> names() const;

    /// Dictionary after merging: every group collapses into one label placed at its lowest member's position.
    ActionDictionary merged() const;
    /// Maps each id of this dictionary to its id in merged(). Identity without merge groups.
    std::vector<LabelId> merge_map() const;

    friend bool operator==(const ActionDictionary& a, const ActionDictionary& b);

private:
    std::vector<ActionLabel> labels_;
    std::vector<MergeGroup> groups_;
    std::unordered_map<std::string, LabelId> index_;
};

/// The 13 classroom actions, ids 0..12.
ActionDictionary default_dictionary();

/// Half-open frame interval [start_frame, end_frame).
struct TimeSpan {
    FrameIndex start_frame = 0;
    FrameIndex end_frame = 0;
    Rational fps{15};

    FrameIndex length() const noexcept { return end_frame - start_frame; }
    double seconds() const noexcept { return static_cast<double>(length()) / fps.value(); }

    friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

struct ActionSegment {
    LabelId label = 0;
    TimeSpan span;

    friend bool operator==(const ActionSegment&, const ActionSegment&) = default;
};

/// Dense per-frame labels for one student over a window.
struct FrameLabelStream {
    std::string student_id;
    Rational fps{15};
    std::vector<LabelId> labels;

    FrameIndex size() const noexcept { return static_cast<FrameIndex>(labels.size()); }

    friend bool operator==(const FrameLabelStream&, const FrameLabelStream&) = default;
};

/// Fuses adjacent segments that share a label. Input must be contiguous.
std::vector<ActionSegment> fuse_segments(std::span<const ActionSegment> segments);

/**
 * @brief Ordered, contiguous, fully fused segments starting at frame 0.
 *
 * Construct through make(), which fuses and validates.
 */
class ActionSequence {
public:
    ActionSequence() = default;

    /// Fuses then validates; throws Error(contiguity) on gaps, overlaps or a non-zero start.
    static ActionSequence make(std::string student_id, Rational fps, std::vector<ActionSegment> segments);
    /// Segments given as (label, start, end) triples.
    static ActionSequence from_triples(std::string student_id, Rational fps,
                                       std::span<const std::array<FrameIndex, 3>> triples);

    const std::string& student_id() const noexcept { return student_id_; }
    Rational fps() const noexcept { return fps_; }
    const std::vector<ActionSegment>& segments() const noexcept { return segments_; }
    std::size_t size() const noexcept { return segments_.size(); }
    bool empty() const noexcept { return segments_.empty(); }
    FrameIndex length() const noexcept { return segments_.empty() ? 0 : segments_.back().span.end_frame; }
    std::vector<LabelId> label_order() const;

    /// Label active at `frame`; frame must lie inside the sequence.
    LabelId label_at(FrameIndex frame) const;

    /// Frames [begin, end) rebased to start at 0.
    ActionSequence slice(FrameIndex begin, FrameIndex end) const;
    ActionSequence with_student(std::string student_id) const;

    friend bool operator==(const ActionSequence&, const ActionSequence&) = default;

private:
    std::string student_id_;
    Rational fps_{15};
    std::vector<ActionSegment> segments_;
};

FrameLabelStream to_frames(const ActionSequence& seq);
ActionSequence from_frames(const FrameLabelStream& stream);

/// Throws Error(dictionary_mismatch) if any label is outside `dict`.
void check_labels(const ActionSequence& seq, const ActionDictionary& dict);
void check_labels(const FrameLabelStream& stream, const ActionDictionary& dict);

/// Remaps labels through dict.merge_map() and re-fuses. The result is expressed in dict.merged() ids.
ActionSequence apply_merge(const ActionSequence& seq, const ActionDictionary& dict);

enum class Engagement { engaged, disengaged };

const char* to_string(Engagement e) noexcept;
std::optional<Engagement> parse_engagement(std::string_view text);

/// One target student over one analysis window, with the peers seen alongside.
struct ClassroomWindow {
    std::string window_id;
    ActionSequence target;
    std::vector<ActionSequence> peers;
    std::optional<Engagement> engagement_gt;
    /// Shorter than the configured window length (trailing remainder of a lecture).
    bool partial = false;
};

/// Throws Error(data) if members disagree on fps or length, or the target appears among the peers.
void validate_window(const ClassroomWindow& window);

}  // namespace classengage
