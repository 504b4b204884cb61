// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <numeric>

namespace classengage {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::data: return "data";
        case ErrorKind::schema: return "schema";
        case ErrorKind::contiguity: return "contiguity";
        case ErrorKind::dictionary_mismatch: return "dictionary_mismatch";
        case ErrorKind::context_unavailable: return "context_unavailable";
        case ErrorKind::context_required: return "context_required";
        case ErrorKind::degenerate_embedding: return "degenerate_embedding";
        case ErrorKind::recognition: return "recognition";
        case ErrorKind::transport: return "transport";
        case ErrorKind::verdict_parse: return "verdict_parse";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::transport:
        case ErrorKind::recognition: return 2;
        case ErrorKind::verdict_parse: return 3;
        default: return 1;
    }
}

// ---------------------------------------------------------------------------
// Rational / time arithmetic

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0 || num <= 0 || den < 0)
        throw Error(ErrorKind::data, "rational must be positive: " + std::to_string(n) + "/" + std::to_string(d));
    const auto g = std::gcd(num, den);
    num /= g;
    den /= g;
}

std::string Rational::str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

namespace {

std::int64_t parse_int(std::string_view text, std::string_view what) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    std::int64_t value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty())
        throw Error(ErrorKind::data, "malformed " + std::string(what) + ": '" + std::string(text) + "'");
    return value;
}

}  // namespace

Rational Rational::parse(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(parse_int(text, "rational"));
    return Rational(parse_int(text.substr(0, slash), "rational"), parse_int(text.substr(slash + 1), "rational"));
}

Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num * b.num, a.den * b.den);
}

FrameIndex frames_in(Rational seconds, Rational fps) {
    return (seconds.num * fps.num) / (seconds.den * fps.den);
}

std::int64_t floor_seconds(FrameIndex frame, Rational fps) {
    return (frame * fps.den) / fps.num;
}

FrameIndex first_frame_at(std::int64_t seconds, Rational fps) {
    return (seconds * fps.num + fps.den - 1) / fps.den;
}

std::string render_timestamp(FrameIndex frame, Rational fps) {
    const auto s = floor_seconds(frame, fps);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02lld:%02lld", static_cast<long long>(s / 60), static_cast<long long>(s % 60));
    return buf;
}

std::int64_t parse_timestamp(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos || colon < 2 || text.size() - colon - 1 != 2)
        throw Error(ErrorKind::data, "malformed mm:ss timestamp: '" + std::string(text) + "'");
    for (char c : text)
        if (c != ':' && !std::isdigit(static_cast<unsigned char>(c)))
            throw Error(ErrorKind::data, "malformed mm:ss timestamp: '" + std::string(text) + "'");
    const auto minutes = parse_int(text.substr(0, colon), "minutes");
    const auto seconds = parse_int(text.substr(colon + 1), "seconds");
    if (seconds >= 60) throw Error(ErrorKind::data, "seconds out of range in '" + std::string(text) + "'");
    return minutes * 60 + seconds;
}

// ---------------------------------------------------------------------------
// Dictionary

std::string normalize_label_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (char c : name) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

ActionDictionary::ActionDictionary(std::vector<std::string> names, std::vector<MergeGroup> merge_groups)
    : groups_(std::move(merge_groups)) {
    labels_.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto norm = normalize_label_name(names[i]);
        if (norm.empty()) throw Error(ErrorKind::data, "empty action name at index " + std::to_string(i));
        const auto id = static_cast<LabelId>(i);
        if (!index_.emplace(norm, id).second) throw Error(ErrorKind::data, "duplicate action name '" + norm + "'");
        labels_.push_back({id, std::move(norm)});
    }

    std::vector<bool> claimed(labels_.size(), false);
    for (auto& group : groups_) {
        group.name = normalize_label_name(group.name);
        if (group.name.empty()) throw Error(ErrorKind::data, "merge group without a name");
        if (group.members.empty()) throw Error(ErrorKind::data, "merge group '" + group.name + "' has no members");
        std::sort(group.members.begin(), group.members.end());
        for (auto id : group.members) {
            if (!contains(id))
                throw Error(ErrorKind::dictionary_mismatch,
                            "merge group '" + group.name + "' references unknown label id " + std::to_string(id));
            if (claimed[id])
                throw Error(ErrorKind::data, "label '" + labels_[id].name + "' appears in more than one merge group");
            claimed[id] = true;
        }
    }
}

const std::string& ActionDictionary::name(LabelId id) const {
    if (!contains(id)) throw Error(ErrorKind::dictionary_mismatch, "unknown label id " + std::to_string(id));
    return labels_[id].name;
}

std::optional<LabelId> ActionDictionary::find(std::string_view name) const {
    const auto it = index_.find(normalize_label_name(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

LabelId ActionDictionary::id_of(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw Error(ErrorKind::dictionary_mismatch, "unknown action '" + std::string(name) + "'");
}

std::vector<std::string> ActionDictionary::names() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (const auto& l : labels_) out.push_back(l.name);
    return out;
}

std::vector<LabelId> ActionDictionary::merge_map() const {
    std::vector<int> group_of(labels_.size(), -1);
    for (std::size_t g = 0; g < groups_.size(); ++g)
        for (auto id : groups_[g].members) group_of[id] = static_cast<int>(g);

    std::vector<LabelId> map(labels_.size(), -1);
    std::vector<LabelId> group_id(groups_.size(), -1);
    LabelId next = 0;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const int g = group_of[i];
        if (g < 0) {
            map[i] = next++;
        } else {
            if (group_id[g] < 0) group_id[g] = next++;
            map[i] = group_id[g];
        }
    }
    return map;
}

ActionDictionary ActionDictionary::merged() const {
    if (groups_.empty()) return ActionDictionary(names());
    std::vector<int> group_of(labels_.size(), -1);
    for (std::size_t g = 0; g < groups_.size(); ++g)
        for (auto id : groups_[g].members) group_of[id] = static_cast<int>(g);

    std::vector<std::string> out;
    std::vector<bool> emitted(groups_.size(), false);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const int g = group_of[i];
        if (g < 0) {
            out.push_back(labels_[i].name);
        } else if (!emitted[g]) {
            emitted[g] = true;
            out.push_back(groups_[g].name);
        }
    }
    return ActionDictionary(std::move(out));
}

bool operator==(const ActionDictionary& a, const ActionDictionary& b) {
    if (a.size() != b.size() || a.groups_.size() != b.groups_.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.labels_[i].name != b.labels_[i].name) return false;
    for (std::size_t g = 0; g < a.groups_.size(); ++g)
        if (a.groups_[g].name != b.groups_[g].name || a.groups_[g].members != b.groups_[g].members) return false;
    return true;
}

ActionDictionary default_dictionary() {
    return ActionDictionary({
        "eating meal/snack",
        "writing on notebook/tablet",
        "typing on a laptop",
        "playing with mobile phone",
        "looking to the side/back",
        "looking down w/o reading/writing",
        "looking at laptop screen (not typing)",
        "raising hand",
        "rubbing face",
        "reading",
        "drinking",
        "yawning",
        "listening",
    });
}

// ---------------------------------------------------------------------------
// Sequences

std::vector<ActionSegment> fuse_segments(std::span<const ActionSegment> segments) {
    std::vector<ActionSegment> out;
    out.reserve(segments.size());
    for (const auto& seg : segments) {
        if (!out.empty() && out.back().label == seg.label && out.back().span.end_frame == seg.span.start_frame) {
            out.back().span.end_frame = seg.span.end_frame;
        } else {
            out.push_back(seg);
        }
    }
    return out;
}

ActionSequence ActionSequence::make(std::string student_id, Rational fps, std::vector<ActionSegment> segments) {
    FrameIndex cursor = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto& seg = segments[i];
        seg.span.fps = fps;
        if (seg.span.start_frame != cursor) {
            throw Error(ErrorKind::contiguity,
                        "student '" + student_id + "': segment " + std::to_string(i) + " starts at frame " +
                            std::to_string(seg.span.start_frame) + " but previous segment ends at frame " +
                            std::to_string(cursor));
        }
        if (seg.span.end_frame <= seg.span.start_frame) {
            throw Error(ErrorKind::contiguity, "student '" + student_id + "': empty segment at frame " +
                                                   std::to_string(seg.span.start_frame));
        }
        if (seg.label < 0)
            throw Error(ErrorKind::dictionary_mismatch, "student '" + student_id + "': negative label id");
        cursor = seg.span.end_frame;
    }
    ActionSequence seq;
    seq.student_id_ = std::move(student_id);
    seq.fps_ = fps;
    seq.segments_ = fuse_segments(segments);
    return seq;
}

ActionSequence ActionSequence::from_triples(std::string student_id, Rational fps,
                                            std::span<const std::array<FrameIndex, 3>> triples) {
    std::vector<ActionSegment> segs;
    segs.reserve(triples.size());
    for (const auto& t : triples) segs.push_back({static_cast<LabelId>(t[0]), {t[1], t[2], fps}});
    return make(std::move(student_id), fps, std::move(segs));
}

std::vector<LabelId> ActionSequence::label_order() const {
    std::vector<LabelId> out;
    out.reserve(segments_.size());
    for (const auto& s : segments_) out.push_back(s.label);
    return out;
}

LabelId ActionSequence::label_at(FrameIndex frame) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), frame,
                               [](FrameIndex f, const ActionSegment& s) { return f < s.span.end_frame; });
    if (it == segments_.end() || frame < 0)
        throw Error(ErrorKind::data, "frame " + std::to_string(frame) + " outside sequence of student '" + student_id_ + "'");
    return it->label;
}

ActionSequence ActionSequence::slice(FrameIndex begin, FrameIndex end) const {
    if (begin < 0 || end > length() || begin >= end)
        throw Error(ErrorKind::data, "slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                         ") outside sequence of length " + std::to_string(length()));
    std::vector<ActionSegment> out;
    for (const auto& s : segments_) {
        const auto lo = std::max(begin, s.span.start_frame);
        const auto hi = std::min(end, s.span.end_frame);
        if (lo < hi) out.push_back({s.label, {lo - begin, hi - begin, fps_}});
    }
    return make(student_id_, fps_, std::move(out));
}

ActionSequence ActionSequence::with_student(std::string student_id) const {
    ActionSequence copy = *this;
    copy.student_id_ = std::move(student_id);
    return copy;
}

FrameLabelStream to_frames(const ActionSequence& seq) {
    FrameLabelStream stream{seq.student_id(), seq.fps(), {}};
    stream.labels.reserve(static_cast<std::size_t>(seq.length()));
    for (const auto& s : seq.segments()) stream.labels.insert(stream.labels.end(), static_cast<std::size_t>(s.span.length()), s.label);
    return stream;
}

ActionSequence from_frames(const FrameLabelStream& stream) {
    std::vector<ActionSegment> segs;
    for (FrameIndex f = 0; f < stream.size(); ++f) {
        const auto label = stream.labels[static_cast<std::size_t>(f)];
        if (!segs.empty() && segs.back().label == label) {
            segs.back().span.end_frame = f + 1;
        } else {
            segs.push_back({label, {f, f + 1, stream.fps}});
        }
    }
    return ActionSequence::make(stream.student_id, stream.fps, std::move(segs));
}

void check_labels(const ActionSequence& seq, const ActionDictionary& dict) {
    for (const auto& s : seq.segments())
        if (!dict.contains(s.label))
            throw Error(ErrorKind::dictionary_mismatch, "student '" + seq.student_id() + "': label id " +
                                                            std::to_string(s.label) + " at frame " +
                                                            std::to_string(s.span.start_frame) + " not in dictionary");
}

void check_labels(const FrameLabelStream& stream, const ActionDictionary& dict) {
    for (std::size_t f = 0; f < stream.labels.size(); ++f)
        if (!dict.contains(stream.labels[f]))
            throw Error(ErrorKind::dictionary_mismatch, "student '" + stream.student_id + "': label id " +
                                                            std::to_string(stream.labels[f]) + " at frame " +
                                                            std::to_string(f) + " not in dictionary");
}

ActionSequence apply_merge(const ActionSequence& seq, const ActionDictionary& dict) {
    check_labels(seq, dict);
    const auto map = dict.merge_map();
    std::vector<ActionSegment> out;
    out.reserve(seq.size());
    for (const auto& s : seq.segments()) out.push_back({map[s.label], s.span});
    return ActionSequence::make(seq.student_id(), seq.fps(), std::move(out));
}

// ---------------------------------------------------------------------------
// Engagement / windows

const char* to_string(Engagement e) noexcept {
    return e == Engagement::engaged ? "engaged" : "disengaged";
}

std::optional<Engagement> parse_engagement(std::string_view text) {
    const auto norm = normalize_label_name(text);
    if (norm == "engaged") return Engagement::engaged;
    if (norm == "disengaged") return Engagement::disengaged;
    return std::nullopt;
}

void validate_window(const ClassroomWindow& window) {
    const auto& t = window.target;
    for (const auto& p : window.peers) {
        if (p.fps() != t.fps() || p.length() != t.length())
            throw Error(ErrorKind::data, "window '" + window.window_id + "': peer '" + p.student_id() +
                                             "' does not share fps and length with target '" + t.student_id() + "'");
        if (p.student_id() == t.student_id())
            throw Error(ErrorKind::data, "window '" + window.window_id + "': target '" + t.student_id() +
                                             "' listed among its own peers");
    }
}

}  // namespace classengage
