// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "classengage/core.hpp"
#include "classengage/engagement.hpp"
#include "classengage/fewshot.hpp"
#include "classengage/metrics.hpp"
#include "classengage/temporal.hpp"

namespace classengage {

inline constexpr int kSessionSchemaVersion = 1;

struct WindowAnnotation {
    std::string window_id;
    FrameIndex start_frame = 0;
    /// student_id -> label, nullopt when the window was not rated for that student.
    std::map<std::string, std::optional<Engagement>> engagement;

    friend bool operator==(const WindowAnnotation&, const WindowAnnotation&) = default;
};

/**
 * @brief One annotated session: dictionary, per-student tracks and rated windows.
 *
 * Student tracks cover [0, total_frames()) contiguously; windows start on multiples of
 * the window length.
 */
struct SessionFile {
    int schema_version = kSessionSchemaVersion;
    Rational fps{15};
    Rational window_seconds{120};
    ActionDictionary dictionary;
    std::vector<ActionSequence> students;  ///< sorted by student_id
    std::vector<WindowAnnotation> windows; ///< sorted by start_frame

    FrameIndex window_frames() const { return frames_in(window_seconds, fps); }
    FrameIndex total_frames() const { return students.empty() ? 0 : students.front().length(); }
    const ActionSequence* student(std::string_view id) const;

    friend bool operator==(const SessionFile&, const SessionFile&) = default;
};

/// Checks every cross-field invariant; sorts students and windows. Throws Error(schema/contiguity/...).
void canonicalize(SessionFile& session);

SessionFile parse_session(std::string_view json_text);
/// Canonical JSON: sorted keys, two-space indent, LF, trailing newline.
std::string to_canonical_json(const SessionFile& session);

SessionFile load_session(const std::filesystem::path& path);
void save_session(const std::filesystem::path& path, const SessionFile& session);

/// Regular windows every window_seconds when the file lists none (no engagement labels).
std::vector<WindowAnnotation> effective_windows(const SessionFile& session);

/// One ClassroomWindow per (window, listed student); when a window lists nobody, every student is a target.
std::vector<ClassroomWindow> build_windows(const SessionFile& session);

/// Inverse of render_sequence_text at second resolution. Throws Error(data/dictionary_mismatch/contiguity).
ActionSequence parse_sequence_text(std::string_view text, const ActionDictionary& dict, Rational fps,
                                   std::string student_id = "");

/**
 * Embedding batch text file:
 *   # comments allowed
 *   N C D temperature
 *   label_0 ... label_{N-1}
 *   N lines of D numbers (video embeddings)
 *   C lines of D numbers (class text embeddings)
 */
EmbeddingBatch parse_embedding_batch(std::string_view text);
EmbeddingBatch load_embedding_batch(const std::filesystem::path& path);
std::string format_embedding_batch(const EmbeddingBatch& batch);

// Reports ------------------------------------------------------------------

nlohmann::json to_json(const SegEvalReport& r);
nlohmann::json to_json(const SegmentCounts& c);
nlohmann::json to_json(const ClassMetrics& m);
nlohmann::json to_json(const ClsEvalReport& r);
nlohmann::json to_json(const SegAggregate& a);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

// Scenario generation ------------------------------------------------------

enum class PhaseKind { lecture, peer_discussion, independent_work };

const char* to_string(PhaseKind k) noexcept;
PhaseKind parse_phase_kind(std::string_view s);

struct PhaseSpec {
    PhaseKind kind = PhaseKind::lecture;
    Rational seconds{120};
};

struct PhaseBehavior {
    /// label name -> probability; sums to 1.
    std::map<std::string, double> propensities;
    Rational mean_segment_seconds{20};
    Engagement engagement = Engagement::engaged;
};

/// Scripted off-task blocks planted in every window on top of a single base action.
struct PlantedPattern {
    std::string base_label;
    std::string off_label;
    int blocks = 1;
    Rational block_seconds{25};
    Engagement engagement = Engagement::engaged;
};

struct BehaviorProfile {
    std::string name;
    std::map<PhaseKind, PhaseBehavior> phases;
    std::optional<PlantedPattern> pattern;
};

/// Built-in profiles: engaged, disengaged, laptop_typist, phone_checker, phone_block.
BehaviorProfile builtin_profile(std::string_view name);

struct ScenarioSpec {
    std::uint64_t seed = 0;
    int n_students = 6;
    Rational fps{15};
    Rational window_seconds{120};
    /// Every generated boundary is a multiple of this.
    Rational align_seconds{5};
    std::vector<PhaseSpec> phases{{PhaseKind::lecture, Rational(120)}};
    std::map<std::string, BehaviorProfile> profiles;  ///< student_id -> profile
    BehaviorProfile default_profile = builtin_profile("engaged");
};

/// Student ids are "s00", "s01", ... up to n_students.
std::string scenario_student_id(int index);

ScenarioSpec parse_scenario(std::string_view json_text);
/// Deterministic under spec.seed. Throws Error(data) on invalid propensities or durations.
SessionFile generate_scenario(const ScenarioSpec& spec, const ActionDictionary& dict = default_dictionary());

}  // namespace classengage
