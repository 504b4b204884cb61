// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "classengage/dataio.hpp"
#include "classengage/engagement.hpp"
#include "classengage/metrics.hpp"
#include "classengage/temporal.hpp"

// Session-level orchestration shared by the CLI and the acceptance suite.

namespace classengage {

/// Oracle recognizer answering from the session's own student tracks.
OracleRecognizer make_oracle(const SessionFile& session);

struct ParsedWindow {
    std::string window_id;
    std::string student_id;
    FrameIndex start_frame = 0;
    bool partial = false;
    ActionSequence predicted;
    ActionSequence ground_truth;
};

/**
 * Split, recognize and merge every (window, student) of the session. Windows run with
 * at most `window_concurrency` at a time; output is sorted by (window_id, student_id).
 * The first failure, in that order, is rethrown after all windows finish.
 */
std::vector<ParsedWindow> parse_session_sequences(const SessionFile& session, RecognizerPort& recognizer,
                                                  const WindowingConfig& cfg, int window_concurrency = 4);

/// The session with every student track replaced by its parsed windows, laid end to end.
SessionFile with_predictions(const SessionFile& session, const std::vector<ParsedWindow>& parsed);

enum class ClassifierMode { baseline, remote };

struct RemoteClassifier {
    ClassifierEndpoint* endpoint = nullptr;
    std::string model;
    RetryPolicy retry;
};

struct ClassifyOptions {
    ClassifierMode mode = ClassifierMode::baseline;
    PromptVariant variant = PromptVariant::context_based;
    InputRepresentation representation = InputRepresentation::sequence;
    /// Context bin length; unset means the recognizer segment length.
    std::optional<Rational> bin_seconds;
    Rational segment_seconds{5};
    PromptTemplate prompt = PromptTemplate::builtin();
    std::optional<BaselineParams> baseline;  ///< defaults(dictionary) when unset
    RemoteClassifier remote;
    int window_concurrency = 4;
};

struct WindowVerdict {
    std::string window_id;
    std::string student_id;
    std::optional<Engagement> ground_truth;
    std::optional<EngagementVerdict> verdict;  ///< empty when `error` is set
    bool context_used = false;
    bool partial = false;
    BaselineTrace trace;
    std::string prompt;
    std::optional<ErrorKind> error;
    std::string error_message;
};

/// Both prompt variants run through this one path; context-free only withholds the context.
std::vector<WindowVerdict> classify_session(const SessionFile& session, const ClassifyOptions& options);

/// Report over verdicts that have both a prediction and a ground-truth label; nullopt when none do.
std::optional<ClsEvalReport> evaluate_verdicts(const std::vector<WindowVerdict>& verdicts);

struct SegSessionReport {
    std::vector<SegWindowResult> windows;  ///< aligned with the input pairs
    SegAggregate aggregate;
};

/// Pairs predicted and reference windows; with `merge`, both sides are first mapped through the dictionary's merge groups.
SegSessionReport evaluate_segmentation(const std::vector<ParsedWindow>& parsed, const ActionDictionary& dict,
                                       bool merge = false, F1Options opts = {});

/// Pairs the tracks of two sessions window by window (same students, fps and windows required).
std::vector<ParsedWindow> pair_sessions(const SessionFile& predicted, const SessionFile& reference);

}  // namespace classengage
