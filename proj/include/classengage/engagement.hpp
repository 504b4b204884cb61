// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>

#include "classengage/core.hpp"
#include "classengage/temporal.hpp"

namespace classengage {

enum class PromptVariant { context_based, context_free };
enum class InputRepresentation { sequence, histogram };

const char* to_string(PromptVariant v) noexcept;
const char* to_string(InputRepresentation r) noexcept;

/**
 * @brief Task description and input-block templates.
 *
 * Placeholders {STUDENT_ACTIONS} and {CLASSROOM_CONTEXT} are substituted; text between
 * {#context} and {/context} is kept for context-based prompts and dropped otherwise, so
 * both variants come from one template.
 */
struct PromptTemplate {
    std::string version;
    std::string task_description;
    std::string input_block;

    /// Templates baked in at build time from prompts/.
    static PromptTemplate builtin();
    /// Reads engagement_<version>.txt and input_<version>.txt from `dir`.
    static PromptTemplate load(const std::filesystem::path& dir, const std::string& version = "v1");
};

struct PromptBundle {
    std::string task_description;
    std::string input_block;
    std::string full_prompt;
    PromptVariant variant = PromptVariant::context_based;
    InputRepresentation representation = InputRepresentation::sequence;
    double temperature = 0.1;
};

inline constexpr std::string_view kPromptSeparator = "\n\n";

/// Deterministic prompt. Throws Error(context_required) for context_based without a context.
PromptBundle build_prompt(const ActionSequence& target, const ContextTimeline* context, const ActionDictionary& dict,
                          PromptVariant variant, InputRepresentation representation = InputRepresentation::sequence,
                          const PromptTemplate& tmpl = PromptTemplate::builtin(), double temperature = 0.1);

enum class ParseConfidence { exact, extracted };

const char* to_string(ParseConfidence c) noexcept;

struct EngagementVerdict {
    Engagement label = Engagement::engaged;
    std::string raw_response;
    ParseConfidence confidence = ParseConfidence::exact;
};

/// Case-insensitive label scan; any disengaged form beats "engaged". Throws VerdictParseError.
EngagementVerdict parse_verdict(std::string_view raw);

struct ChatRequest {
    std::string model;
    double temperature = 0.1;
    std::string content;
};

/// Single-turn chat completion. Implementations throw TransportError.
class ClassifierEndpoint {
public:
    virtual ~ClassifierEndpoint() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
    /// Replaced in tests to avoid real waits.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/**
 * Sends the prompt at the bundle's temperature and parses the reply. Transient transport
 * failures are retried with exponential backoff; the last TransportError propagates once
 * attempts run out. Unparseable replies raise VerdictParseError without retrying.
 */
EngagementVerdict classify_remote(const PromptBundle& bundle, ClassifierEndpoint& endpoint, const std::string& model,
                                  const RetryPolicy& retry = {});

/// Thresholds and label sets of the rule-based classifier.
struct BaselineParams {
    std::set<LabelId> on_task;
    /// On-task labels whose meaning depends on what the peers are doing.
    std::set<LabelId> ambiguous;
    double threshold = 0.7;
    /// Frame weight of an ambiguous label when no context is available.
    double ambiguous_weight = 0.75;
    /// Added when the context agrees, subtracted when it does not.
    double agreement_delta = 0.15;
    Rational min_block_seconds{20};
    int max_switches = 3;

    /// Defaults resolved by name against `dict`; names the dictionary lacks are skipped.
    static BaselineParams defaults(const ActionDictionary& dict);
};

struct BaselineTrace {
    double on_task_fraction = 0.0;
    int short_interruptions = 0;
    bool context_used = false;
};

/**
 * Rule-based verdict: engaged iff the context-weighted on-task fraction reaches the
 * threshold and fewer than max_switches off-task runs are shorter than min_block.
 */
EngagementVerdict classify_baseline(const ActionSequence& target, const ContextTimeline* context,
                                    const ActionDictionary& dict, const BaselineParams& params,
                                    BaselineTrace* trace = nullptr);

/// Histogram-only variant: ordering is unavailable, so no interruption count.
EngagementVerdict classify_baseline(const ActionHistogram& target, const ActionHistogram* context,
                                    const ActionDictionary& dict, const BaselineParams& params,
                                    BaselineTrace* trace = nullptr);

}  // namespace classengage
