// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/engagement.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "prompt_templates.hpp"

namespace classengage {

const char* to_string(PromptVariant v) noexcept {
    return v == PromptVariant::context_based ? "context" : "context-free";
}

const char* to_string(InputRepresentation r) noexcept {
    return r == InputRepresentation::sequence ? "sequence" : "histogram";
}

const char* to_string(ParseConfidence c) noexcept {
    return c == ParseConfidence::exact ? "exact" : "extracted";
}

// ---------------------------------------------------------------------------
// Prompts

PromptTemplate PromptTemplate::builtin() {
    return {"v1", detail::kTaskTemplateV1, detail::kInputTemplateV1};
}

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::config, "cannot read prompt template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

constexpr std::string_view kOpen = "{#context}";
constexpr std::string_view kClose = "{/context}";

std::string apply_sections(std::string_view text, bool keep_context) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find(kOpen, pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        const auto close = text.find(kClose, open + kOpen.size());
        if (close == std::string_view::npos) throw Error(ErrorKind::config, "prompt template: unterminated {#context} section");
        out.append(text.substr(pos, open - pos));
        if (keep_context) out.append(text.substr(open + kOpen.size(), close - open - kOpen.size()));
        pos = close + kClose.size();
    }
    return out;
}

void replace_all(std::string& text, std::string_view key, std::string_view value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
        text.replace(pos, key.size(), value);
}

std::string trim_trailing(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

}  // namespace

PromptTemplate PromptTemplate::load(const std::filesystem::path& dir, const std::string& version) {
    return {version, read_text(dir / ("engagement_" + version + ".txt")), read_text(dir / ("input_" + version + ".txt"))};
}

PromptBundle build_prompt(const ActionSequence& target, const ContextTimeline* context, const ActionDictionary& dict,
                          PromptVariant variant, InputRepresentation representation, const PromptTemplate& tmpl,
                          double temperature) {
    const bool with_context = variant == PromptVariant::context_based;
    if (with_context && context == nullptr)
        throw Error(ErrorKind::context_required, "context-based prompt for student '" + target.student_id() +
                                                     "' requested without a classroom context");
    check_labels(target, dict);

    const bool histogram = representation == InputRepresentation::histogram;
    const auto student_text = histogram ? render_histogram_text(to_histogram(target), dict) : render_sequence_text(target, dict);
    std::string context_text;
    if (with_context)
        context_text = histogram ? render_histogram_text(to_histogram(context->segments, context->fps), dict)
                                 : render_sequence_text(*context, dict);

    PromptBundle b;
    b.variant = variant;
    b.representation = representation;
    b.temperature = temperature;
    b.task_description = trim_trailing(apply_sections(tmpl.task_description, with_context));
    b.input_block = apply_sections(tmpl.input_block, with_context);
    replace_all(b.input_block, "{STUDENT_ACTIONS}", student_text);
    replace_all(b.input_block, "{CLASSROOM_CONTEXT}", context_text);
    b.input_block = trim_trailing(std::move(b.input_block));
    b.full_prompt = b.task_description;
    b.full_prompt += kPromptSeparator;
    b.full_prompt += b.input_block;
    return b;
}

// ---------------------------------------------------------------------------
// Verdicts

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_alpha(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

bool contains_word(std::string_view text, std::string_view word) {
    for (auto pos = text.find(word); pos != std::string_view::npos; pos = text.find(word, pos + 1)) {
        const bool left = pos == 0 || !is_alpha(text[pos - 1]);
        const auto end = pos + word.size();
        const bool right = end == text.size() || !is_alpha(text[end]);
        if (left && right) return true;
    }
    return false;
}

constexpr std::array<std::string_view, 7> kDisengagedForms{
    "disengaged", "dis-engaged", "dis engaged", "not engaged", "not-engaged", "unengaged", "non-engaged",
};

}  // namespace

EngagementVerdict parse_verdict(std::string_view raw) {
    const auto text = lower(raw);
    const auto trimmed = trim(text);
    EngagementVerdict v;
    v.raw_response = std::string(raw);

    if (trimmed == "disengaged" || trimmed == "engaged") {
        v.label = trimmed == "engaged" ? Engagement::engaged : Engagement::disengaged;
        v.confidence = ParseConfidence::exact;
        return v;
    }
    v.confidence = ParseConfidence::extracted;
    for (auto form : kDisengagedForms) {
        if (text.find(form) != std::string::npos) {
            v.label = Engagement::disengaged;
            return v;
        }
    }
    if (contains_word(text, "engaged")) {
        v.label = Engagement::engaged;
        return v;
    }
    throw VerdictParseError("no engagement label in endpoint reply", std::string(raw));
}

EngagementVerdict classify_remote(const PromptBundle& bundle, ClassifierEndpoint& endpoint, const std::string& model,
                                  const RetryPolicy& retry) {
    const ChatRequest request{model, bundle.temperature, bundle.full_prompt};
    const int attempts = std::max(1, retry.max_attempts);
    auto delay = retry.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        std::string reply;
        try {
            reply = endpoint.complete(request);
        } catch (const TransportError& e) {
            if (!e.transient() || attempt >= attempts) throw;
            if (retry.sleep) {
                retry.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
            delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * retry.multiplier));
            continue;
        }
        return parse_verdict(reply);
    }
}

// ---------------------------------------------------------------------------
// Rule baseline

BaselineParams BaselineParams::defaults(const ActionDictionary& dict) {
    BaselineParams p;
    auto add = [&](std::set<LabelId>& set, std::string_view name) {
        if (auto id = dict.find(name)) set.insert(*id);
    };
    for (auto name : {"writing on notebook/tablet", "typing on a laptop", "reading", "listening", "raising hand"})
        add(p.on_task, name);
    for (auto name : {"typing on a laptop", "looking at laptop screen (not typing)"}) add(p.ambiguous, name);
    return p;
}

namespace {

double clamp01(double x) {
    return std::clamp(x, 0.0, 1.0);
}

std::string describe(Engagement label, const BaselineTrace& t) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s (on-task %.3f, short interruptions %d)", to_string(label), t.on_task_fraction,
                  t.short_interruptions);
    return buf;
}

EngagementVerdict finish(const BaselineParams& params, const BaselineTrace& t, bool use_switches, BaselineTrace* out) {
    const bool engaged = t.on_task_fraction >= params.threshold && (!use_switches || t.short_interruptions < params.max_switches);
    EngagementVerdict v;
    v.label = engaged ? Engagement::engaged : Engagement::disengaged;
    v.raw_response = describe(v.label, t);
    v.confidence = ParseConfidence::exact;
    if (out) *out = t;
    return v;
}

}  // namespace

EngagementVerdict classify_baseline(const ActionSequence& target, const ContextTimeline* context,
                                    const ActionDictionary& dict, const BaselineParams& params, BaselineTrace* trace) {
    check_labels(target, dict);
    if (target.empty()) throw Error(ErrorKind::data, "baseline: empty sequence for student '" + target.student_id() + "'");
    if (context && context->length() != target.length())
        throw Error(ErrorKind::data, "baseline: context length differs from target of student '" + target.student_id() + "'");

    auto off_task = [&](LabelId l) { return !params.on_task.contains(l) && !params.ambiguous.contains(l); };

    BaselineTrace t;
    t.context_used = context != nullptr;
    double weighted = 0.0;
    for (const auto& seg : target.segments()) {
        const auto len = static_cast<double>(seg.span.length());
        if (params.ambiguous.contains(seg.label)) {
            if (!context) {
                weighted += len * clamp01(params.ambiguous_weight);
                continue;
            }
            FrameIndex agree = 0;
            for (const auto& c : context->segments) {
                if (c.label != seg.label) continue;
                const auto lo = std::max(c.span.start_frame, seg.span.start_frame);
                const auto hi = std::min(c.span.end_frame, seg.span.end_frame);
                if (hi > lo) agree += hi - lo;
            }
            const auto a = static_cast<double>(agree);
            weighted += a * clamp01(params.ambiguous_weight + params.agreement_delta) +
                        (len - a) * clamp01(params.ambiguous_weight - params.agreement_delta);
        } else if (params.on_task.contains(seg.label)) {
            weighted += len;
        }
    }
    t.on_task_fraction = weighted / static_cast<double>(target.length());

    const auto min_block = frames_in(params.min_block_seconds, target.fps());
    FrameIndex run = 0;
    for (const auto& seg : target.segments()) {
        if (off_task(seg.label)) {
            run += seg.span.length();
            continue;
        }
        if (run > 0 && run < min_block) ++t.short_interruptions;
        run = 0;
    }
    if (run > 0 && run < min_block) ++t.short_interruptions;

    return finish(params, t, true, trace);
}

EngagementVerdict classify_baseline(const ActionHistogram& target, const ActionHistogram* context,
                                    const ActionDictionary& dict, const BaselineParams& params, BaselineTrace* trace) {
    const auto total = target.total_frames();
    if (total <= 0) throw Error(ErrorKind::data, "baseline: empty histogram");
    BaselineTrace t;
    t.context_used = context != nullptr;
    double weighted = 0.0;
    for (const auto& [label, n] : target.frames) {
        if (!dict.contains(label)) throw Error(ErrorKind::dictionary_mismatch, "histogram label " + std::to_string(label));
        const auto len = static_cast<double>(n);
        if (params.ambiguous.contains(label)) {
            if (!context) {
                weighted += len * clamp01(params.ambiguous_weight);
                continue;
            }
            const auto it = context->frames.find(label);
            const auto agree = static_cast<double>(std::min(n, it == context->frames.end() ? FrameIndex{0} : it->second));
            weighted += agree * clamp01(params.ambiguous_weight + params.agreement_delta) +
                        (len - agree) * clamp01(params.ambiguous_weight - params.agreement_delta);
        } else if (params.on_task.contains(label)) {
            weighted += len;
        }
    }
    t.on_task_fraction = weighted / static_cast<double>(total);
    return finish(params, t, false, trace);
}

}  // namespace classengage
