// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/pipeline.hpp"

#include <algorithm>
#include <tuple>

#include "classengage/concurrency.hpp"
#include "classengage/kernels.hpp"

namespace classengage {

OracleRecognizer make_oracle(const SessionFile& session) {
    std::vector<FrameLabelStream> tracks;
    tracks.reserve(session.students.size());
    for (const auto& st : session.students) tracks.push_back(to_frames(st));
    return OracleRecognizer(std::move(tracks));
}

namespace {

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::size_t concurrency(int n) { return static_cast<std::size_t>(std::max(1, n)); }

}  // namespace

std::vector<ParsedWindow> parse_session_sequences(const SessionFile& session, RecognizerPort& recognizer,
                                                  const WindowingConfig& cfg, int window_concurrency) {
    const auto windows = effective_windows(session);
    const auto wf = session.window_frames();
    const auto total = session.total_frames();

    std::vector<ParsedWindow> jobs;
    for (const auto& w : windows) {
        const auto end = std::min(w.start_frame + wf, total);
        for (const auto& st : session.students) {
            ParsedWindow p;
            p.window_id = w.window_id;
            p.student_id = st.student_id();
            p.start_frame = w.start_frame;
            p.partial = end - w.start_frame < wf;
            p.ground_truth = st.slice(w.start_frame, end);
            jobs.push_back(std::move(p));
        }
    }
    std::ranges::sort(jobs, {}, [](const ParsedWindow& p) { return std::tie(p.window_id, p.student_id); });

    std::vector<std::exception_ptr> errors(jobs.size());
    bounded_for(jobs.size(), concurrency(window_concurrency), [&](std::size_t i) {
        auto& job = jobs[i];
        try {
            const auto spans = split_windows(job.ground_truth.length(), session.fps, cfg);
            const auto verdicts = recognize_segments(spans, recognizer, job.student_id, cfg, job.start_frame);
            job.predicted = merge_verdicts(spans, verdicts, job.student_id);
        } catch (const Error& e) {
            errors[i] = std::make_exception_ptr(
                Error(e.kind(), "window " + job.window_id + ", student " + job.student_id + ": " + e.what()));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    rethrow_first(errors);
    return jobs;
}

SessionFile with_predictions(const SessionFile& session, const std::vector<ParsedWindow>& parsed) {
    SessionFile out = session;
    for (auto& st : out.students) {
        std::vector<const ParsedWindow*> mine;
        for (const auto& p : parsed)
            if (p.student_id == st.student_id()) mine.push_back(&p);
        std::ranges::sort(mine, {}, &ParsedWindow::start_frame);

        std::vector<ActionSegment> segs;
        FrameIndex cursor = 0;
        for (const auto* p : mine) {
            if (p->start_frame != cursor)
                throw Error(ErrorKind::contiguity, "parsed windows of student " + st.student_id() + " leave a gap at frame " +
                                                       std::to_string(cursor));
            for (auto seg : p->predicted.segments()) {
                seg.span.start_frame += cursor;
                seg.span.end_frame += cursor;
                segs.push_back(seg);
            }
            cursor += p->predicted.length();
        }
        if (cursor != st.length())
            throw Error(ErrorKind::contiguity, "parsed windows of student " + st.student_id() + " do not cover the track");
        st = ActionSequence::make(st.student_id(), st.fps(), std::move(segs));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<WindowVerdict> classify_session(const SessionFile& session, const ClassifyOptions& options) {
    const auto& dict = session.dictionary;
    const auto params = options.baseline ? *options.baseline : BaselineParams::defaults(dict);
    const auto bin = options.bin_seconds.value_or(options.segment_seconds);
    if (options.mode == ClassifierMode::remote && options.remote.endpoint == nullptr)
        throw Error(ErrorKind::config, "remote classifier selected without an endpoint");

    auto windows = build_windows(session);
    std::vector<WindowVerdict> out(windows.size());
    bounded_for(windows.size(), concurrency(options.window_concurrency), [&](std::size_t i) {
        const auto& cw = windows[i];
        auto& r = out[i];
        r.window_id = cw.window_id;
        r.student_id = cw.target.student_id();
        r.ground_truth = cw.engagement_gt;
        r.partial = cw.partial;
        try {
            std::optional<ContextTimeline> ctx;
            if (options.variant == PromptVariant::context_based) ctx = aggregate_context(cw, bin);
            const ContextTimeline* ctx_ptr = ctx ? &*ctx : nullptr;
            r.context_used = ctx_ptr != nullptr;

            const auto bundle = build_prompt(cw.target, ctx_ptr, dict, options.variant, options.representation,
                                             options.prompt, 0.1);
            r.prompt = bundle.full_prompt;
            if (options.mode == ClassifierMode::remote) {
                r.verdict = classify_remote(bundle, *options.remote.endpoint, options.remote.model, options.remote.retry);
            } else if (options.representation == InputRepresentation::histogram) {
                const auto target = to_histogram(cw.target);
                std::optional<ActionHistogram> peers;
                if (ctx) peers = to_histogram(ctx->segments, ctx->fps);
                r.verdict = classify_baseline(target, peers ? &*peers : nullptr, dict, params, &r.trace);
            } else {
                r.verdict = classify_baseline(cw.target, ctx_ptr, dict, params, &r.trace);
            }
        } catch (const VerdictParseError& e) {
            r.error = e.kind();
            r.error_message = e.what() + std::string(": ") + e.raw_response();
        } catch (const Error& e) {
            r.error = e.kind();
            r.error_message = e.what();
        }
    });
    std::ranges::sort(out, {}, [](const WindowVerdict& v) { return std::tie(v.window_id, v.student_id); });
    return out;
}

std::optional<ClsEvalReport> evaluate_verdicts(const std::vector<WindowVerdict>& verdicts) {
    std::vector<Engagement> preds, gts;
    for (const auto& v : verdicts) {
        if (!v.verdict || !v.ground_truth) continue;
        preds.push_back(v.verdict->label);
        gts.push_back(*v.ground_truth);
    }
    if (preds.empty()) return std::nullopt;
    return classification_report(preds, gts);
}

// ---------------------------------------------------------------------------

SegSessionReport evaluate_segmentation(const std::vector<ParsedWindow>& parsed, const ActionDictionary& dict, bool merge,
                                       F1Options opts) {
    std::vector<ActionSequence> preds, gts;
    preds.reserve(parsed.size());
    gts.reserve(parsed.size());
    for (const auto& p : parsed) {
        check_labels(p.predicted, dict);
        check_labels(p.ground_truth, dict);
        preds.push_back(merge ? apply_merge(p.predicted, dict) : p.predicted);
        gts.push_back(merge ? apply_merge(p.ground_truth, dict) : p.ground_truth);
    }
    std::vector<kernels::SequencePair> pairs(parsed.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) pairs[i] = {&preds[i], &gts[i]};

    SegSessionReport r;
    r.windows = kernels::parallel::evaluate_pairs(pairs, opts);
    r.aggregate = aggregate(r.windows);
    return r;
}

std::vector<ParsedWindow> pair_sessions(const SessionFile& predicted, const SessionFile& reference) {
    if (predicted.fps != reference.fps || predicted.window_seconds != reference.window_seconds)
        throw Error(ErrorKind::data, "prediction and reference sessions differ in fps or window length");
    if (!(predicted.dictionary == reference.dictionary))
        throw Error(ErrorKind::dictionary_mismatch, "prediction and reference sessions use different dictionaries");
    if (predicted.total_frames() != reference.total_frames())
        throw Error(ErrorKind::data, "prediction and reference sessions differ in length");

    const auto wf = reference.window_frames();
    const auto total = reference.total_frames();
    std::vector<ParsedWindow> out;
    for (const auto& w : effective_windows(reference)) {
        const auto end = std::min(w.start_frame + wf, total);
        for (const auto& st : reference.students) {
            const auto* pred = predicted.student(st.student_id());
            if (pred == nullptr) throw Error(ErrorKind::data, "prediction lacks student " + st.student_id());
            out.push_back({w.window_id, st.student_id(), w.start_frame, end - w.start_frame < wf,
                           pred->slice(w.start_frame, end), st.slice(w.start_frame, end)});
        }
    }
    std::ranges::sort(out, {}, [](const ParsedWindow& p) { return std::tie(p.window_id, p.student_id); });
    return out;
}

}  // namespace classengage
