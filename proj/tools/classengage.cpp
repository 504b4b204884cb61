// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "classengage/dataio.hpp"
#include "classengage/http_endpoint.hpp"
#include "classengage/pipeline.hpp"
#include "classengage/recognizer_http.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace classengage;

namespace {

struct RunConfig {
    std::string session;
    std::string segment_seconds = "5";
    std::string bin_seconds;
    int frames_per_clip = 32;
    std::string recognizer = "oracle";
    std::string recognizer_url;
    std::string classifier = "baseline";
    std::string variant = "context";
    std::string representation = "sequence";
    std::string endpoint_url;
    std::string model;
    std::string prompt_dir;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int concurrency = 4;

    // command specific
    std::string scenario;
    std::string pred;
    std::string verdicts;
    std::string batch;
    bool merge = false;
    double step = 1e-5;
    double tol = 1e-4;
};

WindowingConfig windowing(const RunConfig& c) {
    WindowingConfig w;
    w.segment_seconds = Rational::parse(c.segment_seconds);
    w.frames_per_clip = c.frames_per_clip;
    w.max_in_flight = c.concurrency;
    return w;
}

/// Writes only beneath --out; does nothing when no directory was given.
void emit(const RunConfig& c, const std::string& name, const std::string& text) {
    if (c.out.empty()) return;
    write_text_file(fs::path(c.out) / name, text);
}

std::string jsonl(const std::vector<json>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.dump() + "\n";
    return s;
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%6.2f", v);
    return buf;
}

json segments_json(const ActionSequence& seq) {
    json a = json::array();
    for (const auto& s : seq.segments()) a.push_back({s.label, s.span.start_frame, s.span.end_frame});
    return a;
}

std::vector<ParsedWindow> run_parse(const RunConfig& c, const SessionFile& session) {
    const auto cfg = windowing(c);
    if (c.recognizer == "oracle") {
        auto oracle = make_oracle(session);
        return parse_session_sequences(session, oracle, cfg, c.concurrency);
    }
    if (c.recognizer_url.empty()) throw Error(ErrorKind::config, "--recognizer remote needs a recognizer URL");
    HttpRecognizer remote(c.recognizer_url, session.dictionary.names(), c.frames_per_clip);
    return parse_session_sequences(session, remote, cfg, c.concurrency);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c) {
    ScenarioSpec spec;
    if (!c.scenario.empty()) spec = parse_scenario(read_text_file(c.scenario));
    if (c.seed_given) spec.seed = c.seed;
    const auto session = generate_scenario(spec);
    emit(c, "session.json", to_canonical_json(session));
    std::printf("generated %zu students, %zu windows, %lld frames (seed %llu)\n", session.students.size(),
                session.windows.size(), static_cast<long long>(session.total_frames()),
                static_cast<unsigned long long>(spec.seed));
    if (c.out.empty()) std::fputs(to_canonical_json(session).c_str(), stdout);
    return 0;
}

int cmd_parse(const RunConfig& c) {
    const auto session = load_session(c.session);
    const auto parsed = run_parse(c, session);
    std::vector<json> rows;
    for (const auto& p : parsed) {
        rows.push_back({{"window_id", p.window_id},
                        {"student_id", p.student_id},
                        {"start_frame", p.start_frame},
                        {"partial", p.partial},
                        {"segments", segments_json(p.predicted)},
                        {"sequence", render_sequence_text(p.predicted, session.dictionary)}});
        std::printf("%s %s  %s\n", p.window_id.c_str(), p.student_id.c_str(),
                    render_sequence_text(p.predicted, session.dictionary).c_str());
    }
    emit(c, "parse.jsonl", jsonl(rows));
    emit(c, "parsed_session.json", to_canonical_json(with_predictions(session, parsed)));
    return 0;
}

int cmd_eval_seg(const RunConfig& c) {
    const auto reference = load_session(c.session);
    const auto parsed = c.pred.empty() ? run_parse(c, reference) : pair_sessions(load_session(c.pred), reference);
    const auto report = evaluate_segmentation(parsed, reference.dictionary, c.merge);

    std::vector<json> rows;
    std::printf("%-8s %-8s %6s %6s %6s %6s %6s\n", "window", "student", "MoF", "Edit", "F1@10", "F1@25", "F1@50");
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        const auto& w = report.windows[i];
        json counts = json::object();
        for (const auto& [tau, n] : w.counts) counts[std::to_string(tau)] = to_json(n);
        rows.push_back({{"window_id", parsed[i].window_id},
                        {"student_id", parsed[i].student_id},
                        {"report", to_json(w.report)},
                        {"counts", counts}});
        std::printf("%-8s %-8s %s %s", parsed[i].window_id.c_str(), parsed[i].student_id.c_str(),
                    fmt(w.report.mof).c_str(), fmt(w.report.edit).c_str());
        for (const auto& [tau, v] : w.report.f1_at) std::printf(" %s", fmt(v).c_str());
        std::printf("\n");
    }
    const auto& a = report.aggregate;
    for (const auto* name : {"pooled", "mean"}) {
        const auto& r = std::string(name) == "pooled" ? a.pooled : a.mean;
        std::printf("%-17s %s %s", name, fmt(r.mof).c_str(), fmt(r.edit).c_str());
        for (const auto& [tau, v] : r.f1_at) std::printf(" %s", fmt(v).c_str());
        std::printf("\n");
    }
    emit(c, "seg_windows.jsonl", jsonl(rows));
    json agg = to_json(a);
    agg["merged"] = c.merge;
    emit(c, "seg_report.json", pretty(agg));
    return 0;
}

void print_cls_report(const ClsEvalReport& r) {
    std::printf("%-12s %9s %9s %9s %8s\n", "class", "precision", "recall", "f1", "support");
    const auto row = [](const char* name, const ClassMetrics& m) {
        std::printf("%-12s %9.3f %9.3f %9.3f %8zu\n", name, m.precision, m.recall, m.f1, m.support);
    };
    row("engaged", r.engaged);
    row("disengaged", r.disengaged);
    row("weighted avg", r.weighted);
    std::printf("accuracy %.3f over %zu windows\n", r.accuracy, r.total);
}

int cmd_classify(const RunConfig& c) {
    auto session = load_session(c.session);
    if (c.recognizer == "remote") session = with_predictions(session, run_parse(c, session));

    ClassifyOptions opts;
    opts.variant = c.variant == "context" ? PromptVariant::context_based : PromptVariant::context_free;
    opts.representation = c.representation == "sequence" ? InputRepresentation::sequence : InputRepresentation::histogram;
    opts.segment_seconds = Rational::parse(c.segment_seconds);
    if (!c.bin_seconds.empty()) opts.bin_seconds = Rational::parse(c.bin_seconds);
    if (!c.prompt_dir.empty()) opts.prompt = PromptTemplate::load(c.prompt_dir);
    opts.window_concurrency = c.concurrency;

    std::unique_ptr<HttpChatEndpoint> endpoint;
    if (c.classifier == "remote") {
        if (c.endpoint_url.empty()) throw Error(ErrorKind::config, "--classifier remote needs --endpoint-url");
        if (c.model.empty()) throw Error(ErrorKind::config, "--classifier remote needs --model");
        endpoint = std::make_unique<HttpChatEndpoint>(
            EndpointSettings{c.endpoint_url, c.model, EndpointSettings::token_from_env(), std::chrono::seconds(60)});
        opts.mode = ClassifierMode::remote;
        opts.remote = {endpoint.get(), c.model, {}};
    }

    const auto verdicts = classify_session(session, opts);
    std::vector<json> rows;
    std::optional<ErrorKind> first_error;
    for (const auto& v : verdicts) {
        json row = {{"window_id", v.window_id},
                    {"student_id", v.student_id},
                    {"variant", to_string(opts.variant)},
                    {"representation", to_string(opts.representation)},
                    {"context_used", v.context_used},
                    {"partial", v.partial},
                    {"ground_truth", v.ground_truth ? json(to_string(*v.ground_truth)) : json(nullptr)}};
        if (v.verdict) {
            row["predicted"] = to_string(v.verdict->label);
            row["raw_response"] = v.verdict->raw_response;
            row["confidence"] = to_string(v.verdict->confidence);
        } else {
            row["predicted"] = nullptr;
            row["error"] = {{"kind", to_string(*v.error)}, {"message", v.error_message}};
            if (!first_error) first_error = v.error;
            std::fprintf(stderr, "%s %s: %s\n", v.window_id.c_str(), v.student_id.c_str(), v.error_message.c_str());
        }
        rows.push_back(std::move(row));
        std::printf("%-8s %-8s %-11s gt=%s\n", v.window_id.c_str(), v.student_id.c_str(),
                    v.verdict ? to_string(v.verdict->label) : "error",
                    v.ground_truth ? to_string(*v.ground_truth) : "-");
    }
    emit(c, "verdicts.jsonl", jsonl(rows));

    json summary = {{"variant", to_string(opts.variant)},
                    {"representation", to_string(opts.representation)},
                    {"classifier", c.classifier},
                    {"windows", verdicts.size()}};
    if (const auto report = evaluate_verdicts(verdicts)) {
        print_cls_report(*report);
        summary["report"] = to_json(*report);
    }
    emit(c, "cls_report.json", pretty(summary));
    return first_error ? exit_code_for(*first_error) : 0;
}

int cmd_eval_cls(const RunConfig& c) {
    const auto text = read_text_file(c.verdicts);
    std::vector<Engagement> preds, gts;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::schema, c.verdicts + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const auto get = [&](const char* key) -> std::optional<Engagement> {
            if (!row.contains(key) || !row[key].is_string()) return std::nullopt;
            const auto e = parse_engagement(row[key].get<std::string>());
            if (!e) throw Error(ErrorKind::schema, c.verdicts + ":" + std::to_string(line_no) + ": bad label in " + key);
            return e;
        };
        const auto p = get("predicted");
        const auto g = get("ground_truth");
        if (p && g) {
            preds.push_back(*p);
            gts.push_back(*g);
        }
    }
    if (preds.empty()) throw Error(ErrorKind::data, "no rows with both a prediction and a ground-truth label");
    const auto report = classification_report(preds, gts);
    print_cls_report(report);
    emit(c, "cls_eval.json", pretty(to_json(report)));
    return 0;
}

int cmd_loss_check(const RunConfig& c) {
    const auto batch = load_embedding_batch(c.batch);
    const auto terms = loss_terms(batch);
    const auto check = check_gradient(batch, c.step, c.tol);
    std::printf("loss           %.12g\n", terms.total);
    std::printf("cross_entropy  %.12g\n", terms.cross_entropy);
    std::printf("entropy        %.12g\n", terms.entropy);
    std::printf("gradient check %s (max relative error %.3g over %zu components)\n", check.passed ? "PASS" : "FAIL",
                check.max_relative_error, check.components);
    emit(c, "loss_check.json",
         pretty({{"loss", terms.total},
                 {"cross_entropy", terms.cross_entropy},
                 {"entropy", terms.entropy},
                 {"gradient_check",
                  {{"passed", check.passed},
                   {"max_relative_error", check.max_relative_error},
                   {"components", check.components},
                   {"step", c.step},
                   {"tolerance", c.tol}}}}));
    return check.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classroom action parsing and engagement classification"};
    app.require_subcommand(1);
    RunConfig c;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--out", c.out, "Output directory (all files are written beneath it)");
        sub->add_option("--seed", c.seed, "Random seed")->each([&](const std::string&) { c.seed_given = true; });
        sub->add_option("--concurrency", c.concurrency, "Windows and recognizer calls in flight")->check(CLI::PositiveNumber);
    };
    const auto recognizer_opts = [&](CLI::App* sub) {
        sub->add_option("--segment-seconds", c.segment_seconds, "Recognizer segment length (integer or num/den)");
        sub->add_option("--frames-per-clip", c.frames_per_clip, "Frames sampled per segment")->check(CLI::PositiveNumber);
        sub->add_option("--recognizer", c.recognizer, "Action recognizer")->check(CLI::IsMember({"oracle", "remote"}));
    };

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic session");
    common(simulate);
    simulate->add_option("--scenario", c.scenario, "Scenario JSON")->check(CLI::ExistingFile);

    auto* parse = app.add_subcommand("parse", "Recognize and fuse per-student action sequences");
    common(parse);
    recognizer_opts(parse);
    parse->add_option("--session", c.session, "Session JSON")->required()->check(CLI::ExistingFile);
    parse->add_option("--endpoint-url", c.recognizer_url, "Recognizer base URL");

    auto* classify = app.add_subcommand("classify", "Classify engagement per window");
    common(classify);
    recognizer_opts(classify);
    classify->add_option("--session", c.session, "Session JSON")->required()->check(CLI::ExistingFile);
    classify->add_option("--recognizer-url", c.recognizer_url, "Recognizer base URL");
    classify->add_option("--classifier", c.classifier, "Engagement classifier")->check(CLI::IsMember({"baseline", "remote"}));
    classify->add_option("--variant", c.variant, "Prompt variant")->check(CLI::IsMember({"context", "context-free"}));
    classify->add_option("--representation", c.representation, "Action input form")
        ->check(CLI::IsMember({"sequence", "histogram"}));
    classify->add_option("--bin-seconds", c.bin_seconds, "Context bin length (defaults to the segment length)");
    classify->add_option("--endpoint-url", c.endpoint_url, "Chat completion URL");
    classify->add_option("--model", c.model, "Model name sent to the endpoint");
    classify->add_option("--prompt-dir", c.prompt_dir, "Directory with engagement_v1.txt and input_v1.txt")
        ->check(CLI::ExistingDirectory);

    auto* eval_seg = app.add_subcommand("eval-seg", "Segmentation metrics against a reference session");
    common(eval_seg);
    recognizer_opts(eval_seg);
    eval_seg->add_option("--session", c.session, "Reference session JSON")->required()->check(CLI::ExistingFile);
    eval_seg->add_option("--pred", c.pred, "Predicted session JSON (otherwise the recognizer is run)")->check(CLI::ExistingFile);
    eval_seg->add_option("--endpoint-url", c.recognizer_url, "Recognizer base URL");
    eval_seg->add_flag("--merge", c.merge, "Apply the dictionary's merge groups first");

    auto* eval_cls = app.add_subcommand("eval-cls", "Classification report from a verdicts file");
    common(eval_cls);
    eval_cls->add_option("--verdicts", c.verdicts, "verdicts.jsonl from classify")->required()->check(CLI::ExistingFile);

    auto* loss_check = app.add_subcommand("loss-check", "Objective value and gradient check for an embedding batch");
    common(loss_check);
    loss_check->add_option("--batch", c.batch, "Embedding batch file")->required()->check(CLI::ExistingFile);
    loss_check->add_option("--step", c.step, "Finite-difference step");
    loss_check->add_option("--tol", c.tol, "Relative error tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*simulate) return cmd_simulate(c);
        if (*parse) return cmd_parse(c);
        if (*classify) return cmd_classify(c);
        if (*eval_seg) return cmd_eval_seg(c);
        if (*eval_cls) return cmd_eval_cls(c);
        if (*loss_check) return cmd_loss_check(c);
    } catch (const Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
