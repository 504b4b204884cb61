// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "classengage/fewshot.hpp"
#include "classengage/metrics.hpp"
#include "classengage/pipeline.hpp"
#include "oracles/oracles.hpp"
#include "support/fixtures.hpp"
#include "support/fuzz.hpp"

using namespace classengage;
using classengage::testing::Draw;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Outcome metric_oracle_equivalence() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    Draw d(20261);
    for (int i = 0; i < 1000 && o.pass; ++i) {
        const auto len = d.range(1, 400);
        const auto labels = static_cast<int>(d.range(1, 13));
        const auto pf = testing::random_frames(d, len, 10, labels);
        const auto gf = testing::random_frames(d, len, 10, labels);
        const auto p = testing::sequence_of(pf);
        const auto g = testing::sequence_of(gf);
        o.require(edit_score(p, g) == oracle::edit(pf, gf), "edit mismatch on pair " + std::to_string(i));
        o.require(mof(to_frames(p), to_frames(g)) == oracle::mof(pf, gf), "mof mismatch on pair " + std::to_string(i));
        for (int tau : kDefaultTaus)
            o.require(f1_at_tau(p, g, tau) == oracle::f1(pf, gf, tau),
                      "f1@" + std::to_string(tau) + " mismatch on pair " + std::to_string(i));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < 10.0, fmt("took %.2f s", secs));
    if (o.pass) o.detail = "1000 pairs in " + fmt("%.2f s", secs);
    return o;
}

ActionSequence triples(std::initializer_list<std::array<FrameIndex, 3>> t) {
    std::vector<std::array<FrameIndex, 3>> v(t);
    return ActionSequence::from_triples("s", Rational(15), v);
}

Outcome f1_rules() {
    Outcome o;
    const auto gt = triples({{{0, 0, 100}}});
    const auto c = segment_counts(triples({{{0, 0, 45}}, {{1, 45, 55}}, {{0, 55, 100}}}), gt, 25);
    o.require(c.tp == 1 && c.fp == 2 && c.fn == 0, "multiple overlaps not 1 TP");
    bool rejected = false;
    try {
        f1_at_tau(gt, gt, 75);
    } catch (const Error&) {
        rejected = true;
    }
    o.require(rejected, "tau 75 accepted by default");
    Draw d(20262);
    int checked = 0;
    for (int i = 0; i < 2000 && o.pass; ++i) {
        const auto len = d.range(1, 400);
        const auto labels = static_cast<int>(d.range(1, 13));
        const auto p = testing::sequence_of(testing::random_frames(d, len, 10, labels));
        const auto g = testing::sequence_of(testing::random_frames(d, len, 10, labels));
        const double a = f1_at_tau(p, g, 10), b = f1_at_tau(p, g, 25), e = f1_at_tau(p, g, 50);
        o.require(a >= b && b >= e, "non-monotone F1 on fuzz case " + std::to_string(i));
        ++checked;
    }
    if (o.pass) o.detail = "monotone on " + std::to_string(checked) + " fuzzed pairs";
    return o;
}

Outcome over_segmentation() {
    Outcome o;
    const auto [pf, gf] = testing::over_segmentation_frames();
    const auto p = testing::sequence_of(pf);
    const auto g = testing::sequence_of(gf);
    const auto r = evaluate_window(p, g);
    // fixed from the brute-force oracle
    o.require(oracle::mof(pf, gf) == 96.0 && std::abs(oracle::edit(pf, gf) - 4.0) < 1e-12 && oracle::f1(pf, gf, 50) == 0.0,
              "oracle disagrees with frozen fixture values");
    o.require(r.report.mof >= 95.0, fmt("MoF %.2f", r.report.mof));
    o.require(p.size() >= 20, "too few micro-segments");
    o.require(r.report.f1_at.at(50) <= 20.0, fmt("F1@50 %.2f", r.report.f1_at.at(50)));
    o.require(r.report.edit <= 30.0, fmt("Edit %.2f", r.report.edit));
    o.require(r.report.mof == 96.0 && std::abs(r.report.edit - 4.0) < 1e-12 && r.report.f1_at.at(50) == 0.0,
              "values differ from the frozen fixture");
    std::ostringstream s;
    s << "MoF " << r.report.mof << ", Edit " << r.report.edit << ", F1@50 " << r.report.f1_at.at(50) << ", "
      << p.size() << " segments";
    if (o.pass) o.detail = s.str();
    return o;
}

EmbeddingBatch random_batch(Draw& d, std::size_t n, std::size_t c, std::size_t dim, double tau) {
    EmbeddingBatch b{Matrix(n, dim), Matrix(c, dim), std::vector<int>(n), tau};
    for (std::size_t r = 0; r < n; ++r)
        for (auto& x : b.video.row(r)) x = d.normal();
    for (std::size_t r = 0; r < c; ++r)
        for (auto& x : b.text.row(r)) x = d.normal();
    for (auto& l : b.labels) l = static_cast<int>(d.range(0, static_cast<std::int64_t>(c) - 1));
    return b;
}

Outcome objective_numerics() {
    Outcome o;
    EmbeddingBatch sym{Matrix(1, 2), Matrix(2, 2), {0}, 1.0};
    sym.video(0, 0) = 1.0;
    sym.text(0, 0) = 1.0;
    sym.text(1, 0) = 1.0;
    o.require(std::abs(total_loss(sym) - 2.0 * std::log(2.0)) < 1e-12, "symmetric batch is not 2 ln 2");

    Draw d(20264);
    double worst = 0.0, worst_rescale = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<std::size_t>(d.range(1, 6));
        const auto c = static_cast<std::size_t>(d.range(2, 8));
        const auto dim = static_cast<std::size_t>(d.range(1, 12));
        const auto b = random_batch(d, n, c, dim, 0.1 + 0.9 * d.uniform());
        const auto check = check_gradient(b, 1e-5, 1e-4);
        worst = std::max(worst, check.max_relative_error);
        o.require(check.passed, "gradient check failed on batch " + std::to_string(t));

        auto scaled = b;
        const double s1 = 0.01 + 100 * d.uniform(), s2 = 0.01 + 100 * d.uniform();
        for (auto& x : scaled.video.row(static_cast<std::size_t>(d.range(0, static_cast<std::int64_t>(n) - 1)))) x *= s1;
        for (auto& x : scaled.text.row(static_cast<std::size_t>(d.range(0, static_cast<std::int64_t>(c) - 1)))) x *= s2;
        worst_rescale = std::max(worst_rescale, std::abs(total_loss(scaled) - total_loss(b)));
    }
    o.require(worst_rescale < 1e-9, fmt("rescale moved the loss by %.3g", worst_rescale));
    if (o.pass) o.detail = "max gradient rel. error " + fmt("%.2e", worst) + ", max rescale drift " + fmt("%.2e", worst_rescale);
    return o;
}

Outcome pipeline_identity() {
    Outcome o;
    Draw d(20265);
    const std::vector<std::string> names{"engaged", "disengaged", "laptop_typist", "phone_checker", "phone_block"};
    std::size_t windows = 0;
    for (int i = 0; i < 100 && o.pass; ++i) {
        ScenarioSpec spec;
        spec.seed = static_cast<std::uint64_t>(1000 + i);
        spec.n_students = static_cast<int>(d.range(2, 8));
        spec.phases = {{PhaseKind::lecture, Rational(120 * d.range(1, 3))},
                       {PhaseKind::peer_discussion, Rational(120 * d.range(0, 1) + 120)},
                       {PhaseKind::independent_work, Rational(120)}};
        for (int s = 0; s < spec.n_students; ++s)
            spec.profiles[scenario_student_id(s)] = builtin_profile(names[static_cast<std::size_t>(d.range(0, 4))]);
        const auto session = generate_scenario(spec);
        auto oracle = make_oracle(session);
        const auto parsed = parse_session_sequences(session, oracle, WindowingConfig{});
        for (const auto& p : parsed)
            o.require(p.predicted == p.ground_truth, "session " + std::to_string(i) + " " + p.window_id + "/" + p.student_id);
        const auto r = evaluate_segmentation(parsed, session.dictionary);
        for (const auto& w : r.windows) {
            o.require(w.report.mof == 100.0 && w.report.edit == 100.0 && w.report.f1_at.at(50) == 100.0,
                      "session " + std::to_string(i) + " scored below 100");
        }
        windows += parsed.size();
    }
    if (o.pass) o.detail = "100 sessions, " + std::to_string(windows) + " student windows exact";
    return o;
}

std::optional<Engagement> verdict_for(const std::vector<WindowVerdict>& v, const std::string& sid) {
    for (const auto& x : v)
        if (x.student_id == sid && x.verdict) return x.verdict->label;
    return std::nullopt;
}

Outcome context_matters() {
    Outcome o;
    auto run = [](const std::string& peers, std::uint64_t seed) {
        ScenarioSpec spec;
        spec.seed = seed;
        spec.n_students = 6;
        spec.phases = {{PhaseKind::lecture, Rational(120)}};
        spec.default_profile = builtin_profile(peers);
        spec.profiles["s00"] = builtin_profile("laptop_typist");
        const auto s = generate_scenario(spec);
        ClassifyOptions opts;
        const auto with = verdict_for(classify_session(s, opts), "s00");
        opts.variant = PromptVariant::context_free;
        const auto without = verdict_for(classify_session(s, opts), "s00");
        return std::pair{with, without};
    };
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto [with, without] = run("engaged", seed);
        o.require(with == Engagement::disengaged, "context-based run did not flag the typist among listeners");
        o.require(without == Engagement::engaged, "context-free run did not label the typist engaged");
        const auto [twin_with, twin_without] = run("laptop_typist", seed);
        o.require(twin_with == Engagement::engaged && twin_without == Engagement::engaged,
                  "peers-also-typing twin not engaged under both variants");
        o.require(run("engaged", seed) == std::pair{with, without}, "not deterministic under seed");
    }
    if (o.pass) o.detail = "listening peers: disengaged vs engaged; typing peers: engaged vs engaged";
    return o;
}

Outcome sequence_vs_histogram() {
    Outcome o;
    ScenarioSpec spec;
    spec.seed = 20267;
    spec.n_students = 4;
    spec.phases = {{PhaseKind::lecture, Rational(120)}};
    spec.profiles["s00"] = builtin_profile("phone_block");
    spec.profiles["s01"] = builtin_profile("phone_checker");
    const auto s = generate_scenario(spec);
    o.require(to_histogram(*s.student("s00")) == to_histogram(*s.student("s01")), "histograms differ");
    ClassifyOptions opts;
    opts.variant = PromptVariant::context_free;
    const auto seq = classify_session(s, opts);
    opts.representation = InputRepresentation::histogram;
    const auto hist = classify_session(s, opts);
    o.require(verdict_for(seq, "s00") != verdict_for(seq, "s01"), "sequence verdicts coincide");
    o.require(verdict_for(seq, "s01") == Engagement::disengaged, "frequent checker not flagged under sequences");
    o.require(verdict_for(hist, "s00") == verdict_for(hist, "s01"), "histogram verdicts differ");
    if (o.pass) o.detail = "sequence: block engaged, checker disengaged; histogram: identical";
    return o;
}

Outcome round_trips() {
    Outcome o;
    int files = 0;
    // written under the working directory, which ctest sets to the build tree
    const std::filesystem::path out = "acceptance_out";
    std::filesystem::create_directories(out);
    for (const auto& entry : std::filesystem::directory_iterator(CLASSENGAGE_FIXTURES_DIR)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() != ".json" || name.starts_with("invalid") || name.starts_with("scenario")) continue;
        const auto s = load_session(entry.path());
        const auto saved = out / name;
        save_session(saved, s);
        const auto back = load_session(saved);
        o.require(back == s && read_text_file(saved) == to_canonical_json(s), "round-trip failed for " + name);
        ++files;
    }
    o.require(files > 0, "no session fixtures found");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScenarioSpec spec;
        spec.seed = seed;
        spec.phases = {{PhaseKind::lecture, Rational(245)}};
        const auto s = generate_scenario(spec);
        const auto saved = out / "generated.json";
        save_session(saved, s);
        o.require(load_session(saved) == s, "round-trip failed for generated seed " + std::to_string(seed));
    }

    const auto dict = default_dictionary();
    Draw d(20268);
    for (int i = 0; i < 1000; ++i) {
        const Rational fps = i % 2 ? Rational(15) : Rational(30000, 1001);
        std::vector<ActionSegment> segs;
        std::int64_t second = 0;
        LabelId prev = -1;
        for (auto k = d.range(1, 12); k > 0; --k) {
            const auto next = second + d.range(1, 120);
            LabelId label;
            do label = static_cast<LabelId>(d.range(0, 12));
            while (label == prev);
            segs.push_back({label, {first_frame_at(second, fps), first_frame_at(next, fps), fps}});
            second = next;
            prev = label;
        }
        const auto seq = ActionSequence::make("x", fps, segs);
        o.require(parse_sequence_text(render_sequence_text(seq, dict), dict, fps, "x") == seq,
                  "text round-trip failed on case " + std::to_string(i));
    }
    if (o.pass) o.detail = std::to_string(files) + " session fixtures, 20 generated sessions, 1000 sequence texts";
    return o;
}

class ScriptedEndpoint final : public ClassifierEndpoint {
public:
    explicit ScriptedEndpoint(std::deque<std::string> script) : script_(std::move(script)) {}
    std::string complete(const ChatRequest&) override {
        ++calls;
        const auto next = script_.front();
        script_.pop_front();
        if (next == "503") throw TransportError("HTTP 503", true);
        return next;
    }
    int calls = 0;

private:
    std::deque<std::string> script_;
};

Outcome endpoint_robustness() {
    Outcome o;
    const auto target = triples({{{2, 0, 1800}}});
    const auto bundle = build_prompt(target, nullptr, default_dictionary(), PromptVariant::context_free);
    std::vector<std::chrono::milliseconds> waits;
    RetryPolicy retry;
    retry.sleep = [&](std::chrono::milliseconds ms) { waits.push_back(ms); };

    ScriptedEndpoint flaky({"503", "503", "Disengaged"});
    const auto v = classify_remote(bundle, flaky, "stub", retry);
    o.require(v.label == Engagement::disengaged && flaky.calls == 3, "transient failures not retried");
    o.require(waits.size() == 2 && waits[0].count() == 250 && waits[1].count() == 500, "unexpected backoff");

    ScriptedEndpoint vague({"I cannot tell", "engaged"});
    try {
        classify_remote(bundle, vague, "stub", retry);
        o.require(false, "unparseable reply accepted");
    } catch (const VerdictParseError& e) {
        o.require(e.raw_response() == "I cannot tell", "raw response lost");
        o.require(vague.calls == 1, "parse error was retried");
        o.require(exit_code_for(e.kind()) == 3, "parse error exit code");
    }
    if (o.pass) o.detail = "2 retries then success; parse error carries the raw reply; no sidecar used";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"metric oracle equivalence", metric_oracle_equivalence},
        {"F1 matching rules", f1_rules},
        {"over-segmentation demonstration", over_segmentation},
        {"objective numerics", objective_numerics},
        {"pipeline identity", pipeline_identity},
        {"context matters", context_matters},
        {"sequence vs histogram separation", sequence_vs_histogram},
        {"round-trips", round_trips},
        {"endpoint robustness", endpoint_robustness},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s  %s (%s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
