// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <mutex>

#include "classengage/pipeline.hpp"
#include "support/fuzz.hpp"

using namespace classengage;
using classengage::testing::Draw;

namespace {

std::filesystem::path fixture(const char* name) { return std::filesystem::path(CLASSENGAGE_FIXTURES_DIR) / name; }

SessionFile generated(std::uint64_t seed, int students = 4) {
    ScenarioSpec spec;
    spec.seed = seed;
    spec.n_students = students;
    spec.phases = {{PhaseKind::lecture, Rational(240)}, {PhaseKind::independent_work, Rational(185)}};
    spec.profiles["s01"] = builtin_profile("disengaged");
    return generate_scenario(spec);
}

/// Replies by keyword so concurrent calls stay deterministic.
class KeywordEndpoint final : public ClassifierEndpoint {
public:
    std::string complete(const ChatRequest& request) override {
        ++calls;
        if (request.content.find("yawning") != std::string::npos) return "not sure";
        if (request.content.find("playing with mobile phone") != std::string::npos) return "Disengaged.";
        return "engaged";
    }
    std::atomic<int> calls{0};
};

class FailingRecognizer final : public RecognizerPort {
public:
    explicit FailingRecognizer(OracleRecognizer inner, std::string bad) : inner_(std::move(inner)), bad_(std::move(bad)) {}
    RecognizerVerdict recognize(const ClipRequest& clip) override {
        if (clip.student_id == bad_) throw TransportError("HTTP 400", false);
        return inner_.recognize(clip);
    }

private:
    OracleRecognizer inner_;
    std::string bad_;
};

}  // namespace

TEST_CASE("oracle parsing reproduces grid-aligned ground truth") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = generated(seed);
        auto oracle = make_oracle(s);
        const auto parsed = parse_session_sequences(s, oracle, WindowingConfig{});
        REQUIRE(parsed.size() == 4 * 4);
        for (std::size_t i = 1; i < parsed.size(); ++i)
            CHECK(std::tie(parsed[i - 1].window_id, parsed[i - 1].student_id) <
                  std::tie(parsed[i].window_id, parsed[i].student_id));
        for (const auto& p : parsed) CHECK(p.predicted == p.ground_truth);
        CHECK(parsed.back().partial);
        CHECK(parsed.back().predicted.length() == 65 * 15);
        CHECK(with_predictions(s, parsed) == s);

        const auto report = evaluate_segmentation(parsed, s.dictionary);
        CHECK(report.aggregate.pooled.mof == 100.0);
        CHECK(report.aggregate.pooled.edit == 100.0);
        for (const auto& [tau, v] : report.aggregate.pooled.f1_at) CHECK(v == 100.0);
    }
}

TEST_CASE("off-grid boundaries are quantized to segments") {
    auto s = load_session(fixture("minimal_session.json"));
    auto oracle = make_oracle(s);
    const auto parsed = parse_session_sequences(s, oracle, WindowingConfig{});
    REQUIRE(parsed.size() == 6);
    for (const auto& p : parsed) CHECK(p.predicted.length() == p.ground_truth.length());
    // the 4 s window is one segment, split 30/30 between writing and listening; the tie goes to writing
    const auto& w0s1 = parsed[1];
    CHECK(w0s1.student_id == "s1");
    CHECK(w0s1.predicted.size() == 1);
    CHECK(w0s1.ground_truth.size() == 2);
    CHECK(w0s1.predicted.segments()[0].label == 1);
    const auto report = evaluate_segmentation(parsed, s.dictionary);
    CHECK(report.windows[1].report.mof == 50.0);
    CHECK(report.aggregate.pooled.mof < 100.0);
}

TEST_CASE("recognition failures name the window and student") {
    const auto s = generated(3);
    FailingRecognizer rec(make_oracle(s), "s02");
    try {
        parse_session_sequences(s, rec, WindowingConfig{});
        FAIL("expected a recognition error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::recognition);
        CHECK(std::string(e.what()).find("window w000, student s02") != std::string::npos);
    }
}

TEST_CASE("pairing a prediction session with its reference") {
    const auto s = generated(4);
    const auto pairs = pair_sessions(s, s);
    CHECK(pairs.size() == 16);
    for (const auto& p : pairs) CHECK(p.predicted == p.ground_truth);

    const auto other = generated(5);
    const auto cross = evaluate_segmentation(pair_sessions(other, s), s.dictionary);
    CHECK(cross.aggregate.pooled.mof < 100.0);
    CHECK(cross.aggregate.windows == 16);

    auto shorter = s;
    shorter.window_seconds = Rational(60);
    CHECK_THROWS_AS(pair_sessions(shorter, s), Error);
}

TEST_CASE("merge groups in segmentation scoring") {
    const auto s = load_session(fixture("merge_session.json"));
    // predict "reading" where the reference says "writing" and keep the rest
    auto pred = s;
    pred.students[0] = ActionSequence::from_triples(
        "a", Rational(15), std::vector<std::array<FrameIndex, 3>>{{2, 0, 60}, {3, 60, 120}});
    const auto pairs = pair_sessions(pred, s);
    const auto plain = evaluate_segmentation(pairs, s.dictionary, false);
    const auto merged = evaluate_segmentation(pairs, s.dictionary, true);
    CHECK(plain.windows[0].report.mof == 50.0);
    CHECK(merged.windows[0].report.mof == 100.0);
    CHECK(merged.aggregate.pooled.mof == 100.0);
}

TEST_CASE("classify_session with the baseline") {
    const auto s = generated(6);
    ClassifyOptions opts;
    const auto with = classify_session(s, opts);
    opts.variant = PromptVariant::context_free;
    const auto without = classify_session(s, opts);
    REQUIRE(with.size() == 16);
    REQUIRE(without.size() == 16);
    const auto windows = build_windows(s);
    for (std::size_t i = 0; i < with.size(); ++i) {
        CHECK(with[i].window_id == without[i].window_id);
        CHECK(with[i].student_id == without[i].student_id);
        CHECK_FALSE(with[i].error.has_value());
        CHECK(with[i].context_used);
        CHECK_FALSE(without[i].context_used);
        CHECK(with[i].prompt.find("Classroom context") != std::string::npos);
        CHECK(without[i].prompt.find("Classroom context") == std::string::npos);
        CHECK(with[i].ground_truth.has_value());
    }
    // the context-free prompt is exactly the shared builder with no context
    const auto& cw = windows.front();
    CHECK(without.front().prompt == build_prompt(cw.target, nullptr, s.dictionary, PromptVariant::context_free).full_prompt);
    const auto report = evaluate_verdicts(with);
    REQUIRE(report.has_value());
    CHECK(report->total == 16);
    CHECK(report->accuracy > 0.5);
}

TEST_CASE("classify_session over the remote path") {
    const auto s = generated(7);
    KeywordEndpoint endpoint;
    ClassifyOptions opts;
    opts.mode = ClassifierMode::remote;
    opts.remote = {&endpoint, "m", {}};
    opts.remote.retry.sleep = [](std::chrono::milliseconds) {};
    const auto out = classify_session(s, opts);
    CHECK(endpoint.calls == 16);
    int parse_errors = 0;
    for (const auto& v : out) {
        if (v.error) {
            CHECK(*v.error == ErrorKind::verdict_parse);
            CHECK(v.error_message.find("not sure") != std::string::npos);
            CHECK_FALSE(v.verdict.has_value());
            ++parse_errors;
        } else {
            REQUIRE(v.verdict.has_value());
            const bool phone = v.prompt.find("playing with mobile phone") != std::string::npos;
            CHECK((v.verdict->label == Engagement::disengaged) == phone);
        }
    }
    CHECK(parse_errors > 0);

    opts.remote.endpoint = nullptr;
    try {
        classify_session(s, opts);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}

TEST_CASE("classify_session separates sequence and histogram inputs") {
    ScenarioSpec spec;
    spec.seed = 21;
    spec.n_students = 3;
    spec.phases = {{PhaseKind::lecture, Rational(240)}};
    spec.profiles["s00"] = builtin_profile("phone_checker");
    spec.profiles["s01"] = builtin_profile("phone_block");
    const auto s = generate_scenario(spec);
    ClassifyOptions opts;
    opts.variant = PromptVariant::context_free;
    auto verdict = [](const std::vector<WindowVerdict>& v, const std::string& window, const std::string& sid) {
        for (const auto& x : v)
            if (x.window_id == window && x.student_id == sid) return x.verdict->label;
        FAIL("missing verdict");
        return Engagement::engaged;
    };
    const auto seq = classify_session(s, opts);
    opts.representation = InputRepresentation::histogram;
    const auto hist = classify_session(s, opts);
    for (const auto* w : {"w000", "w001"}) {
        CHECK(verdict(seq, w, "s00") == Engagement::disengaged);
        CHECK(verdict(seq, w, "s01") == Engagement::engaged);
        CHECK(verdict(hist, w, "s00") == verdict(hist, w, "s01"));
    }
    CHECK(hist.front().prompt.find("playing with mobile phone: 00:25") != std::string::npos);
}

TEST_CASE("concurrency does not change results") {
    const auto s = generated(8, 6);
    ClassifyOptions opts;
    opts.window_concurrency = 1;
    const auto serial = classify_session(s, opts);
    opts.window_concurrency = 8;
    const auto wide = classify_session(s, opts);
    REQUIRE(serial.size() == wide.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].prompt == wide[i].prompt);
        CHECK(serial[i].verdict->label == wide[i].verdict->label);
    }
    auto oracle = make_oracle(s);
    CHECK(parse_session_sequences(s, oracle, WindowingConfig{}, 1).size() ==
          parse_session_sequences(s, oracle, WindowingConfig{}, 8).size());
}
