// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <deque>

#include "classengage/engagement.hpp"
#include "support/fuzz.hpp"

using namespace classengage;
using classengage::testing::Draw;

namespace {

const ActionDictionary kDict = default_dictionary();

ActionSequence seq(std::initializer_list<std::array<FrameIndex, 3>> t, std::string id = "s00") {
    std::vector<std::array<FrameIndex, 3>> v(t);
    return ActionSequence::from_triples(std::move(id), Rational(15), v);
}

ContextTimeline ctx_of(const ActionSequence& s) { return {s.fps(), s.segments()}; }

LabelId id(std::string_view name) { return kDict.id_of(name); }

class ScriptedEndpoint final : public ClassifierEndpoint {
public:
    struct Step {
        std::string reply;
        int status = 200;  ///< 200 answers, 503 transient, 400 permanent
    };
    explicit ScriptedEndpoint(std::deque<Step> steps) : steps_(std::move(steps)) {}

    std::string complete(const ChatRequest& request) override {
        requests.push_back(request);
        if (steps_.empty()) throw TransportError("script exhausted", false);
        const auto step = steps_.front();
        steps_.pop_front();
        if (step.status == 503) throw TransportError("HTTP 503", true);
        if (step.status != 200) throw TransportError("HTTP " + std::to_string(step.status), false);
        return step.reply;
    }

    std::vector<ChatRequest> requests;

private:
    std::deque<Step> steps_;
};

}  // namespace

TEST_CASE("context-based prompt layout") {
    const auto target = seq({{{id("writing on notebook/tablet"), 0, 300}}, {{id("listening"), 300, 975}}});
    const auto ctx = ctx_of(seq({{{id("listening"), 0, 150}}, {{id("writing on notebook/tablet"), 150, 975}}}, "ctx"));
    const auto b = build_prompt(target, &ctx, kDict, PromptVariant::context_based);
    CHECK(b.input_block ==
          "Student actions: { writing on notebook/tablet (00:00-00:20); listening (00:20-01:05) }\n"
          "Classroom context: { listening (00:00-00:10); writing on notebook/tablet (00:10-01:05) }");
    CHECK(b.full_prompt == b.task_description + std::string(kPromptSeparator) + b.input_block);
    CHECK(b.task_description.find("peer") != std::string::npos);
    CHECK(b.task_description.find("{#context}") == std::string::npos);
    CHECK(b.temperature == 0.1);
    CHECK(b.variant == PromptVariant::context_based);

    const auto again = build_prompt(target, &ctx, kDict, PromptVariant::context_based);
    CHECK(again.full_prompt == b.full_prompt);
}

TEST_CASE("context-free prompt drops only the context") {
    const auto target = seq({{{id("typing on a laptop"), 0, 1800}}});
    const auto ctx = ctx_of(seq({{{id("listening"), 0, 1800}}}, "ctx"));
    const auto with = build_prompt(target, &ctx, kDict, PromptVariant::context_based);
    const auto without = build_prompt(target, nullptr, kDict, PromptVariant::context_free);
    CHECK(without.input_block == "Student actions: { typing on a laptop (00:00-02:00) }");
    CHECK(without.full_prompt.find("Classroom context") == std::string::npos);
    CHECK(without.full_prompt.find("peer") == std::string::npos);
    CHECK(without.full_prompt.find("context") == std::string::npos);
    // a context passed to the context-free variant is ignored
    CHECK(build_prompt(target, &ctx, kDict, PromptVariant::context_free).full_prompt == without.full_prompt);
    // the shared instructions are identical
    CHECK(with.task_description.find("Respond with exactly one word: engaged or disengaged.") != std::string::npos);
    CHECK(without.task_description.find("Respond with exactly one word: engaged or disengaged.") != std::string::npos);

    try {
        build_prompt(target, nullptr, kDict, PromptVariant::context_based);
        FAIL("expected context_required");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::context_required);
    }
}

TEST_CASE("histogram prompt") {
    const auto target = seq({{{id("listening"), 0, 900}}, {{id("playing with mobile phone"), 900, 1800}}});
    const auto b = build_prompt(target, nullptr, kDict, PromptVariant::context_free, InputRepresentation::histogram);
    CHECK(b.input_block == "Student actions: { playing with mobile phone: 01:00; listening: 01:00 }");
}

TEST_CASE("custom templates") {
    PromptTemplate t{"test", "Task{#context} with context{/context}.\n", "A={STUDENT_ACTIONS}{#context} C={CLASSROOM_CONTEXT}{/context}\n"};
    const auto target = seq({{{id("listening"), 0, 15}}});
    const auto ctx = ctx_of(seq({{{id("reading"), 0, 15}}}, "c"));
    CHECK(build_prompt(target, &ctx, kDict, PromptVariant::context_based, InputRepresentation::sequence, t).full_prompt ==
          "Task with context.\n\nA=listening (00:00-00:01) C=reading (00:00-00:01)");
    CHECK(build_prompt(target, nullptr, kDict, PromptVariant::context_free, InputRepresentation::sequence, t).full_prompt ==
          "Task.\n\nA=listening (00:00-00:01)");
    PromptTemplate broken{"bad", "x{#context}y", "z"};
    CHECK_THROWS_AS(build_prompt(target, nullptr, kDict, PromptVariant::context_free, InputRepresentation::sequence, broken),
                    Error);
}

TEST_CASE("parse_verdict examples") {
    auto v = parse_verdict("disengaged");
    CHECK(v.label == Engagement::disengaged);
    CHECK(v.confidence == ParseConfidence::exact);
    v = parse_verdict("  Engaged\n");
    CHECK(v.label == Engagement::engaged);
    CHECK(v.confidence == ParseConfidence::exact);
    v = parse_verdict("ENGAGED.");
    CHECK(v.label == Engagement::engaged);
    CHECK(v.confidence == ParseConfidence::extracted);
    v = parse_verdict("The student is Engaged because they take notes.");
    CHECK(v.label == Engagement::engaged);
    CHECK(v.confidence == ParseConfidence::extracted);
    CHECK(parse_verdict("the peers are engaged but this student is disengaged").label == Engagement::disengaged);
    CHECK(parse_verdict("Not engaged").label == Engagement::disengaged);
    CHECK(parse_verdict("dis-engaged").label == Engagement::disengaged);
    CHECK(parse_verdict("Dis Engaged!").label == Engagement::disengaged);
    try {
        parse_verdict("maybe");
        FAIL("expected VerdictParseError");
    } catch (const VerdictParseError& e) {
        CHECK(e.raw_response() == "maybe");
        CHECK(e.kind() == ErrorKind::verdict_parse);
    }
    CHECK_THROWS_AS(parse_verdict("engagement was high"), VerdictParseError);
    CHECK_THROWS_AS(parse_verdict(""), VerdictParseError);
}

TEST_CASE("a disengaged token always wins") {
    Draw d(61);
    const std::vector<std::string> filler{"the", "student", "engaged", "is", "seems", "peers", "Engaged,", "very", "\n", "(", "ok"};
    const std::vector<std::string> forms{"disengaged", "DISENGAGED", "Dis-engaged", "not engaged", "Not-Engaged", "unengaged"};
    for (int i = 0; i < 1000; ++i) {
        std::string s;
        const auto words = d.range(0, 12);
        const auto at = d.range(0, words);
        for (std::int64_t w = 0; w <= words; ++w) {
            if (w == at) s += forms[static_cast<std::size_t>(d.range(0, static_cast<std::int64_t>(forms.size()) - 1))];
            else s += filler[static_cast<std::size_t>(d.range(0, static_cast<std::int64_t>(filler.size()) - 1))];
            s += d.range(0, 3) == 0 ? "" : " ";
        }
        CHECK_MESSAGE(parse_verdict(s).label == Engagement::disengaged, s);
    }
}

TEST_CASE("classify_remote sends the prompt and retries transient failures") {
    const auto target = seq({{{id("listening"), 0, 1800}}});
    const auto bundle = build_prompt(target, nullptr, kDict, PromptVariant::context_free);
    std::vector<std::chrono::milliseconds> waits;
    RetryPolicy retry;
    retry.sleep = [&](std::chrono::milliseconds ms) { waits.push_back(ms); };

    ScriptedEndpoint ok({{"disengaged"}});
    auto v = classify_remote(bundle, ok, "m", retry);
    CHECK(v.label == Engagement::disengaged);
    CHECK(v.confidence == ParseConfidence::exact);
    REQUIRE(ok.requests.size() == 1);
    CHECK(ok.requests[0].content == bundle.full_prompt);
    CHECK(ok.requests[0].temperature == 0.1);
    CHECK(ok.requests[0].model == "m");

    ScriptedEndpoint flaky({{"", 503}, {"", 503}, {"Engaged"}});
    v = classify_remote(bundle, flaky, "m", retry);
    CHECK(v.label == Engagement::engaged);
    CHECK(flaky.requests.size() == 3);
    CHECK(waits == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(250), std::chrono::milliseconds(500)});

    waits.clear();
    ScriptedEndpoint down({{"", 503}, {"", 503}, {"", 503}, {"engaged"}});
    try {
        classify_remote(bundle, down, "m", retry);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.transient());
    }
    CHECK(down.requests.size() == 3);

    ScriptedEndpoint refused({{"", 400}, {"engaged"}});
    CHECK_THROWS_AS(classify_remote(bundle, refused, "m", retry), TransportError);
    CHECK(refused.requests.size() == 1);

    ScriptedEndpoint vague({{"maybe"}, {"engaged"}});
    try {
        classify_remote(bundle, vague, "m", retry);
        FAIL("expected VerdictParseError");
    } catch (const VerdictParseError& e) {
        CHECK(e.raw_response() == "maybe");
    }
    CHECK(vague.requests.size() == 1);
}

TEST_CASE("baseline examples") {
    const auto params = BaselineParams::defaults(kDict);
    const auto listening = seq({{{id("listening"), 0, 1800}}});
    const auto typing = seq({{{id("typing on a laptop"), 0, 1800}}});
    const auto phone = seq({{{id("playing with mobile phone"), 0, 1800}}});
    const auto ctx_listen = ctx_of(seq({{{id("listening"), 0, 1800}}}, "c"));
    const auto ctx_type = ctx_of(seq({{{id("typing on a laptop"), 0, 1800}}}, "c"));
    const auto ctx_phone = ctx_of(seq({{{id("playing with mobile phone"), 0, 1800}}}, "c"));

    for (const auto* c : {&ctx_listen, &ctx_type, &ctx_phone})
        CHECK(classify_baseline(listening, c, kDict, params).label == Engagement::engaged);
    CHECK(classify_baseline(listening, nullptr, kDict, params).label == Engagement::engaged);
    CHECK(classify_baseline(phone, nullptr, kDict, params).label == Engagement::disengaged);
    CHECK(classify_baseline(phone, &ctx_phone, kDict, params).label == Engagement::disengaged);

    BaselineTrace t;
    CHECK(classify_baseline(typing, &ctx_listen, kDict, params, &t).label == Engagement::disengaged);
    CHECK(t.on_task_fraction == doctest::Approx(0.60));
    CHECK(t.context_used);
    CHECK(classify_baseline(typing, &ctx_type, kDict, params, &t).label == Engagement::engaged);
    CHECK(t.on_task_fraction == doctest::Approx(0.90));
    CHECK(classify_baseline(typing, nullptr, kDict, params, &t).label == Engagement::engaged);
    CHECK(t.on_task_fraction == doctest::Approx(0.75));
    CHECK_FALSE(t.context_used);
}

TEST_CASE("baseline counts short off-task runs") {
    const auto params = BaselineParams::defaults(kDict);
    const auto w = id("writing on notebook/tablet");
    const auto p = id("playing with mobile phone");
    const auto side = id("looking to the side/back");
    BaselineTrace t;

    // one 25 s block
    auto block = seq({{{w, 0, 675}}, {{p, 675, 1050}}, {{w, 1050, 1800}}});
    CHECK(classify_baseline(block, nullptr, kDict, params, &t).label == Engagement::engaged);
    CHECK(t.short_interruptions == 0);

    // five 5 s checks, same histogram
    std::vector<std::array<FrameIndex, 3>> checks;
    FrameIndex cursor = 0;
    for (int k = 0; k < 5; ++k) {
        checks.push_back({w, cursor, cursor + 225});
        checks.push_back({p, cursor + 225, cursor + 300});
        cursor += 300;
    }
    checks.push_back({w, cursor, 1800});
    const auto checker = ActionSequence::from_triples("s", Rational(15), checks);
    CHECK(to_histogram(checker) == to_histogram(block));
    CHECK(classify_baseline(checker, nullptr, kDict, params, &t).label == Engagement::disengaged);
    CHECK(t.short_interruptions == 5);

    // adjacent off-task labels form one run
    auto merged_run = seq({{{w, 0, 600}}, {{p, 600, 750}}, {{side, 750, 1000}}, {{w, 1000, 1800}}});
    classify_baseline(merged_run, nullptr, kDict, params, &t);
    CHECK(t.short_interruptions == 0);

    // a short trailing run counts too
    auto trailing = seq({{{w, 0, 1700}}, {{p, 1700, 1800}}});
    classify_baseline(trailing, nullptr, kDict, params, &t);
    CHECK(t.short_interruptions == 1);

    // histogram input cannot see the interleaving
    CHECK(classify_baseline(to_histogram(checker), nullptr, kDict, params).label == Engagement::engaged);
    CHECK(classify_baseline(to_histogram(block), nullptr, kDict, params).label == Engagement::engaged);
}

TEST_CASE("histogram baseline uses context overlap by label") {
    const auto params = BaselineParams::defaults(kDict);
    const auto typing = to_histogram(seq({{{id("typing on a laptop"), 0, 1800}}}));
    const auto listen = to_histogram(seq({{{id("listening"), 0, 1800}}}));
    BaselineTrace t;
    CHECK(classify_baseline(typing, &listen, kDict, params, &t).label == Engagement::disengaged);
    CHECK(t.on_task_fraction == doctest::Approx(0.60));
    CHECK(classify_baseline(typing, &typing, kDict, params, &t).label == Engagement::engaged);
    CHECK(t.on_task_fraction == doctest::Approx(0.90));
}
