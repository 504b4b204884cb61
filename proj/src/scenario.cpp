// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

// Synthetic classroom sessions: phase-driven behavior profiles plus scripted
// patterns (frequent phone checks vs one contiguous block).

#include <cmath>
#include <cstdio>
#include <random>

#include "classengage/dataio.hpp"

namespace classengage {

using nlohmann::json;

const char* to_string(PhaseKind k) noexcept {
    switch (k) {
        case PhaseKind::lecture: return "lecture";
        case PhaseKind::peer_discussion: return "peer_discussion";
        case PhaseKind::independent_work: return "independent_work";
    }
    return "lecture";
}

PhaseKind parse_phase_kind(std::string_view s) {
    if (s == "lecture") return PhaseKind::lecture;
    if (s == "peer_discussion") return PhaseKind::peer_discussion;
    if (s == "independent_work") return PhaseKind::independent_work;
    throw Error(ErrorKind::data, "unknown phase kind '" + std::string(s) + "'");
}

std::string scenario_student_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%02d", index);
    return buf;
}

BehaviorProfile builtin_profile(std::string_view name) {
    BehaviorProfile p;
    p.name = std::string(name);
    const auto all_phases = [&](const PhaseBehavior& b) {
        for (auto k : {PhaseKind::lecture, PhaseKind::peer_discussion, PhaseKind::independent_work}) p.phases[k] = b;
    };
    if (name == "engaged") {
        p.phases[PhaseKind::lecture] = {
            {{"listening", 0.6}, {"writing on notebook/tablet", 0.3}, {"reading", 0.05}, {"raising hand", 0.05}},
            Rational(20), Engagement::engaged};
        p.phases[PhaseKind::peer_discussion] = {
            {{"looking to the side/back", 0.4}, {"listening", 0.3}, {"writing on notebook/tablet", 0.3}},
            Rational(15), Engagement::engaged};
        p.phases[PhaseKind::independent_work] = {
            {{"writing on notebook/tablet", 0.4}, {"typing on a laptop", 0.3}, {"reading", 0.3}},
            Rational(20), Engagement::engaged};
    } else if (name == "disengaged") {
        all_phases({{{"playing with mobile phone", 0.5},
                     {"looking down w/o reading/writing", 0.2},
                     {"looking to the side/back", 0.2},
                     {"yawning", 0.1}},
                    Rational(15), Engagement::disengaged});
    } else if (name == "laptop_typist") {
        all_phases({{{"typing on a laptop", 1.0}}, Rational(120), Engagement::disengaged});
        p.phases[PhaseKind::independent_work].engagement = Engagement::engaged;
    } else if (name == "phone_checker") {
        p.pattern = PlantedPattern{"writing on notebook/tablet", "playing with mobile phone", 5, Rational(5), Engagement::disengaged};
    } else if (name == "phone_block") {
        p.pattern = PlantedPattern{"writing on notebook/tablet", "playing with mobile phone", 1, Rational(25), Engagement::engaged};
    } else {
        throw Error(ErrorKind::data, "unknown behavior profile '" + std::string(name) + "'");
    }
    return p;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// mt19937_64's output sequence is fixed by the standard; the distributions are not,
// so draws are derived from raw outputs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    std::int64_t below(std::int64_t n) { return n <= 1 ? 0 : static_cast<std::int64_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 gen_;
};

FrameIndex exact_frames(Rational seconds, Rational fps, const std::string& what) {
    const auto prod = seconds * fps;
    if (!prod.integral()) throw Error(ErrorKind::data, what + " (" + seconds.str() + " s) is not a whole number of frames");
    return prod.num;
}

struct ResolvedBehavior {
    std::vector<std::pair<LabelId, double>> weights;
    FrameIndex mean_slots = 1;
    Engagement engagement = Engagement::engaged;
};

ResolvedBehavior resolve(const PhaseBehavior& b, const ActionDictionary& dict, FrameIndex align, Rational fps,
                         const std::string& where) {
    ResolvedBehavior r;
    double sum = 0.0;
    for (const auto& [name, w] : b.propensities) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::data, where + ": negative propensity for '" + name + "'");
        const auto id = dict.find(name);
        if (!id) throw Error(ErrorKind::dictionary_mismatch, where + ": unknown action '" + name + "'");
        if (w > 0.0) r.weights.emplace_back(*id, w);
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw Error(ErrorKind::data, where + ": propensities sum to " + std::to_string(sum) + ", expected 1");
    r.mean_slots = std::max<FrameIndex>(1, frames_in(b.mean_segment_seconds, fps) / align);
    r.engagement = b.engagement;
    return r;
}

LabelId draw_label(Rng& rng, const ResolvedBehavior& b, LabelId previous) {
    double mass = 0.0;
    for (const auto& [id, w] : b.weights)
        if (id != previous) mass += w;
    if (mass <= 0.0) return b.weights.front().first;
    double u = rng.uniform() * mass;
    LabelId last = previous;
    for (const auto& [id, w] : b.weights) {
        if (id == previous) continue;
        last = id;
        if (u < w) return id;
        u -= w;
    }
    return last;
}

FrameIndex draw_slots(Rng& rng, FrameIndex mean_slots) {
    if (mean_slots <= 1) return 1;
    // 1 + geometric failures with mean (mean_slots - 1)
    const double p = 1.0 / static_cast<double>(mean_slots);
    const double u = std::max(rng.uniform(), 1e-300);
    return 1 + static_cast<FrameIndex>(std::floor(std::log(u) / std::log1p(-p)));
}

std::vector<ActionSegment> planted_window(Rng& rng, const PlantedPattern& pat, const ActionDictionary& dict, FrameIndex begin,
                                          FrameIndex end, FrameIndex align, Rational fps, const std::string& sid) {
    const auto base = dict.id_of(pat.base_label);
    const auto off = dict.id_of(pat.off_label);
    const auto block = exact_frames(pat.block_seconds, fps, "pattern block");
    if (block % align != 0 || block <= 0) throw Error(ErrorKind::data, sid + ": pattern block is not a multiple of the alignment");
    const auto slots = (end - begin) / align;
    const auto block_slots = block / align;
    const auto blocks = static_cast<FrameIndex>(pat.blocks);

    std::vector<FrameIndex> starts;  // in slots relative to begin
    if (blocks == 1) {
        if (block_slots > slots) throw Error(ErrorKind::data, sid + ": pattern block longer than the window");
        starts.push_back(rng.below(2) == 0 ? 0 : slots - block_slots);
    } else if (blocks > 1) {
        const auto stride = slots / blocks;
        if (stride < block_slots + 1) throw Error(ErrorKind::data, sid + ": pattern blocks do not fit in the window");
        const auto offset = rng.below(stride - block_slots + 1);
        for (FrameIndex b = 0; b < blocks; ++b) starts.push_back(offset + b * stride);
    }

    std::vector<ActionSegment> segs;
    FrameIndex cursor = begin;
    for (auto s : starts) {
        const auto lo = begin + s * align;
        const auto hi = lo + block;
        if (lo > cursor) segs.push_back({base, {cursor, lo, fps}});
        segs.push_back({off, {lo, hi, fps}});
        cursor = hi;
    }
    if (cursor < end) segs.push_back({base, {cursor, end, fps}});
    return segs;
}

}  // namespace

SessionFile generate_scenario(const ScenarioSpec& spec, const ActionDictionary& dict) {
    if (spec.n_students < 1) throw Error(ErrorKind::data, "scenario needs at least one student");
    if (spec.phases.empty()) throw Error(ErrorKind::data, "scenario needs at least one phase");
    const auto fps = spec.fps;
    const auto align = exact_frames(spec.align_seconds, fps, "alignment");
    const auto window = exact_frames(spec.window_seconds, fps, "window length");
    if (window % align != 0) throw Error(ErrorKind::data, "window length is not a multiple of the alignment");

    struct PhaseRange {
        PhaseKind kind;
        FrameIndex begin, end;
    };
    std::vector<PhaseRange> phases;
    FrameIndex total = 0;
    for (const auto& ph : spec.phases) {
        const auto len = exact_frames(ph.seconds, fps, std::string("phase ") + to_string(ph.kind));
        if (len % align != 0) throw Error(ErrorKind::data, std::string("phase ") + to_string(ph.kind) + " is not a multiple of the alignment");
        phases.push_back({ph.kind, total, total + len});
        total += len;
    }

    SessionFile session;
    session.fps = fps;
    session.window_seconds = spec.window_seconds;
    session.dictionary = dict;

    for (FrameIndex start = 0, i = 0; start < total; start += window, ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "w%03lld", static_cast<long long>(i));
        session.windows.push_back({id, start, {}});
    }

    for (int s = 0; s < spec.n_students; ++s) {
        const auto sid = scenario_student_id(s);
        const auto it = spec.profiles.find(sid);
        const auto& profile = it == spec.profiles.end() ? spec.default_profile : it->second;
        Rng rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(s) + 1)));

        std::vector<ActionSegment> segs;
        std::vector<Engagement> per_window;
        if (profile.pattern) {
            for (const auto& w : session.windows) {
                const auto end = std::min(w.start_frame + window, total);
                auto part = planted_window(rng, *profile.pattern, dict, w.start_frame, end, align, fps, sid);
                segs.insert(segs.end(), part.begin(), part.end());
                per_window.push_back(profile.pattern->engagement);
            }
        } else {
            std::map<PhaseKind, ResolvedBehavior> resolved;
            for (const auto& ph : phases) {
                if (resolved.contains(ph.kind)) continue;
                const auto b = profile.phases.find(ph.kind);
                if (b == profile.phases.end())
                    throw Error(ErrorKind::data, sid + ": profile '" + profile.name + "' has no behavior for phase " + to_string(ph.kind));
                resolved[ph.kind] = resolve(b->second, dict, align, fps, sid + "/" + to_string(ph.kind));
            }
            LabelId previous = -1;
            for (const auto& ph : phases) {
                const auto& b = resolved[ph.kind];
                for (FrameIndex cursor = ph.begin; cursor < ph.end;) {
                    const auto label = draw_label(rng, b, previous);
                    const auto len = std::min(draw_slots(rng, b.mean_slots) * align, ph.end - cursor);
                    segs.push_back({label, {cursor, cursor + len, fps}});
                    cursor += len;
                    previous = label;
                }
            }
            for (const auto& w : session.windows) {
                const auto end = std::min(w.start_frame + window, total);
                FrameIndex best_overlap = -1;
                Engagement label = Engagement::engaged;
                for (const auto& ph : phases) {
                    const auto overlap = std::min(end, ph.end) - std::max(w.start_frame, ph.begin);
                    if (overlap > best_overlap) {
                        best_overlap = overlap;
                        label = resolved[ph.kind].engagement;
                    }
                }
                per_window.push_back(label);
            }
        }
        session.students.push_back(ActionSequence::make(sid, fps, std::move(segs)));
        for (std::size_t w = 0; w < session.windows.size(); ++w) session.windows[w].engagement[sid] = per_window[w];
    }
    canonicalize(session);
    return session;
}

// ---------------------------------------------------------------------------

namespace {

Rational rational_field(const json& obj, const char* key, Rational fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_string()) return Rational::parse(v.get<std::string>());
    throw Error(ErrorKind::schema, std::string("scenario field '") + key + "' must be an integer or \"num/den\"");
}

Engagement engagement_field(const json& obj, Engagement fallback) {
    if (!obj.contains("engagement")) return fallback;
    const auto e = parse_engagement(obj["engagement"].get<std::string>());
    if (!e) throw Error(ErrorKind::schema, "scenario engagement must be \"engaged\" or \"disengaged\"");
    return *e;
}

BehaviorProfile parse_profile(const json& v, const std::string& where) {
    if (v.is_string()) return builtin_profile(v.get<std::string>());
    if (!v.is_object()) throw Error(ErrorKind::schema, where + ": profile must be a name or an object");
    BehaviorProfile p;
    p.name = v.value("name", where);
    if (v.contains("phases")) {
        for (const auto& [kind, b] : v["phases"].items()) {
            PhaseBehavior pb;
            for (const auto& [name, w] : b.at("propensities").items()) pb.propensities[name] = w.get<double>();
            pb.mean_segment_seconds = rational_field(b, "mean_segment_seconds", Rational(20));
            pb.engagement = engagement_field(b, Engagement::engaged);
            p.phases[parse_phase_kind(kind)] = std::move(pb);
        }
    }
    if (v.contains("pattern")) {
        const auto& pj = v["pattern"];
        PlantedPattern pat;
        pat.base_label = pj.at("base_label").get<std::string>();
        pat.off_label = pj.at("off_label").get<std::string>();
        pat.blocks = pj.value("blocks", 1);
        pat.block_seconds = rational_field(pj, "block_seconds", Rational(25));
        pat.engagement = engagement_field(pj, Engagement::engaged);
        p.pattern = std::move(pat);
    }
    if (p.phases.empty() && !p.pattern) throw Error(ErrorKind::schema, where + ": profile defines neither phases nor a pattern");
    return p;
}

}  // namespace

ScenarioSpec parse_scenario(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::schema, std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::schema, "scenario must be a JSON object");
    try {
        ScenarioSpec s;
        s.seed = doc.value("seed", std::uint64_t{0});
        s.n_students = doc.value("n_students", 6);
        s.fps = rational_field(doc, "fps", Rational(15));
        s.window_seconds = rational_field(doc, "window_seconds", Rational(120));
        s.align_seconds = rational_field(doc, "align_seconds", Rational(5));
        if (doc.contains("phases")) {
            s.phases.clear();
            for (const auto& ph : doc["phases"])
                s.phases.push_back({parse_phase_kind(ph.at("kind").get<std::string>()), rational_field(ph, "seconds", Rational(120))});
        }
        if (doc.contains("default_profile")) s.default_profile = parse_profile(doc["default_profile"], "default_profile");
        if (doc.contains("profiles"))
            for (const auto& [sid, p] : doc["profiles"].items()) s.profiles[sid] = parse_profile(p, "profiles/" + sid);
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::schema, std::string("scenario: ") + e.what());
    }
}

}  // namespace classengage
