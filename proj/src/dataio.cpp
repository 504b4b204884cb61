// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace classengage {

using nlohmann::json;

const ActionSequence* SessionFile::student(std::string_view id) const {
    for (const auto& s : students)
        if (s.student_id() == id) return &s;
    return nullptr;
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorKind::schema, path + ": " + msg);
}

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(path, std::string("missing field '") + key + "'");
    return *it;
}

std::int64_t as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) schema_error(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) schema_error(path, "expected a string");
    return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
    if (!v.is_array()) schema_error(path, "expected an array");
    return v;
}

Rational as_rational(const json& v, const std::string& path) {
    try {
        if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
        if (v.is_string()) return Rational::parse(v.get<std::string>());
    } catch (const Error& e) {
        schema_error(path, e.what());
    }
    schema_error(path, "expected a positive integer or \"num/den\" string");
}

json rational_json(const Rational& r) {
    if (r.integral()) return r.num;
    return r.str();
}

}  // namespace

void canonicalize(SessionFile& s) {
    if (s.schema_version != kSessionSchemaVersion)
        schema_error("/schema_version", "unsupported schema version " + std::to_string(s.schema_version));
    if (s.students.empty()) schema_error("/students", "session has no students");

    std::sort(s.students.begin(), s.students.end(),
              [](const ActionSequence& a, const ActionSequence& b) { return a.student_id() < b.student_id(); });
    std::set<std::string> ids;
    const auto total = s.students.front().length();
    for (const auto& st : s.students) {
        if (st.student_id().empty()) schema_error("/students", "empty student_id");
        if (!ids.insert(st.student_id()).second) schema_error("/students", "duplicate student_id '" + st.student_id() + "'");
        if (st.fps() != s.fps) schema_error("/students/" + st.student_id(), "fps differs from session fps");
        if (st.length() != total)
            throw Error(ErrorKind::contiguity, "student '" + st.student_id() + "' covers " + std::to_string(st.length()) +
                                                   " frames, expected " + std::to_string(total));
        check_labels(st, s.dictionary);
    }

    const auto wf = s.window_frames();
    if (wf <= 0) schema_error("/window_seconds", "window shorter than one frame");
    std::sort(s.windows.begin(), s.windows.end(),
              [](const WindowAnnotation& a, const WindowAnnotation& b) { return a.start_frame < b.start_frame; });
    std::set<std::string> window_ids;
    for (std::size_t i = 0; i < s.windows.size(); ++i) {
        const auto& w = s.windows[i];
        const auto path = "/windows/" + w.window_id;
        if (!window_ids.insert(w.window_id).second) schema_error(path, "duplicate window_id");
        if (w.start_frame < 0 || w.start_frame >= total) schema_error(path, "start_frame outside the session");
        if (w.start_frame % wf != 0)
            schema_error(path, "start_frame " + std::to_string(w.start_frame) + " is not on a window boundary");
        if (i > 0 && w.start_frame == s.windows[i - 1].start_frame) schema_error(path, "two windows share a start_frame");
        for (const auto& [sid, label] : w.engagement)
            if (!ids.contains(sid)) schema_error(path, "engagement for unknown student '" + sid + "'");
    }
}

SessionFile parse_session(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::schema, std::string("session is not valid JSON: ") + e.what());
    }
    SessionFile s;
    s.schema_version = static_cast<int>(as_int(field(doc, "schema_version", ""), "/schema_version"));
    if (s.schema_version != kSessionSchemaVersion)
        schema_error("/schema_version", "unsupported schema version " + std::to_string(s.schema_version));
    s.fps = as_rational(field(doc, "fps", ""), "/fps");
    s.window_seconds = as_rational(field(doc, "window_seconds", ""), "/window_seconds");

    const auto& dict = field(doc, "dictionary", "");
    std::vector<std::string> names;
    const auto& labels = as_array(field(dict, "labels", "/dictionary"), "/dictionary/labels");
    for (std::size_t i = 0; i < labels.size(); ++i) names.push_back(as_string(labels[i], "/dictionary/labels/" + std::to_string(i)));
    std::vector<MergeGroup> groups;
    if (dict.contains("merge_groups")) {
        const auto& mg = as_array(dict["merge_groups"], "/dictionary/merge_groups");
        for (std::size_t g = 0; g < mg.size(); ++g) {
            const auto path = "/dictionary/merge_groups/" + std::to_string(g);
            MergeGroup group;
            group.name = as_string(field(mg[g], "name", path), path + "/name");
            const auto& members = as_array(field(mg[g], "members", path), path + "/members");
            for (std::size_t m = 0; m < members.size(); ++m)
                group.members.push_back(static_cast<LabelId>(as_int(members[m], path + "/members/" + std::to_string(m))));
            groups.push_back(std::move(group));
        }
    }
    try {
        s.dictionary = ActionDictionary(std::move(names), std::move(groups));
    } catch (const Error& e) {
        schema_error("/dictionary", e.what());
    }

    const auto& students = as_array(field(doc, "students", ""), "/students");
    for (std::size_t i = 0; i < students.size(); ++i) {
        const auto path = "/students/" + std::to_string(i);
        const auto sid = as_string(field(students[i], "student_id", path), path + "/student_id");
        const auto& segs = as_array(field(students[i], "segments", path), path + "/segments");
        std::vector<ActionSegment> out;
        out.reserve(segs.size());
        for (std::size_t k = 0; k < segs.size(); ++k) {
            const auto sp = path + "/segments/" + std::to_string(k);
            const auto& t = as_array(segs[k], sp);
            if (t.size() != 3) schema_error(sp, "expected [label_id, start_frame, end_frame]");
            out.push_back({static_cast<LabelId>(as_int(t[0], sp + "/0")), {as_int(t[1], sp + "/1"), as_int(t[2], sp + "/2"), s.fps}});
        }
        try {
            s.students.push_back(ActionSequence::make(sid, s.fps, std::move(out)));
        } catch (const Error& e) {
            throw Error(e.kind(), path + ": " + e.what());
        }
    }

    if (doc.contains("windows")) {
        const auto& windows = as_array(doc["windows"], "/windows");
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto path = "/windows/" + std::to_string(i);
            WindowAnnotation w;
            w.window_id = as_string(field(windows[i], "window_id", path), path + "/window_id");
            w.start_frame = as_int(field(windows[i], "start_frame", path), path + "/start_frame");
            const auto& eng = field(windows[i], "engagement", path);
            if (!eng.is_object()) schema_error(path + "/engagement", "expected an object");
            for (const auto& [sid, v] : eng.items()) {
                if (v.is_null()) {
                    w.engagement[sid] = std::nullopt;
                    continue;
                }
                const auto label = parse_engagement(as_string(v, path + "/engagement/" + sid));
                if (!label) schema_error(path + "/engagement/" + sid, "expected \"engaged\", \"disengaged\" or null");
                w.engagement[sid] = *label;
            }
            s.windows.push_back(std::move(w));
        }
    }
    canonicalize(s);
    return s;
}

std::string to_canonical_json(const SessionFile& session) {
    SessionFile s = session;
    canonicalize(s);

    json groups = json::array();
    for (const auto& g : s.dictionary.merge_groups()) groups.push_back({{"name", g.name}, {"members", g.members}});
    json students = json::array();
    for (const auto& st : s.students) {
        json segs = json::array();
        for (const auto& seg : st.segments()) segs.push_back({seg.label, seg.span.start_frame, seg.span.end_frame});
        students.push_back({{"student_id", st.student_id()}, {"segments", std::move(segs)}});
    }
    json windows = json::array();
    for (const auto& w : s.windows) {
        json eng = json::object();
        for (const auto& [sid, label] : w.engagement) eng[sid] = label ? json(to_string(*label)) : json(nullptr);
        windows.push_back({{"window_id", w.window_id}, {"start_frame", w.start_frame}, {"engagement", std::move(eng)}});
    }
    const json doc = {
        {"schema_version", s.schema_version},
        {"fps", rational_json(s.fps)},
        {"window_seconds", rational_json(s.window_seconds)},
        {"dictionary", {{"labels", s.dictionary.names()}, {"merge_groups", std::move(groups)}}},
        {"students", std::move(students)},
        {"windows", std::move(windows)},
    };
    return doc.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::data, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorKind::data, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::data, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SessionFile load_session(const std::filesystem::path& path) {
    try {
        return parse_session(read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void save_session(const std::filesystem::path& path, const SessionFile& session) {
    write_text_file(path, to_canonical_json(session));
}

std::vector<WindowAnnotation> effective_windows(const SessionFile& session) {
    if (!session.windows.empty()) return session.windows;
    std::vector<WindowAnnotation> out;
    const auto wf = session.window_frames();
    const auto total = session.total_frames();
    for (FrameIndex start = 0, i = 0; start < total; start += wf, ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "w%03lld", static_cast<long long>(i));
        out.push_back({id, start, {}});
    }
    return out;
}

std::vector<ClassroomWindow> build_windows(const SessionFile& session) {
    std::vector<ClassroomWindow> out;
    const auto wf = session.window_frames();
    const auto total = session.total_frames();
    for (const auto& w : effective_windows(session)) {
        const auto begin = w.start_frame;
        const auto end = std::min(begin + wf, total);
        std::vector<std::pair<std::string, std::optional<Engagement>>> targets;
        if (w.engagement.empty()) {
            for (const auto& st : session.students) targets.emplace_back(st.student_id(), std::nullopt);
        } else {
            targets.assign(w.engagement.begin(), w.engagement.end());
        }
        for (const auto& [sid, label] : targets) {
            ClassroomWindow cw;
            cw.window_id = w.window_id;
            cw.partial = end - begin < wf;
            cw.engagement_gt = label;
            for (const auto& st : session.students) {
                if (st.student_id() == sid) {
                    cw.target = st.slice(begin, end);
                } else {
                    cw.peers.push_back(st.slice(begin, end));
                }
            }
            out.push_back(std::move(cw));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sequence text

namespace {

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

ActionSequence parse_sequence_text(std::string_view text, const ActionDictionary& dict, Rational fps,
                                   std::string student_id) {
    std::vector<ActionSegment> segs;
    std::int64_t cursor = 0;
    std::size_t pos = 0, index = 0;
    const auto body = trim_view(text);
    if (body.empty()) throw Error(ErrorKind::data, "empty action sequence text");
    while (pos <= body.size()) {
        auto next = body.find(';', pos);
        if (next == std::string_view::npos) next = body.size();
        const auto entry = trim_view(body.substr(pos, next - pos));
        pos = next + 1;
        const auto where = "entry " + std::to_string(index++) + " '" + std::string(entry) + "'";

        const auto open = entry.rfind(" (");
        if (entry.empty() || open == std::string_view::npos || entry.back() != ')')
            throw Error(ErrorKind::data, where + ": expected 'name (mm:ss-mm:ss)'");
        const auto times = entry.substr(open + 2, entry.size() - open - 3);
        const auto dash = times.find('-');
        if (dash == std::string_view::npos) throw Error(ErrorKind::data, where + ": expected 'mm:ss-mm:ss'");
        std::int64_t start = 0, end = 0;
        try {
            start = parse_timestamp(times.substr(0, dash));
            end = parse_timestamp(times.substr(dash + 1));
        } catch (const Error& e) {
            throw Error(ErrorKind::data, where + ": " + e.what());
        }
        const auto label = dict.find(entry.substr(0, open));
        if (!label)
            throw Error(ErrorKind::dictionary_mismatch, where + ": unknown action '" + std::string(entry.substr(0, open)) + "'");
        if (start != cursor)
            throw Error(ErrorKind::contiguity, where + ": starts at " + std::to_string(start) + " s, previous entry ends at " +
                                                   std::to_string(cursor) + " s");
        if (end < start) throw Error(ErrorKind::contiguity, where + ": ends before it starts");
        cursor = end;
        if (end == start) continue;  // sub-second segment collapsed by rendering
        segs.push_back({*label, {first_frame_at(start, fps), first_frame_at(end, fps), fps}});
    }
    if (segs.empty()) throw Error(ErrorKind::data, "action sequence text has no non-empty entries");
    return ActionSequence::make(std::move(student_id), fps, std::move(segs));
}

// ---------------------------------------------------------------------------
// Embedding batches

namespace {

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

double to_double(const std::string& t, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::data, "line " + std::to_string(line) + ": '" + t + "' is not a number");
    }
}

long long to_integer(const std::string& t, std::size_t line) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::data, "line " + std::to_string(line) + ": '" + t + "' is not an integer");
    }
}

}  // namespace

EmbeddingBatch parse_embedding_batch(std::string_view text) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> lines;
    std::istringstream in{std::string(text)};
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto t = tokens(line);
        if (!t.empty()) lines.emplace_back(lineno, std::move(t));
    }
    if (lines.empty()) throw Error(ErrorKind::data, "embedding batch file is empty");

    const auto& [hline, header] = lines[0];
    if (header.size() != 4) throw Error(ErrorKind::data, "line " + std::to_string(hline) + ": header must be 'N C D temperature'");
    const auto n = to_integer(header[0], hline), c = to_integer(header[1], hline), d = to_integer(header[2], hline);
    if (n < 1 || c < 2 || d < 1) throw Error(ErrorKind::data, "line " + std::to_string(hline) + ": need N >= 1, C >= 2, D >= 1");
    const auto expected_lines = static_cast<std::size_t>(2 + n + c);
    if (lines.size() != expected_lines)
        throw Error(ErrorKind::data, "embedding batch has " + std::to_string(lines.size()) + " data lines, expected " +
                                         std::to_string(expected_lines));

    EmbeddingBatch b;
    b.temperature = to_double(header[3], hline);
    const auto& [lline, labels] = lines[1];
    if (labels.size() != static_cast<std::size_t>(n))
        throw Error(ErrorKind::data, "line " + std::to_string(lline) + ": expected " + std::to_string(n) + " labels");
    for (const auto& t : labels) b.labels.push_back(static_cast<int>(to_integer(t, lline)));

    auto fill = [&](Matrix& m, std::size_t first, std::size_t rows) {
        m = Matrix(rows, static_cast<std::size_t>(d));
        for (std::size_t r = 0; r < rows; ++r) {
            const auto& [ln, vals] = lines[first + r];
            if (vals.size() != static_cast<std::size_t>(d))
                throw Error(ErrorKind::data, "line " + std::to_string(ln) + ": expected " + std::to_string(d) + " values");
            for (std::size_t j = 0; j < vals.size(); ++j) m(r, j) = to_double(vals[j], ln);
        }
    };
    fill(b.video, 2, static_cast<std::size_t>(n));
    fill(b.text, 2 + static_cast<std::size_t>(n), static_cast<std::size_t>(c));
    validate(b);
    return b;
}

EmbeddingBatch load_embedding_batch(const std::filesystem::path& path) {
    try {
        return parse_embedding_batch(read_text_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string format_embedding_batch(const EmbeddingBatch& b) {
    std::string out = "# N C D temperature\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu %zu %zu %.17g\n", b.samples(), b.classes(), b.dim(), b.temperature);
    out += buf;
    for (std::size_t i = 0; i < b.labels.size(); ++i) out += (i ? " " : "") + std::to_string(b.labels[i]);
    out += '\n';
    auto rows = [&](const Matrix& m) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%s%.17g", j ? " " : "", m(r, j));
                out += buf;
            }
            out += '\n';
        }
    };
    rows(b.video);
    rows(b.text);
    return out;
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const SegEvalReport& r) {
    json f1 = json::object();
    for (const auto& [tau, v] : r.f1_at) f1[std::to_string(tau)] = v;
    return {{"mof", r.mof}, {"edit", r.edit}, {"f1_at", std::move(f1)}};
}

json to_json(const SegmentCounts& c) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
}

json to_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

json to_json(const ClsEvalReport& r) {
    return {{"engaged", to_json(r.engaged)},
            {"disengaged", to_json(r.disengaged)},
            {"weighted_avg", to_json(r.weighted)},
            {"accuracy", r.accuracy},
            {"total", r.total}};
}

json to_json(const SegAggregate& a) {
    return {{"windows", a.windows}, {"pooled", to_json(a.pooled)}, {"mean_of_windows", to_json(a.mean)}};
}

}  // namespace classengage
