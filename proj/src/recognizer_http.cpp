// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/recognizer_http.hpp"

#include <httplib.h>

#include "classengage/http_endpoint.hpp"

namespace classengage {

HttpRecognizer::HttpRecognizer(std::string base_url, std::vector<std::string> dictionary, int frames_per_clip,
                               std::chrono::seconds timeout)
    : dictionary_(std::move(dictionary)), frames_per_clip_(frames_per_clip), timeout_(timeout) {
    if (base_url.empty()) throw Error(ErrorKind::config, "recognizer endpoint URL not configured");
    std::tie(origin_, prefix_) = split_url(base_url);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

nlohmann::json HttpRecognizer::request_json(const ClipRequest& clip) const {
    return {
        {"request_id", clip.request_id},
        {"dictionary", dictionary_},
        {"frames_per_clip", frames_per_clip_},
        {"clip",
         {
             {"student_id", clip.student_id},
             {"start_frame", clip.span.start_frame},
             {"end_frame", clip.span.end_frame},
             {"fps", clip.span.fps.str()},
             {"frame_indices", clip.frame_indices},
         }},
    };
}

RecognizerVerdict HttpRecognizer::parse_response(const nlohmann::json& body, const std::string& request_id) const {
    try {
        if (body.at("request_id").get<std::string>() != request_id)
            throw Error(ErrorKind::data, "recognizer answered request '" + body.at("request_id").get<std::string>() +
                                             "' for '" + request_id + "'");
        auto scores = body.at("scores").get<std::vector<double>>();
        if (scores.size() != dictionary_.size())
            throw Error(ErrorKind::data, "recognizer returned " + std::to_string(scores.size()) + " scores for a " +
                                             std::to_string(dictionary_.size()) + "-label dictionary");
        const auto label = body.at("label_index").get<int>();
        auto verdict = verdict_from_scores(std::move(scores));
        if (verdict.label != label)
            throw Error(ErrorKind::data, "recognizer label_index " + std::to_string(label) + " disagrees with argmax " +
                                             std::to_string(verdict.label));
        return verdict;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::data, std::string("malformed recognizer response: ") + e.what());
    }
}

RecognizerVerdict HttpRecognizer::recognize(const ClipRequest& clip) {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(timeout_.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);

    const auto res = client.Post(prefix_ + "/recognize", request_json(clip).dump(), "application/json");
    if (!res) throw TransportError("recognizer: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
        throw TransportError("recognizer returned HTTP " + std::to_string(res->status), true);
    if (res->status != 200)
        throw TransportError("recognizer returned HTTP " + std::to_string(res->status) + ": " + res->body, false);

    nlohmann::json body;
    try {
        body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::data, std::string("recognizer sent invalid JSON: ") + e.what());
    }
    return parse_response(body, clip.request_id);
}

nlohmann::json HttpRecognizer::health() {
    httplib::Client client(origin_);
    client.set_connection_timeout(static_cast<time_t>(timeout_.count()), 0);
    const auto res = client.Get(prefix_ + "/health");
    if (!res) throw TransportError("recognizer health: " + httplib::to_string(res.error()), true);
    if (res->status != 200) throw TransportError("recognizer health returned HTTP " + std::to_string(res->status), false);
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::data, std::string("recognizer health sent invalid JSON: ") + e.what());
    }
}

}  // namespace classengage
