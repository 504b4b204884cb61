// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/http_endpoint.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>

namespace classengage {

std::string EndpointSettings::token_from_env() {
    const char* v = std::getenv(kApiTokenEnv);
    return v ? std::string(v) : std::string();
}

nlohmann::json chat_request_json(const ChatRequest& request) {
    return {
        {"model", request.model},
        {"temperature", request.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.content}}})},
    };
}

std::string extract_chat_content(const nlohmann::json& response) {
    const auto choices = response.find("choices");
    if (choices == response.end() || !choices->is_array() || choices->empty())
        throw TransportError("chat response has no choices", false);
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
        !first["message"].contains("content") || !first["message"]["content"].is_string())
        throw TransportError("chat response lacks choices[0].message.content", false);
    return first["message"]["content"].get<std::string>();
}

std::pair<std::string, std::string> split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/\s]+)(/\S*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw Error(ErrorKind::config, "invalid endpoint URL '" + url + "'");
    std::string path = m[2].matched ? m[2].str() : std::string("/");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url.rfind("https://", 0) == 0) throw Error(ErrorKind::config, "https endpoints need a build with OpenSSL");
#endif
    return {m[1].str(), path};
}

HttpChatEndpoint::HttpChatEndpoint(EndpointSettings settings) : settings_(std::move(settings)) {
    if (settings_.url.empty()) throw Error(ErrorKind::config, "classifier endpoint URL not configured");
    if (settings_.model.empty()) throw Error(ErrorKind::config, "classifier model name not configured");
    std::tie(origin_, path_) = split_url(settings_.url);
}

std::string HttpChatEndpoint::complete(const ChatRequest& request) {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(settings_.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);

    httplib::Headers headers;
    if (!settings_.token.empty()) headers.emplace("Authorization", "Bearer " + settings_.token);

    ChatRequest req = request;
    if (req.model.empty()) req.model = settings_.model;
    const auto res = client.Post(path_, headers, chat_request_json(req).dump(), "application/json");
    if (!res) throw TransportError("classifier endpoint: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
        throw TransportError("classifier endpoint returned HTTP " + std::to_string(res->status), true);
    if (res->status != 200)
        throw TransportError("classifier endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body, false);

    nlohmann::json body;
    try {
        body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("classifier endpoint sent invalid JSON: ") + e.what(), false);
    }
    return extract_chat_content(body);
}

}  // namespace classengage
