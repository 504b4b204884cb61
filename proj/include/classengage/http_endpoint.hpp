// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

#include "classengage/engagement.hpp"

namespace classengage {

/// Environment variable holding the bearer token for the chat endpoint.
inline constexpr const char* kApiTokenEnv = "CLASSENGAGE_API_TOKEN";

struct EndpointSettings {
    /// Full URL, e.g. http://localhost:8000/v1/chat/completions
    std::string url;
    std::string model;
    std::string token;
    std::chrono::seconds timeout{60};

    /// Token read from kApiTokenEnv; empty when unset.
    static std::string token_from_env();
};

/// {model, temperature, messages: [{role: "user", content}]}
nlohmann::json chat_request_json(const ChatRequest& request);
/// choices[0].message.content; throws TransportError(non-transient) for other shapes.
std::string extract_chat_content(const nlohmann::json& response);

/// Splits "http://host:port/path" into origin and path. Throws Error(config).
std::pair<std::string, std::string> split_url(const std::string& url);

/// Chat-completion client over HTTP. Safe to share between threads (one connection per call).
class HttpChatEndpoint final : public ClassifierEndpoint {
public:
    explicit HttpChatEndpoint(EndpointSettings settings);

    std::string complete(const ChatRequest& request) override;

private:
    EndpointSettings settings_;
    std::string origin_;
    std::string path_;
};

}  // namespace classengage
