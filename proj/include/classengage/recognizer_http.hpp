// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "classengage/temporal.hpp"

namespace classengage {

/**
 * @brief RecognizerPort backed by the recognition sidecar.
 *
 * POST {base}/recognize with
 *   {request_id, dictionary: [names], frames_per_clip,
 *    clip: {student_id, start_frame, end_frame, fps, frame_indices}}
 * and expects {request_id, label_index, scores}. GET {base}/health returns the service
 * mode and dictionary hash.
 */
class HttpRecognizer final : public RecognizerPort {
public:
    HttpRecognizer(std::string base_url, std::vector<std::string> dictionary, int frames_per_clip,
                   std::chrono::seconds timeout = std::chrono::seconds(30));

    RecognizerVerdict recognize(const ClipRequest& clip) override;
    nlohmann::json health();

    nlohmann::json request_json(const ClipRequest& clip) const;
    /// Validates request_id echo, score normalization, dimension and argmax consistency.
    RecognizerVerdict parse_response(const nlohmann::json& body, const std::string& request_id) const;

private:
    std::string origin_;
    std::string prefix_;
    std::vector<std::string> dictionary_;
    int frames_per_clip_;
    std::chrono::seconds timeout_;
};

}  // namespace classengage
