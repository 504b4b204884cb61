// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "classengage/core.hpp"

namespace classengage::testing {

/// Reference [A 0-900, B 900-1800]; the prediction keeps every frame label except twelve
/// 3-frame blips of label C spaced 75 frames apart inside each reference segment.
inline std::pair<std::vector<LabelId>, std::vector<LabelId>> over_segmentation_frames() {
    constexpr LabelId A = 0, B = 1, C = 2;
    std::vector<LabelId> gt(1800, A);
    std::fill(gt.begin() + 900, gt.end(), B);
    auto pred = gt;
    for (FrameIndex region : {0, 900})
        for (FrameIndex k = 0; k < 12; ++k)
            for (FrameIndex f = 0; f < 3; ++f) pred[static_cast<std::size_t>(region + 75 * k + 36 + f)] = C;
    return {pred, gt};
}

}  // namespace classengage::testing
