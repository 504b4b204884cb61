// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>
#include <vector>

#include "classengage/core.hpp"
#include "classengage/fewshot.hpp"
#include "classengage/metrics.hpp"

// Data-parallel inner loops. Each kernel has a plain serial version, kept as the
// reference the tests compare against, and an OpenMP version that the public API uses.

namespace classengage::kernels {

/// rows x cols label ids (one row per peer, one column per frame).
struct LabelGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<LabelId> data;

    LabelId at(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
};

LabelGrid make_grid(std::span<const ActionSequence> rows);

struct SequencePair {
    const ActionSequence* pred;
    const ActionSequence* gt;
};

struct ObjectiveResult {
    Matrix probabilities;
    ObjectiveTerms terms;
    LossGradient gradient;  ///< empty matrices unless requested
};

namespace serial {

/// Modal label per bin of bin_frames columns; ties to the lowest id.
std::vector<LabelId> bin_modes(const LabelGrid& grid, FrameIndex bin_frames, int num_labels);
std::vector<SegWindowResult> evaluate_pairs(std::span<const SequencePair> pairs, F1Options opts = {});
ObjectiveResult objective(const EmbeddingBatch& batch, bool with_gradient);

}  // namespace serial

namespace parallel {

std::vector<LabelId> bin_modes(const LabelGrid& grid, FrameIndex bin_frames, int num_labels);
std::vector<SegWindowResult> evaluate_pairs(std::span<const SequencePair> pairs, F1Options opts = {});
ObjectiveResult objective(const EmbeddingBatch& batch, bool with_gradient);

}  // namespace parallel

}  // namespace classengage::kernels
