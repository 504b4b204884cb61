// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <tuple>

#include <omp.h>

namespace classengage::kernels {

LabelGrid make_grid(std::span<const ActionSequence> rows) {
    LabelGrid grid;
    grid.rows = rows.size();
    grid.cols = rows.empty() ? 0 : static_cast<std::size_t>(rows.front().length());
    grid.data.reserve(grid.rows * grid.cols);
    for (const auto& seq : rows) {
        if (static_cast<std::size_t>(seq.length()) != grid.cols)
            throw Error(ErrorKind::data, "label grid rows differ in length");
        for (const auto& s : seq.segments()) grid.data.insert(grid.data.end(), static_cast<std::size_t>(s.span.length()), s.label);
    }
    return grid;
}

namespace {

LabelId bin_mode(const LabelGrid& grid, std::size_t begin, std::size_t end, std::vector<FrameIndex>& counts) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t r = 0; r < grid.rows; ++r) {
        const LabelId* row = grid.data.data() + r * grid.cols;
        for (std::size_t c = begin; c < end; ++c) ++counts[static_cast<std::size_t>(row[c])];
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k)
        if (counts[k] > counts[best]) best = k;
    return static_cast<LabelId>(best);
}

std::size_t bin_count(const LabelGrid& grid, FrameIndex bin_frames) {
    if (bin_frames <= 0) throw Error(ErrorKind::config, "bin length must be at least one frame");
    const auto bin = static_cast<std::size_t>(bin_frames);
    return (grid.cols + bin - 1) / bin;
}

// Objective pieces shared by both variants; the parallel path only changes the
// iteration schedule.
struct Prepared {
    Matrix unit_video, unit_text;
    std::vector<double> video_norm, text_norm;
};

Prepared prepare(const EmbeddingBatch& batch) {
    validate(batch);
    const auto n = batch.samples(), c = batch.classes(), d = batch.dim();
    Prepared p{Matrix(n, d), Matrix(c, d), std::vector<double>(n), std::vector<double>(c)};
    auto normalize = [d](std::span<const double> src, std::span<double> dst) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += src[j] * src[j];
        const double norm = std::sqrt(sq);
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] / norm;
        return norm;
    };
    for (std::size_t i = 0; i < n; ++i) p.video_norm[i] = normalize(batch.video.row(i), p.unit_video.row(i));
    for (std::size_t k = 0; k < c; ++k) p.text_norm[k] = normalize(batch.text.row(k), p.unit_text.row(k));
    return p;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

/// Fills probabilities/cosines for row i; returns (ce_i, entropy_i); writes dL/dcos into coeff row.
std::pair<double, double> sample_row(const EmbeddingBatch& batch, const Prepared& p, std::size_t i, Matrix& probs,
                                     Matrix& cosines, Matrix& coeff) {
    const auto c = batch.classes();
    const double tau = batch.temperature;
    std::vector<double> logits(c), logp(c);
    double max_logit = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) {
        cosines(i, k) = dot(p.unit_video.row(i), p.unit_text.row(k));
        logits[k] = cosines(i, k) / tau;
        max_logit = std::max(max_logit, logits[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) z += std::exp(logits[k] - max_logit);
    const double lse = max_logit + std::log(z);
    double entropy = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        logp[k] = logits[k] - lse;
        probs(i, k) = std::exp(logp[k]);
        entropy -= probs(i, k) * logp[k];
    }
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    const double inv_n = 1.0 / static_cast<double>(batch.samples());
    // d(CE_i + H_i)/dlogit_k = p_k - [k == y] - p_k (log p_k + H_i)
    for (std::size_t k = 0; k < c; ++k) {
        const double g = probs(i, k) - (k == y ? 1.0 : 0.0) - probs(i, k) * (logp[k] + entropy);
        coeff(i, k) = g * inv_n / tau;
    }
    return {-logp[y], entropy};
}

void video_gradient_row(const Prepared& p, std::size_t i, const Matrix& cosines, const Matrix& coeff, Matrix& out) {
    const auto d = out.cols();
    auto g = out.row(i);
    for (std::size_t k = 0; k < coeff.cols(); ++k) {
        const double w = coeff(i, k) / p.video_norm[i];
        for (std::size_t j = 0; j < d; ++j) g[j] += w * (p.unit_text(k, j) - cosines(i, k) * p.unit_video(i, j));
    }
}

void text_gradient_row(const Prepared& p, std::size_t k, const Matrix& cosines, const Matrix& coeff, Matrix& out) {
    const auto d = out.cols();
    auto g = out.row(k);
    for (std::size_t i = 0; i < coeff.rows(); ++i) {
        const double w = coeff(i, k) / p.text_norm[k];
        for (std::size_t j = 0; j < d; ++j) g[j] += w * (p.unit_video(i, j) - cosines(i, k) * p.unit_text(k, j));
    }
}

ObjectiveResult finish(const EmbeddingBatch& batch, Matrix probs, std::span<const double> ce, std::span<const double> ent) {
    ObjectiveResult r;
    r.probabilities = std::move(probs);
    const double n = static_cast<double>(batch.samples());
    for (std::size_t i = 0; i < ce.size(); ++i) {
        r.terms.cross_entropy += ce[i];
        r.terms.entropy += ent[i];
    }
    r.terms.cross_entropy /= n;
    r.terms.entropy /= n;
    r.terms.total = r.terms.cross_entropy + r.terms.entropy;
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------

namespace serial {

std::vector<LabelId> bin_modes(const LabelGrid& grid, FrameIndex bin_frames, int num_labels) {
    const auto bins = bin_count(grid, bin_frames);
    const auto bin = static_cast<std::size_t>(bin_frames);
    std::vector<LabelId> out(bins);
    std::vector<FrameIndex> counts(static_cast<std::size_t>(std::max(1, num_labels)));
    for (std::size_t b = 0; b < bins; ++b) out[b] = bin_mode(grid, b * bin, std::min(grid.cols, (b + 1) * bin), counts);
    return out;
}

std::vector<SegWindowResult> evaluate_pairs(std::span<const SequencePair> pairs, F1Options opts) {
    std::vector<SegWindowResult> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(evaluate_window(*p.pred, *p.gt, opts));
    return out;
}

ObjectiveResult objective(const EmbeddingBatch& batch, bool with_gradient) {
    const auto prep = prepare(batch);
    const auto n = batch.samples(), c = batch.classes(), d = batch.dim();
    Matrix probs(n, c), cosines(n, c), coeff(n, c);
    std::vector<double> ce(n), ent(n);
    for (std::size_t i = 0; i < n; ++i) std::tie(ce[i], ent[i]) = sample_row(batch, prep, i, probs, cosines, coeff);
    auto r = finish(batch, std::move(probs), ce, ent);
    if (with_gradient) {
        r.gradient = {Matrix(n, d), Matrix(c, d)};
        for (std::size_t i = 0; i < n; ++i) video_gradient_row(prep, i, cosines, coeff, r.gradient.video);
        for (std::size_t k = 0; k < c; ++k) text_gradient_row(prep, k, cosines, coeff, r.gradient.text);
    }
    return r;
}

}  // namespace serial

namespace parallel {

std::vector<LabelId> bin_modes(const LabelGrid& grid, FrameIndex bin_frames, int num_labels) {
    const auto bins = static_cast<std::int64_t>(bin_count(grid, bin_frames));
    const auto bin = static_cast<std::size_t>(bin_frames);
    std::vector<LabelId> out(static_cast<std::size_t>(bins));
#pragma omp parallel
    {
        std::vector<FrameIndex> counts(static_cast<std::size_t>(std::max(1, num_labels)));
#pragma omp for schedule(static)
        for (std::int64_t b = 0; b < bins; ++b) {
            const auto ub = static_cast<std::size_t>(b);
            out[ub] = bin_mode(grid, ub * bin, std::min(grid.cols, (ub + 1) * bin), counts);
        }
    }
    return out;
}

std::vector<SegWindowResult> evaluate_pairs(std::span<const SequencePair> pairs, F1Options opts) {
    const auto n = static_cast<std::int64_t>(pairs.size());
    std::vector<SegWindowResult> out(pairs.size());
    std::vector<std::exception_ptr> errors(pairs.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        try {
            out[ui] = evaluate_window(*pairs[ui].pred, *pairs[ui].gt, opts);
        } catch (...) {
            errors[ui] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

ObjectiveResult objective(const EmbeddingBatch& batch, bool with_gradient) {
    const auto prep = prepare(batch);
    const auto n = batch.samples(), c = batch.classes(), d = batch.dim();
    Matrix probs(n, c), cosines(n, c), coeff(n, c);
    std::vector<double> ce(n), ent(n);
    const auto sn = static_cast<std::int64_t>(n), sc = static_cast<std::int64_t>(c);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        std::tie(ce[ui], ent[ui]) = sample_row(batch, prep, ui, probs, cosines, coeff);
    }
    auto r = finish(batch, std::move(probs), ce, ent);
    if (with_gradient) {
        r.gradient = {Matrix(n, d), Matrix(c, d)};
#pragma omp parallel
        {
#pragma omp for schedule(static) nowait
            for (std::int64_t i = 0; i < sn; ++i)
                video_gradient_row(prep, static_cast<std::size_t>(i), cosines, coeff, r.gradient.video);
#pragma omp for schedule(static)
            for (std::int64_t k = 0; k < sc; ++k)
                text_gradient_row(prep, static_cast<std::size_t>(k), cosines, coeff, r.gradient.text);
        }
    }
    return r;
}

}  // namespace parallel

}  // namespace classengage::kernels
