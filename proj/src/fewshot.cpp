// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#include "classengage/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "classengage/error.hpp"
#include "classengage/kernels.hpp"

namespace classengage {

void validate(const EmbeddingBatch& batch) {
    const auto n = batch.samples(), c = batch.classes(), d = batch.dim();
    if (n < 1) throw Error(ErrorKind::data, "embedding batch needs at least one sample");
    if (c < 2) throw Error(ErrorKind::data, "embedding batch needs at least two classes");
    if (d < 1) throw Error(ErrorKind::data, "embedding dimension must be positive");
    if (batch.text.cols() != d)
        throw Error(ErrorKind::data, "text embeddings have dimension " + std::to_string(batch.text.cols()) +
                                         ", video embeddings " + std::to_string(d));
    if (batch.labels.size() != n)
        throw Error(ErrorKind::data, std::to_string(batch.labels.size()) + " labels for " + std::to_string(n) + " samples");
    for (std::size_t i = 0; i < n; ++i)
        if (batch.labels[i] < 0 || static_cast<std::size_t>(batch.labels[i]) >= c)
            throw Error(ErrorKind::data, "label " + std::to_string(batch.labels[i]) + " of sample " + std::to_string(i) +
                                             " outside 0.." + std::to_string(c - 1));
    if (!(batch.temperature > 0.0) || !std::isfinite(batch.temperature))
        throw Error(ErrorKind::data, "temperature must be positive and finite");

    auto check_rows = [](const Matrix& m, const char* what) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double sq = 0.0;
            for (double x : m.row(r)) {
                if (!std::isfinite(x))
                    throw Error(ErrorKind::degenerate_embedding, std::string(what) + " " + std::to_string(r) + " is not finite");
                sq += x * x;
            }
            if (sq == 0.0) throw Error(ErrorKind::degenerate_embedding, std::string(what) + " " + std::to_string(r) + " has zero norm");
        }
    };
    check_rows(batch.video, "video embedding");
    check_rows(batch.text, "text embedding");
}

Matrix class_probabilities(const EmbeddingBatch& batch) {
    return kernels::parallel::objective(batch, false).probabilities;
}

ObjectiveTerms loss_terms(const EmbeddingBatch& batch) {
    return kernels::parallel::objective(batch, false).terms;
}

double total_loss(const EmbeddingBatch& batch) {
    return loss_terms(batch).total;
}

LossGradient loss_gradient(const EmbeddingBatch& batch) {
    return kernels::parallel::objective(batch, true).gradient;
}

GradientCheck check_gradient(const EmbeddingBatch& batch, double step, double tolerance) {
    const auto analytic = loss_gradient(batch);
    GradientCheck out;
    EmbeddingBatch probe = batch;

    auto check = [&](Matrix& target, const Matrix& grad) {
        for (std::size_t r = 0; r < target.rows(); ++r) {
            for (std::size_t c = 0; c < target.cols(); ++c) {
                const double saved = target(r, c);
                target(r, c) = saved + step;
                const double up = total_loss(probe);
                target(r, c) = saved - step;
                const double down = total_loss(probe);
                target(r, c) = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double a = grad(r, c);
                const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
                out.max_relative_error = std::max(out.max_relative_error, rel);
                ++out.components;
            }
        }
    };
    check(probe.video, analytic.video);
    check(probe.text, analytic.text);
    out.passed = out.max_relative_error <= tolerance;
    return out;
}

}  // namespace classengage
