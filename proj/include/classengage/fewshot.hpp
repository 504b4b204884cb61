// Copyright (C) 2026 The classengage authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace classengage {

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/**
 * @brief Video-level embeddings, class text embeddings and labels for one batch.
 *
 * video is N x D, text is C x D, labels holds N class indices, temperature > 0.
 */
struct EmbeddingBatch {
    Matrix video;
    Matrix text;
    std::vector<int> labels;
    double temperature = 1.0;

    std::size_t samples() const noexcept { return video.rows(); }
    std::size_t classes() const noexcept { return text.rows(); }
    std::size_t dim() const noexcept { return video.cols(); }
};

/// Throws Error(data) for shape/label/temperature problems and Error(degenerate_embedding)
/// for zero-norm or non-finite vectors.
void validate(const EmbeddingBatch& batch);

/// Row i is softmax_k(cos(v_i, t_k) / temperature).
Matrix class_probabilities(const EmbeddingBatch& batch);

struct ObjectiveTerms {
    double cross_entropy = 0.0;  ///< mean of -log p_{i, label_i}
    double entropy = 0.0;        ///< mean row entropy, nats
    double total = 0.0;
};

ObjectiveTerms loss_terms(const EmbeddingBatch& batch);
double total_loss(const EmbeddingBatch& batch);

struct LossGradient {
    Matrix video;  ///< dL/dv, N x D
    Matrix text;   ///< dL/dt, C x D
};

LossGradient loss_gradient(const EmbeddingBatch& batch);

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t components = 0;
    bool passed = false;
};

/// Central finite differences against loss_gradient on every video and text component.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheck check_gradient(const EmbeddingBatch& batch, double step = 1e-5, double tolerance = 1e-4);

}  // namespace classengage
