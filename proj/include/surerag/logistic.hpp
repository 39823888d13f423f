#pragma once

// Three-class multinomial logistic regression trained by full-batch gradient
// descent with backtracking line search on the L2-regularised mean negative
// log-likelihood. Rows may be sparse, so hashed bag-of-features baselines
// share this trainer with the answer-level classifier.

#include <cstdint>
#include <span>
#include <vector>

#include "surerag/types.hpp"

namespace surerag::logistic {

struct SparseRow {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
};

class DesignMatrix {
public:
    explicit DesignMatrix(std::size_t cols) : cols_(cols) {}

    static DesignMatrix from_dense(const std::vector<std::vector<double>>& rows, std::size_t cols);

    void add_dense(std::span<const double> row);
    void add_sparse(SparseRow row);

    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }
    const SparseRow& row(std::size_t i) const { return rows_[i]; }

private:
    std::size_t cols_;
    std::vector<SparseRow> rows_;
};

// Parameters laid out as [W row-major (class x feature), bias (class)].
struct Model {
    std::size_t dim = 0;
    std::vector<double> params;

    explicit Model(std::size_t d = 0) : dim(d), params((d + 1) * label_count, 0.0) {}

    double weight(std::size_t cls, std::size_t feature) const { return params[cls * dim + feature]; }
    double bias(std::size_t cls) const { return params[label_count * dim + cls]; }

    std::array<double, label_count> logits(const SparseRow& row) const;
    std::array<double, label_count> logits(std::span<const double> dense) const;
};

LabelDist softmax(const std::array<double, label_count>& logits, double temperature = 1.0);

// Mean NLL + (lambda / 2) * ||W||^2; the bias is not penalised. When `grad`
// is non-null it receives the gradient in Model::params layout.
double objective(const Model& model, const DesignMatrix& x, std::span<const Label> y, double l2_lambda,
                 std::vector<double>* grad = nullptr);

struct TrainOptions {
    double l2_lambda = 1e-3;
    std::size_t max_iters = 500;
    double grad_tol = 1e-9;
    double armijo_c = 1e-4;
};

struct TrainResult {
    Model model;
    std::vector<double> loss_history;  // loss at every accepted iterate, starting from zero weights
    std::size_t iterations = 0;
};

// Throws invalid_argument on fewer than two distinct labels, non-finite
// features or mismatched lengths.
TrainResult fit(const DesignMatrix& x, std::span<const Label> y, const TrainOptions& options = {});

}  // namespace surerag::logistic
