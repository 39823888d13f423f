#include "surerag/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "surerag/error.hpp"

namespace surerag::logistic {

DesignMatrix DesignMatrix::from_dense(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    DesignMatrix m(cols);
    for (const auto& r : rows) m.add_dense(r);
    return m;
}

void DesignMatrix::add_dense(std::span<const double> row) {
    if (row.size() != cols_) fail(ErrorCode::invalid_argument, "design matrix: row width mismatch");
    SparseRow r;
    r.index.reserve(row.size());
    r.value.reserve(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        r.index.push_back(static_cast<std::uint32_t>(i));
        r.value.push_back(row[i]);
    }
    rows_.push_back(std::move(r));
}

void DesignMatrix::add_sparse(SparseRow row) {
    if (row.index.size() != row.value.size()) fail(ErrorCode::invalid_argument, "design matrix: malformed sparse row");
    for (auto i : row.index)
        if (i >= cols_) fail(ErrorCode::invalid_argument, "design matrix: column index out of range");
    rows_.push_back(std::move(row));
}

std::array<double, label_count> Model::logits(const SparseRow& row) const {
    std::array<double, label_count> z{};
    for (std::size_t c = 0; c < label_count; ++c) {
        double s = bias(c);
        const double* w = params.data() + c * dim;
        for (std::size_t n = 0; n < row.index.size(); ++n) s += w[row.index[n]] * row.value[n];
        z[c] = s;
    }
    return z;
}

std::array<double, label_count> Model::logits(std::span<const double> dense) const {
    if (dense.size() != dim) fail(ErrorCode::invalid_argument, "model: feature dimension mismatch");
    std::array<double, label_count> z{};
    for (std::size_t c = 0; c < label_count; ++c) {
        double s = bias(c);
        for (std::size_t f = 0; f < dim; ++f) s += weight(c, f) * dense[f];
        z[c] = s;
    }
    return z;
}

LabelDist softmax(const std::array<double, label_count>& logits, double temperature) {
    if (!(temperature > 0.0)) fail(ErrorCode::invalid_argument, "softmax: temperature must be positive");
    double top = logits[0];
    for (double z : logits) top = std::max(top, z);
    LabelDist p{};
    double sum = 0.0;
    for (std::size_t c = 0; c < label_count; ++c) {
        p[c] = std::exp((logits[c] - top) / temperature);
        sum += p[c];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double objective(const Model& model, const DesignMatrix& x, std::span<const Label> y, double l2_lambda,
                 std::vector<double>* grad) {
    const std::size_t d = model.dim;
    const double n = static_cast<double>(x.rows());
    if (grad) grad->assign(model.params.size(), 0.0);
    double nll = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto& row = x.row(i);
        const auto z = model.logits(row);
        double top = z[0];
        for (double v : z) top = std::max(top, v);
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - top);
        const double log_z = top + std::log(sum);
        const std::size_t yi = index(y[i]);
        nll += log_z - z[yi];
        if (grad) {
            for (std::size_t c = 0; c < label_count; ++c) {
                const double r = (std::exp(z[c] - log_z) - (c == yi ? 1.0 : 0.0)) / n;
                double* g = grad->data() + c * d;
                for (std::size_t k = 0; k < row.index.size(); ++k) g[row.index[k]] += r * row.value[k];
                (*grad)[label_count * d + c] += r;
            }
        }
    }
    double reg = 0.0;
    for (std::size_t k = 0; k < label_count * d; ++k) {
        reg += model.params[k] * model.params[k];
        if (grad) (*grad)[k] += l2_lambda * model.params[k];
    }
    return nll / n + 0.5 * l2_lambda * reg;
}

TrainResult fit(const DesignMatrix& x, std::span<const Label> y, const TrainOptions& options) {
    if (x.rows() != y.size()) fail(ErrorCode::invalid_argument, "fit: feature/label count mismatch");
    if (x.rows() == 0) fail(ErrorCode::invalid_argument, "fit: empty training set");
    if (!(options.l2_lambda >= 0.0)) fail(ErrorCode::invalid_argument, "fit: l2_lambda must be >= 0");
    std::set<Label> distinct(y.begin(), y.end());
    if (distinct.size() < 2) fail(ErrorCode::invalid_argument, "fit: training set needs at least two distinct labels");
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (double v : x.row(i).value)
            if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "fit: non-finite feature in row " + std::to_string(i));

    TrainResult result{Model(x.cols()), {}, 0};
    Model& model = result.model;
    std::vector<double> grad, trial_grad;
    double loss = objective(model, x, y, options.l2_lambda, &grad);
    result.loss_history.push_back(loss);
    double step = 1.0;

    for (std::size_t it = 0; it < options.max_iters; ++it) {
        double gnorm2 = 0.0;
        for (double g : grad) gnorm2 += g * g;
        if (std::sqrt(gnorm2) < options.grad_tol) break;

        Model trial(model.dim);
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t k = 0; k < model.params.size(); ++k) trial.params[k] = model.params[k] - step * grad[k];
            const double trial_loss = objective(trial, x, y, options.l2_lambda, nullptr);
            if (trial_loss <= loss - options.armijo_c * step * gnorm2) {
                model = std::move(trial);
                loss = objective(model, x, y, options.l2_lambda, &grad);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no descent step representable at this precision
        result.loss_history.push_back(loss);
        ++result.iterations;
        step = std::min(step * 2.0, 1e4);
    }
    return result;
}

}  // namespace surerag::logistic
