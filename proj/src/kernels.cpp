#include "imd2/kernels.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "imd2/chebyshev.hpp"
#include "imd2/error.hpp"

namespace imd2::kernels {

namespace {

void check_rows(Eigen::Index rows, std::size_t target) {
    if (static_cast<std::size_t>(rows) != target)
        throw InvalidArgument("feature rows (" + std::to_string(rows) + ") != target length (" +
                              std::to_string(target) + ")");
    if (rows == 0) throw InvalidArgument("empty batch");
}

void check_inputs(const NNModel& model, const RowMatrix& f) {
    if (static_cast<std::size_t>(f.cols()) != model.shape().inputs)
        throw InvalidArgument("input columns (" + std::to_string(f.cols()) + ") != network inputs (" +
                              std::to_string(model.shape().inputs) + ")");
}

Eigen::Index block_count(Eigen::Index rows) { return (rows + kBlockRows - 1) / kBlockRows; }

// Sums block partials in block order.
LossGrad combine(std::vector<LossGrad>& parts, Eigen::Index rows) {
    LossGrad out = std::move(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        out.loss += parts[i].loss;
        out.grad += parts[i].grad;
    }
    const double inv = 1.0 / static_cast<double>(rows);
    out.loss *= inv;
    out.grad *= 2.0 * inv;
    return out;
}

// Sum of squared residuals and sum of residual * feature over [begin, end).
LossGrad linear_partial(const RowMatrix& a, std::span<const double> y, const Vector& theta, Eigen::Index begin,
                        Eigen::Index end) {
    LossGrad part{0.0, Vector::Zero(a.cols())};
    for (Eigen::Index r = begin; r < end; ++r) {
        const double e = a.row(r).dot(theta) - y[r];
        part.loss += e * e;
        part.grad.noalias() += e * a.row(r).transpose();
    }
    return part;
}

LossGrad nn_partial(const NNModel& model, const RowMatrix& f, std::span<const double> y, Eigen::Index begin,
                    Eigen::Index end) {
    LossGrad part{0.0, Vector::Zero(model.param_count())};
    auto ws = model.make_workspace();
    std::span<double> g(part.grad.data(), part.grad.size());
    for (Eigen::Index r = begin; r < end; ++r) {
        const double e = model.forward(std::span<const double>(&f(r, 0), f.cols()), ws) - y[r];
        part.loss += e * e;
        model.backward_into(ws, e, g);
    }
    return part;
}

NormalEquations gram_partial(const RowMatrix& a, std::span<const double> b, Eigen::Index begin, Eigen::Index end) {
    const auto rows = end - begin;
    const auto blk = a.middleRows(begin, rows);
    NormalEquations part;
    part.gram = RowMatrix::Zero(a.cols(), a.cols());
    part.gram.selfadjointView<Eigen::Lower>().rankUpdate(blk.transpose());
    part.gram.triangularView<Eigen::StrictlyUpper>() = part.gram.transpose();
    part.rhs = blk.transpose() * Eigen::Map<const Vector>(b.data() + begin, rows);
    return part;
}

} // namespace

namespace serial {

RowMatrix cheb_features(const RowMatrix& embedded, std::size_t order) { return feature_matrix(embedded, order); }

Vector linear_predict(const RowMatrix& a, const Vector& theta) {
    if (a.cols() != theta.size()) throw InvalidArgument("theta length does not match feature columns");
    Vector out(a.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        double acc = 0.0;
        for (Eigen::Index c = 0; c < a.cols(); ++c) acc += a(r, c) * theta(c);
        out(r) = acc;
    }
    return out;
}

LossGrad linear_mse(const RowMatrix& a, std::span<const double> y, const Vector& theta) {
    check_rows(a.rows(), y.size());
    if (a.cols() != theta.size()) throw InvalidArgument("theta length does not match feature columns");
    std::vector<LossGrad> parts;
    parts.push_back(linear_partial(a, y, theta, 0, a.rows()));
    return combine(parts, a.rows());
}

NormalEquations normal_equations(const RowMatrix& a, std::span<const double> b) {
    check_rows(a.rows(), b.size());
    const auto n = a.cols();
    NormalEquations out{RowMatrix::Zero(n, n), Vector::Zero(n)};
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index i = 0; i < n; ++i) {
            out.rhs(i) += a(r, i) * b[r];
            for (Eigen::Index j = 0; j < n; ++j) out.gram(i, j) += a(r, i) * a(r, j);
        }
    }
    return out;
}

Vector nn_predict(const NNModel& model, const RowMatrix& f) {
    check_inputs(model, f);
    Vector out(f.rows());
    auto ws = model.make_workspace();
    for (Eigen::Index r = 0; r < f.rows(); ++r)
        out(r) = model.forward(std::span<const double>(&f(r, 0), f.cols()), ws);
    return out;
}

LossGrad nn_mse(const NNModel& model, const RowMatrix& f, std::span<const double> y) {
    check_rows(f.rows(), y.size());
    check_inputs(model, f);
    std::vector<LossGrad> parts;
    parts.push_back(nn_partial(model, f, y, 0, f.rows()));
    return combine(parts, f.rows());
}

} // namespace serial

namespace parallel {

RowMatrix cheb_features(const RowMatrix& embedded, std::size_t order) {
    if (order == 0) throw InvalidArgument("Chebyshev order must be positive");
    const auto rows = embedded.rows();
    const auto taps = embedded.cols();
    const auto ord = static_cast<Eigen::Index>(order);
    RowMatrix out(rows, taps * ord);
    // Exceptions must not escape the parallel region; collect and rethrow.
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < rows; ++r) {
        try {
            for (Eigen::Index k = 0; k < taps; ++k)
                cheb_basis_into(embedded(r, k), std::span<double>(&out(r, k * ord), order));
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

Vector linear_predict(const RowMatrix& a, const Vector& theta) {
    if (a.cols() != theta.size()) throw InvalidArgument("theta length does not match feature columns");
    Vector out(a.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        double acc = 0.0;
        for (Eigen::Index c = 0; c < a.cols(); ++c) acc += a(r, c) * theta(c);
        out(r) = acc;
    }
    return out;
}

LossGrad linear_mse(const RowMatrix& a, std::span<const double> y, const Vector& theta) {
    check_rows(a.rows(), y.size());
    if (a.cols() != theta.size()) throw InvalidArgument("theta length does not match feature columns");
    const auto blocks = block_count(a.rows());
    std::vector<LossGrad> parts(blocks);
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < blocks; ++b)
        parts[b] = linear_partial(a, y, theta, b * kBlockRows, std::min(a.rows(), (b + 1) * kBlockRows));
    return combine(parts, a.rows());
}

NormalEquations normal_equations(const RowMatrix& a, std::span<const double> b) {
    check_rows(a.rows(), b.size());
    const auto blocks = block_count(a.rows());
    std::vector<NormalEquations> parts(blocks);
#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < blocks; ++k)
        parts[k] = gram_partial(a, b, k * kBlockRows, std::min(a.rows(), (k + 1) * kBlockRows));
    NormalEquations out = std::move(parts.front());
    for (std::size_t k = 1; k < parts.size(); ++k) {
        out.gram += parts[k].gram;
        out.rhs += parts[k].rhs;
    }
    return out;
}

Vector nn_predict(const NNModel& model, const RowMatrix& f) {
    check_inputs(model, f);
    Vector out(f.rows());
    const auto blocks = block_count(f.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        auto ws = model.make_workspace();
        const auto end = std::min(f.rows(), (b + 1) * kBlockRows);
        for (Eigen::Index r = b * kBlockRows; r < end; ++r)
            out(r) = model.forward(std::span<const double>(&f(r, 0), f.cols()), ws);
    }
    return out;
}

LossGrad nn_mse(const NNModel& model, const RowMatrix& f, std::span<const double> y) {
    check_rows(f.rows(), y.size());
    check_inputs(model, f);
    const auto blocks = block_count(f.rows());
    std::vector<LossGrad> parts(blocks);
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < blocks; ++b)
        parts[b] = nn_partial(model, f, y, b * kBlockRows, std::min(f.rows(), (b + 1) * kBlockRows));
    return combine(parts, f.rows());
}

} // namespace parallel

} // namespace imd2::kernels
