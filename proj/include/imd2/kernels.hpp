#pragma once

// Data-parallel batch kernels over the sample axis. Every kernel exists twice:
// `serial::` is the straightforward reference loop kept for testing, and
// `parallel::` is the OpenMP version used by training.
//
// The parallel reductions split rows into fixed-size blocks (independent of the
// thread count) and combine block partials in block order, so results are
// bit-identical for any number of threads.

#include <span>

#include "imd2/loss.hpp"
#include "imd2/nn.hpp"
#include "imd2/signal.hpp"

namespace imd2::kernels {

inline constexpr Eigen::Index kBlockRows = 2048;

struct NormalEquations {
    RowMatrix gram; ///< A^T A
    Vector rhs;     ///< A^T b
};

namespace serial {

RowMatrix cheb_features(const RowMatrix& embedded, std::size_t order);
Vector linear_predict(const RowMatrix& features, const Vector& theta);
LossGrad linear_mse(const RowMatrix& features, std::span<const double> target, const Vector& theta);
NormalEquations normal_equations(const RowMatrix& a, std::span<const double> b);
Vector nn_predict(const NNModel& model, const RowMatrix& inputs);
LossGrad nn_mse(const NNModel& model, const RowMatrix& inputs, std::span<const double> target);

} // namespace serial

namespace parallel {

RowMatrix cheb_features(const RowMatrix& embedded, std::size_t order);
Vector linear_predict(const RowMatrix& features, const Vector& theta);
LossGrad linear_mse(const RowMatrix& features, std::span<const double> target, const Vector& theta);
NormalEquations normal_equations(const RowMatrix& a, std::span<const double> b);
Vector nn_predict(const NNModel& model, const RowMatrix& inputs);
LossGrad nn_mse(const NNModel& model, const RowMatrix& inputs, std::span<const double> target);

} // namespace parallel

} // namespace imd2::kernels
