#pragma once

#include <cstddef>
#include <functional>

#include "imd2/signal.hpp"

namespace imd2 {

struct LossGrad {
    double loss = 0.0; ///< mean squared error
    Vector grad;       ///< d loss / d params
};

/// Objective over a flat parameter vector. `eval` must be deterministic.
struct LossProblem {
    std::size_t dim = 0;
    std::function<LossGrad(const Vector&)> eval;

    /// Evaluates and checks the result shape. Non-finite loss is returned as is.
    LossGrad operator()(const Vector& theta) const;
};

} // namespace imd2
