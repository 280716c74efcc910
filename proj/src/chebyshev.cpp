#include "imd2/chebyshev.hpp"

#include <cmath>
#include <string>

#include "imd2/error.hpp"

namespace imd2 {

void cheb_basis_into(double u, std::span<double> out) {
    if (!(u >= 0.0) || u > 1.0 + kChebClampSlack)
        throw DomainError("Chebyshev argument " + std::to_string(u) + " outside [0, 1]; input not normalized?");
    if (u > 1.0) u = 1.0;
    const std::size_t order = out.size();
    if (order == 0) return;
    out[0] = 1.0;
    if (order == 1) return;
    out[1] = u;
    for (std::size_t p = 2; p < order; ++p) out[p] = 2.0 * u * out[p - 1] - out[p - 2];
}

std::vector<double> cheb_basis(double u, std::size_t order) {
    if (order == 0) throw InvalidArgument("Chebyshev order must be positive");
    std::vector<double> out(order);
    cheb_basis_into(u, out);
    return out;
}

RowMatrix feature_matrix(const RowMatrix& embedded, std::size_t order) {
    if (order == 0) throw InvalidArgument("Chebyshev order must be positive");
    const auto rows = embedded.rows();
    const auto taps = embedded.cols();
    RowMatrix out(rows, taps * static_cast<Eigen::Index>(order));
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index k = 0; k < taps; ++k)
            cheb_basis_into(embedded(r, k), std::span<double>(&out(r, k * order), order));
    }
    return out;
}

ChebyshevModel::ChebyshevModel(DelaySet delays, std::size_t order, double input_scale)
    : ChebyshevModel(delays, order, RowMatrix::Zero(delays.size(), order), input_scale) {}

ChebyshevModel::ChebyshevModel(DelaySet delays, std::size_t order, RowMatrix theta, double input_scale)
    : delays_(std::move(delays)), order_(order), theta_(std::move(theta)), input_scale_(1.0) {
    if (order_ == 0) throw InvalidArgument("Chebyshev order must be positive");
    if (theta_.rows() != static_cast<Eigen::Index>(taps()) || theta_.cols() != static_cast<Eigen::Index>(order_))
        throw InvalidArgument("theta must be " + std::to_string(taps()) + "x" + std::to_string(order_));
    if (!theta_.allFinite()) throw InvalidArgument("theta has non-finite entries");
    set_input_scale(input_scale);
}

void ChebyshevModel::set_input_scale(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("input_scale must be positive");
    input_scale_ = scale;
}

Vector ChebyshevModel::flatten() const {
    return Eigen::Map<const Vector>(theta_.data(), theta_.size());
}

void ChebyshevModel::unflatten(const Vector& params) {
    if (params.size() != theta_.size())
        throw InvalidArgument("expected " + std::to_string(theta_.size()) + " parameters, got " +
                              std::to_string(params.size()));
    Eigen::Map<Vector>(theta_.data(), theta_.size()) = params;
}

double ChebyshevModel::forward(std::span<const double> row) const {
    if (row.size() != taps()) throw InvalidArgument("row length does not match tap count");
    double basis[64];
    std::vector<double> heap;
    std::span<double> t(basis, order_);
    if (order_ > 64) {
        heap.resize(order_);
        t = heap;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < taps(); ++k) {
        cheb_basis_into(row[k], t);
        for (std::size_t p = 0; p < order_; ++p) acc += theta_(k, p) * t[p];
    }
    return acc;
}

Vector ChebyshevModel::gradient(std::span<const double> row) const {
    if (row.size() != taps()) throw InvalidArgument("row length does not match tap count");
    Vector g(param_count());
    for (std::size_t k = 0; k < taps(); ++k) cheb_basis_into(row[k], std::span<double>(g.data() + k * order_, order_));
    return g;
}

} // namespace imd2
