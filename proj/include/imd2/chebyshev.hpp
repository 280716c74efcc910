#pragma once

#include <span>
#include <vector>

#include "imd2/signal.hpp"

namespace imd2 {

/// Slack above 1 tolerated (and clamped) by the Chebyshev evaluation.
inline constexpr double kChebClampSlack = 1e-12;

/// (T_0(u), ..., T_{order-1}(u)) via T_{p+1} = 2u T_p - T_{p-1}.
/// Throws DomainError when u is outside [0, 1 + kChebClampSlack].
std::vector<double> cheb_basis(double u, std::size_t order);

/// Writes the basis into `out` (size = order) without allocating.
void cheb_basis_into(double u, std::span<double> out);

/// Row n is the concatenation over delays k of cheb_basis(embedded(n, k), order):
/// column index = k * order + p.
RowMatrix feature_matrix(const RowMatrix& embedded, std::size_t order);

/// Memory polynomial y_n = sum_k sum_p theta(k, p) T_p(|x_{n-d_k}|).
class ChebyshevModel {
public:
    /// Zero coefficients.
    ChebyshevModel(DelaySet delays, std::size_t order, double input_scale = 1.0);
    ChebyshevModel(DelaySet delays, std::size_t order, RowMatrix theta, double input_scale);

    const DelaySet& delays() const noexcept { return delays_; }
    std::size_t order() const noexcept { return order_; }
    std::size_t taps() const noexcept { return delays_.size(); }
    const RowMatrix& theta() const noexcept { return theta_; }
    double input_scale() const noexcept { return input_scale_; }
    void set_input_scale(double scale);

    std::size_t param_count() const noexcept { return taps() * order_; }
    /// Row-major (k major, p minor); identical to the feature column order.
    Vector flatten() const;
    void unflatten(const Vector& params);

    /// Output for one embedded row (length taps(), entries in [0, 1]).
    double forward(std::span<const double> row) const;
    /// dy/dtheta, which is the feature row itself.
    Vector gradient(std::span<const double> row) const;

private:
    DelaySet delays_;
    std::size_t order_;
    RowMatrix theta_;
    double input_scale_;
};

} // namespace imd2
