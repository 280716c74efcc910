#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>

#include "imd2/kernels.hpp"
#include "imd2/loss.hpp"
#include "imd2/signal.hpp"

namespace imd2 {

// ---------------------------------------------------------------------------
// Regularized least squares
// ---------------------------------------------------------------------------

/// Solves (A^T A + lambda I) theta = A^T b. With lambda == 0 a singular or
/// underdetermined system raises RankDeficient.
Vector ls_solve(const RowMatrix& a, std::span<const double> b, double lambda);

/// Same, from already accumulated normal equations.
Vector ls_solve(const kernels::NormalEquations& ne, double lambda);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamHyper {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Vector m;
    Vector v;
    std::uint64_t k = 0;
    AdamHyper hyper;

    static AdamState fresh(std::size_t dim, AdamHyper hyper = {});
};

/// One bias-corrected Adam update of theta in place:
/// theta -= alpha * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, Vector& theta, const Vector& grad);

// ---------------------------------------------------------------------------
// Line search
// ---------------------------------------------------------------------------

struct LineSearchOptions {
    double c1 = 1e-4;
    double c2 = 0.9;
    std::size_t max_evals = 50;
    /// After a Wolfe point is found, try one cubic-interpolation step toward the
    /// exact minimizer along the ray (exact on quadratics).
    bool refine = true;
    /// Where f along the ray is flat to this relative tolerance (differences at
    /// round-off level), sufficient decrease is judged by the approximate Wolfe
    /// test of Hager and Zhang instead: slope(h) <= (2 c1 - 1) slope(0), with f
    /// allowed to rise by the tolerance. Zero disables it.
    double flat_tol = 1e-12;
};

struct LineSearchResult {
    bool ok = false;
    double step = 0.0;
    LossGrad at_step; ///< evaluation at theta + step * direction
    std::size_t evals = 0;
};

/// Strong-Wolfe line search along `direction` from theta, where `at_theta` is
/// the evaluation at theta. Throws InvalidArgument if `direction` is not a
/// descent direction. `ok == false` after max_evals evaluations.
LineSearchResult line_search(const LossProblem& problem, const Vector& theta, const LossGrad& at_theta,
                             const Vector& direction, double initial_step, const LineSearchOptions& opts = {});

// ---------------------------------------------------------------------------
// L-BFGS
// ---------------------------------------------------------------------------

struct CurvaturePair {
    Vector delta; ///< theta_{k+1} - theta_k
    Vector gamma; ///< grad_{k+1} - grad_k
};

struct LbfgsStepResult {
    bool accepted = false;
    /// Two consecutive line-search failures: converged or stuck; stop iterating.
    bool stuck = false;
    double step = 0.0;
    std::size_t evals = 0;
};

class LbfgsState;
LbfgsStepResult lbfgs_step(LbfgsState& state, const LossProblem& problem, Vector& theta, LossGrad& at_theta);

class LbfgsState {
public:
    explicit LbfgsState(std::size_t memory = 100, double curvature_eps = 1e-10);

    std::size_t memory() const noexcept { return memory_; }
    const std::deque<CurvaturePair>& pairs() const noexcept { return pairs_; }
    std::uint64_t steps() const noexcept { return k_; }

    /// Stores the pair unless <delta, gamma> <= curvature_eps * |delta| |gamma|.
    /// Returns whether it was stored. Drops the oldest pair beyond capacity.
    bool push(Vector delta, Vector gamma);
    void clear() { pairs_.clear(); }

    /// -H_k grad via the two-loop recursion, with H_0 = (<d,g>/<g,g>) I from the
    /// newest pair, or H_0 = I when `scale_initial` is false or memory is empty.
    Vector direction(const Vector& grad, bool scale_initial = true) const;

    LineSearchOptions line_search;
    bool scale_initial = true;

private:
    std::size_t memory_;
    double curvature_eps_;
    std::deque<CurvaturePair> pairs_;
    std::uint64_t k_ = 0;
    bool reset_tried_ = false;

    friend LbfgsStepResult lbfgs_step(LbfgsState&, const LossProblem&, Vector&, LossGrad&);
};

/// One L-BFGS iteration. `at_theta` must hold the evaluation at `theta`; both
/// are updated when the step is accepted. A failed line search clears the
/// memory so the next call takes a steepest-descent step; a second
/// consecutive failure reports `stuck`.
LbfgsStepResult lbfgs_step(LbfgsState& state, const LossProblem& problem, Vector& theta, LossGrad& at_theta);

} // namespace imd2
