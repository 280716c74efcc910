#include "imd2/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imd2/error.hpp"

namespace imd2 {

LossGrad LossProblem::operator()(const Vector& theta) const {
    if (static_cast<std::size_t>(theta.size()) != dim) throw InvalidArgument("parameter vector has wrong length");
    LossGrad out = eval(theta);
    if (static_cast<std::size_t>(out.grad.size()) != dim) throw InvalidArgument("gradient has wrong length");
    return out;
}

// ---------------------------------------------------------------------------

Vector ls_solve(const kernels::NormalEquations& ne, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
    const auto n = ne.gram.cols();
    if (!ne.gram.allFinite() || !ne.rhs.allFinite()) throw NumericFailure("non-finite normal equations");
    RowMatrix lhs = ne.gram;
    lhs.diagonal().array() += lambda;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
    // With lambda > 0 the system is positive definite in exact arithmetic, so
    // small pivots are kept rather than truncated.
    qr.setThreshold(lambda > 0.0 ? 0.0 : 1e-13);
    if (lambda == 0.0 && qr.rank() < n) {
        throw RankDeficient("normal equations are rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                            std::to_string(n) + "); use lambda > 0");
    }
    Vector theta = qr.solve(ne.rhs);
    // One step of iterative refinement.
    const Vector r = ne.rhs - lhs * theta;
    theta += qr.solve(r);
    return theta;
}

Vector ls_solve(const RowMatrix& a, std::span<const double> b, double lambda) {
    if (lambda == 0.0 && a.rows() < a.cols())
        throw RankDeficient("fewer rows than unknowns; use lambda > 0");
    if (!a.allFinite()) throw InvalidArgument("design matrix has non-finite entries");
    return ls_solve(kernels::parallel::normal_equations(a, b), lambda);
}

// ---------------------------------------------------------------------------

AdamState AdamState::fresh(std::size_t dim, AdamHyper hyper) {
    return AdamState{Vector::Zero(dim), Vector::Zero(dim), 0, hyper};
}

void adam_step(AdamState& s, Vector& theta, const Vector& grad) {
    if (theta.size() != grad.size() || s.m.size() != grad.size())
        throw InvalidArgument("Adam state, parameters and gradient differ in length");
    const auto& h = s.hyper;
    ++s.k;
    s.m = h.beta1 * s.m + (1.0 - h.beta1) * grad;
    s.v = h.beta2 * s.v + (1.0 - h.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.k));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.k));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double m_hat = s.m(i) / c1;
        const double v_hat = s.v(i) / c2;
        theta(i) -= h.alpha * m_hat / (std::sqrt(v_hat) + h.eps);
    }
}

// ---------------------------------------------------------------------------

namespace {

struct Probe {
    double step;
    double f;
    double slope; // directional derivative
};

// Minimizer of the cubic through (a.step, a.f, a.slope) and (b.step, b.f, b.slope).
// NaN when the cubic has no interior minimizer.
double cubic_min(const Probe& a, const Probe& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.step - b.step);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (!(disc >= 0.0)) return std::nan("");
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    const double den = b.slope - a.slope + 2.0 * d2;
    if (den == 0.0) return std::nan("");
    return b.step - (b.step - a.step) * (b.slope + d2 - d1) / den;
}

// Zero of the linear interpolant of the slopes; NaN without positive curvature.
double secant_min(const Probe& a, const Probe& b) {
    const double ds = (b.slope - a.slope) / (b.step - a.step);
    if (!(ds > 0.0)) return std::nan("");
    return a.step - a.slope / ds;
}

struct RayEval {
    const LossProblem& problem;
    const Vector& theta;
    const Vector& dir;
    std::size_t evals = 0;
    LossGrad last;

    Probe at(double h) {
        ++evals;
        last = problem(theta + h * dir);
        const double f = last.loss;
        const double slope = last.grad.dot(dir);
        return {h, std::isfinite(f) && std::isfinite(slope) ? f : INFINITY, slope};
    }
};

} // namespace

LineSearchResult line_search(const LossProblem& problem, const Vector& theta, const LossGrad& at_theta,
                             const Vector& direction, double initial_step, const LineSearchOptions& opts) {
    if (!std::isfinite(at_theta.loss)) throw NumericFailure("non-finite loss at line-search origin");
    const double slope0 = at_theta.grad.dot(direction);
    if (!(slope0 < 0.0)) throw InvalidArgument("line search direction is not a descent direction");
    if (!(initial_step > 0.0)) throw InvalidArgument("initial step must be positive");

    const Probe origin{0.0, at_theta.loss, slope0};
    RayEval ray{problem, theta, direction, 0, {}};
    LineSearchResult out;

    auto flat = [&](const Probe& p) { return std::abs(p.f - origin.f) <= opts.flat_tol * std::abs(origin.f); };
    auto armijo = [&](const Probe& p) {
        if (p.f <= origin.f + opts.c1 * p.step * slope0) return true;
        return flat(p) && p.slope <= (2.0 * opts.c1 - 1.0) * slope0;
    };
    auto curvature = [&](const Probe& p) { return std::abs(p.slope) <= -opts.c2 * slope0; };
    // f no longer orders points when it is flat; the slope sign does.
    auto higher = [&](const Probe& p, const Probe& ref) {
        if (flat(p) && flat(ref)) return p.slope * (p.step - ref.step) > 0.0 && !curvature(p);
        return p.f >= ref.f;
    };
    auto interpolate = [&](const Probe& a, const Probe& b) {
        return flat(a) && flat(b) ? secant_min(a, b) : cubic_min(a, b);
    };
    auto accept = [&](const Probe& p) {
        out.ok = true;
        out.step = p.step;
        out.at_step = ray.last;
        out.evals = ray.evals;
    };

    auto zoom = [&](Probe lo, Probe hi) {
        while (ray.evals < opts.max_evals) {
            const double width = hi.step - lo.step;
            double h = interpolate(lo, hi);
            const double a = std::min(lo.step, hi.step), b = std::max(lo.step, hi.step);
            const double margin = 0.1 * (b - a);
            if (!std::isfinite(h) || !std::isfinite(hi.f) || h < a + margin || h > b - margin)
                h = lo.step + 0.5 * width;
            const Probe p = ray.at(h);
            if (!armijo(p) || higher(p, lo)) {
                hi = p;
            } else {
                if (curvature(p)) {
                    accept(p);
                    return;
                }
                if (p.slope * (hi.step - lo.step) >= 0.0) hi = lo;
                lo = p;
            }
            if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
        }
    };

    Probe prev = origin;
    double h = initial_step;
    while (ray.evals < opts.max_evals) {
        const Probe p = ray.at(h);
        if (!std::isfinite(p.f)) {
            // Overflow: treat as an overshoot and shrink toward the last good point.
            h = prev.step + 0.5 * (h - prev.step);
            continue;
        }
        if (!armijo(p) || (ray.evals > 1 && higher(p, prev))) {
            zoom(prev, p);
            break;
        }
        if (curvature(p)) {
            accept(p);
            break;
        }
        if (p.slope >= 0.0) {
            zoom(p, prev);
            break;
        }
        prev = p;
        h *= 2.0;
    }
    if (!out.ok) {
        out.evals = ray.evals;
        return out;
    }

    if (opts.refine) {
        const Probe wolfe{out.step, out.at_step.loss, out.at_step.grad.dot(direction)};
        if (std::abs(wolfe.slope) > 1e-12 * std::abs(slope0)) {
            const double h_star = interpolate(origin, wolfe);
            if (std::isfinite(h_star) && h_star > 0.0 && h_star <= 100.0 * wolfe.step && h_star != wolfe.step) {
                const Probe p = ray.at(h_star);
                const bool better = p.f < wolfe.f || (flat(p) && std::abs(p.slope) < std::abs(wolfe.slope));
                if (std::isfinite(p.f) && better && armijo(p) && curvature(p)) {
                    accept(p);
                    return out;
                }
            }
        }
        out.evals = ray.evals;
    }
    return out;
}

// ---------------------------------------------------------------------------

LbfgsState::LbfgsState(std::size_t memory, double curvature_eps) : memory_(memory), curvature_eps_(curvature_eps) {
    if (memory_ == 0) throw InvalidArgument("L-BFGS memory must be positive");
}

bool LbfgsState::push(Vector delta, Vector gamma) {
    const double dg = delta.dot(gamma);
    if (!(dg > curvature_eps_ * delta.norm() * gamma.norm())) return false;
    pairs_.push_back({std::move(delta), std::move(gamma)});
    if (pairs_.size() > memory_) pairs_.pop_front();
    return true;
}

Vector LbfgsState::direction(const Vector& grad, bool scale) const {
    Vector q = grad;
    const std::size_t n = pairs_.size();
    std::vector<double> alpha(n), rho(n);
    for (std::size_t i = n; i-- > 0;) {
        const auto& p = pairs_[i];
        rho[i] = 1.0 / p.delta.dot(p.gamma);
        alpha[i] = rho[i] * p.delta.dot(q);
        q -= alpha[i] * p.gamma;
    }
    if (scale && n > 0) {
        const auto& last = pairs_.back();
        q *= last.delta.dot(last.gamma) / last.gamma.squaredNorm();
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = pairs_[i];
        const double beta = rho[i] * p.gamma.dot(q);
        q += (alpha[i] - beta) * p.delta;
    }
    return -q;
}

LbfgsStepResult lbfgs_step(LbfgsState& state, const LossProblem& problem, Vector& theta, LossGrad& at_theta) {
    LbfgsStepResult res;
    if (!std::isfinite(at_theta.loss) || !at_theta.grad.allFinite())
        throw NumericFailure("non-finite loss or gradient at current iterate");
    const double gnorm = at_theta.grad.norm();
    if (gnorm == 0.0) {
        res.stuck = true;
        return res;
    }

    Vector dir = state.direction(at_theta.grad, state.scale_initial);
    if (!(at_theta.grad.dot(dir) < 0.0)) {
        state.clear();
        dir = -at_theta.grad;
    }
    const double h0 = state.pairs_.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

    LineSearchResult ls = line_search(problem, theta, at_theta, dir, h0, state.line_search);
    res.evals = ls.evals;
    if (!ls.ok) {
        if (state.reset_tried_) {
            res.stuck = true;
        } else {
            state.clear();
            state.reset_tried_ = true;
        }
        return res;
    }
    Vector delta = ls.step * dir;
    Vector gamma = ls.at_step.grad - at_theta.grad;
    theta += delta;
    at_theta = std::move(ls.at_step);
    state.push(std::move(delta), std::move(gamma));
    state.reset_tried_ = false;
    ++state.k_;
    res.accepted = true;
    res.step = ls.step;
    return res;
}

} // namespace imd2
