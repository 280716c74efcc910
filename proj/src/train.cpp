#include "imd2/train.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <type_traits>

#include "imd2/error.hpp"
#include "imd2/kernels.hpp"
#include "imd2/optim.hpp"

namespace imd2 {

std::string to_string(ModelKind k) { return k == ModelKind::chebyshev ? "chebyshev" : "nn"; }

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "chebyshev" || name == "polynomial") return ModelKind::chebyshev;
    if (name == "nn") return ModelKind::nn;
    throw ConfigError("unknown model type '" + name + "' (expected chebyshev or nn)");
}

std::string to_string(Method m) {
    switch (m) {
    case Method::ls: return "ls";
    case Method::adam: return "adam";
    case Method::lbfgs: return "lbfgs";
    }
    return "?";
}

Method method_from_string(const std::string& name) {
    if (name == "ls") return Method::ls;
    if (name == "adam") return Method::adam;
    if (name == "lbfgs" || name == "l-bfgs") return Method::lbfgs;
    throw ConfigError("unknown optimizer '" + name + "' (expected ls, adam or lbfgs)");
}

ModelSpec ModelSpec::default_chebyshev() {
    ModelSpec s;
    s.kind = ModelKind::chebyshev;
    s.delays = {0, 1, 2};
    s.order = 8;
    return s;
}

ModelSpec ModelSpec::default_nn() {
    ModelSpec s;
    s.kind = ModelKind::nn;
    s.delays = {0, 1, 2};
    s.widths = {3, 2, 1};
    return s;
}

AnyModel build_model(const ModelSpec& spec, std::uint64_t seed) {
    DelaySet delays(spec.delays);
    if (spec.kind == ModelKind::chebyshev) return ChebyshevModel(delays, spec.order);
    return init_weights(delays, spec.widths, spec.activation, seed);
}

std::size_t param_count(const AnyModel& m) {
    return std::visit([](const auto& v) { return v.param_count(); }, m);
}

const DelaySet& delays_of(const AnyModel& m) {
    return std::visit([](const auto& v) -> const DelaySet& { return v.delays(); }, m);
}

double input_scale_of(const AnyModel& m) {
    return std::visit([](const auto& v) { return v.input_scale(); }, m);
}

ModelKind kind_of(const AnyModel& m) {
    return std::holds_alternative<ChebyshevModel>(m) ? ModelKind::chebyshev : ModelKind::nn;
}

void OptimConfig::validate() const {
    if (max_iters == 0) throw ConfigError("max_iters: must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr: must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1: must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2: must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps: must be positive");
    if (lbfgs_memory == 0) throw ConfigError("lbfgs_memory: must be positive");
    if (!(grad_tol >= 0.0)) throw ConfigError("grad_tol: must be >= 0");
    if (log_every == 0) throw ConfigError("log_every: must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda: must be >= 0");
}

const IterRecord* TrainHistory::at_or_before(std::size_t iter) const {
    const IterRecord* best = nullptr;
    for (const auto& r : records) {
        if (r.iter > iter) break;
        best = &r;
    }
    return best;
}

namespace {

using Clock = std::chrono::steady_clock;

RowMatrix embed_inputs(const AnyModel& model, const ComplexSequence& tx) {
    const ComplexSequence scaled = apply_scale(tx, input_scale_of(model));
    return delay_embed(scaled, delays_of(model));
}

// Problem over the flat parameter vector with the normalized target.
struct Fit {
    LossProblem problem;
    Vector theta;
};

class Recorder {
public:
    Recorder(const OptimConfig& cfg, std::span<const std::size_t> always, double target_power, double y_scale)
        : cfg_(cfg), always_(always), target_power_(target_power), y_scale2_(y_scale * y_scale),
          start_(Clock::now()) {}

    void operator()(std::size_t iter, double norm_loss, bool force = false) {
        bool keep = force || iter % cfg_.log_every == 0;
        for (auto a : always_) keep = keep || a == iter;
        if (!keep) return;
        if (!history.records.empty() && history.records.back().iter == iter) return;
        const double ratio = norm_loss / target_power_;
        history.records.push_back({iter, norm_loss * y_scale2_,
                                   ratio > 0.0 ? 10.0 * std::log10(ratio) : -INFINITY,
                                   std::chrono::duration<double>(Clock::now() - start_).count()});
    }

    TrainHistory history;

private:
    const OptimConfig& cfg_;
    std::span<const std::size_t> always_;
    double target_power_;
    double y_scale2_;
    Clock::time_point start_;
};

} // namespace

TrainResult train(const AnyModel& initial, const Dataset& data, const OptimConfig& cfg,
                  std::span<const std::size_t> always_record) {
    cfg.validate();
    const bool is_nn = std::holds_alternative<NNModel>(initial);
    if (is_nn && cfg.method == Method::ls)
        throw UnsupportedCombination("least squares needs a model linear in its parameters; the NN is not (N/A)");

    AnyModel model = initial;
    const auto [normalized, scale] = normalize_magnitude(data.tx());
    std::visit([s = scale](auto& m) { m.set_input_scale(s); }, model);

    const DelaySet& delays = delays_of(model);
    const Dataset view = data.embedded_for(delays);
    const RowMatrix inputs = delay_embed(normalized, delays);
    const auto raw_target = view.target();

    double power = 0.0;
    for (double v : raw_target) power += v * v;
    power /= static_cast<double>(raw_target.size());
    if (!(power > 0.0)) throw DegenerateInput("rx is all zero over the valid range");
    const double y_scale = std::sqrt(power);
    std::vector<double> target(raw_target.begin(), raw_target.end());
    double target_power = 0.0;
    for (auto& v : target) {
        v /= y_scale;
        target_power += v * v;
    }
    target_power /= static_cast<double>(target.size());

    Fit fit;
    RowMatrix features;
    std::optional<NNModel> scratch;
    if (auto* cheb = std::get_if<ChebyshevModel>(&model)) {
        features = kernels::parallel::cheb_features(inputs, cheb->order());
        fit.theta = cheb->flatten();
        fit.problem = {static_cast<std::size_t>(fit.theta.size()), [&](const Vector& th) {
                           return kernels::parallel::linear_mse(features, target, th);
                       }};
    } else {
        scratch = std::get<NNModel>(model);
        fit.theta = scratch->flatten();
        fit.problem = {static_cast<std::size_t>(fit.theta.size()), [&](const Vector& th) {
                           scratch->unflatten(th);
                           return kernels::parallel::nn_mse(*scratch, inputs, target);
                       }};
    }

    Recorder record(cfg, always_record, target_power, y_scale);
    TrainResult result{model, {}, TrainStatus::ok, "", 0, 0};
    Vector good = fit.theta;

    auto fail = [&](const std::string& why) {
        result.status = TrainStatus::numeric_failure;
        result.message = why;
        fit.theta = good;
    };

    switch (cfg.method) {
    case Method::ls: {
        fit.theta = ls_solve(kernels::parallel::normal_equations(features, target), cfg.lambda);
        const LossGrad e = fit.problem(fit.theta);
        result.evaluations = 1;
        result.iterations = 1;
        record(1, e.loss, true);
        result.message = "closed-form solution";
        break;
    }
    case Method::adam: {
        AdamState state = AdamState::fresh(fit.problem.dim, {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps});
        LossGrad e = fit.problem(fit.theta);
        ++result.evaluations;
        if (!std::isfinite(e.loss)) {
            fail("non-finite loss at the initial point");
            break;
        }
        result.message = "max_iters reached";
        for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
            good = fit.theta;
            adam_step(state, fit.theta, e.grad);
            e = fit.problem(fit.theta);
            ++result.evaluations;
            if (!std::isfinite(e.loss) || !e.grad.allFinite()) {
                fail("non-finite loss at iteration " + std::to_string(k));
                break;
            }
            result.iterations = k;
            const bool done = e.grad.norm() <= cfg.grad_tol;
            record(k, e.loss, done || k == cfg.max_iters);
            if (done) {
                result.message = "gradient tolerance reached";
                break;
            }
        }
        break;
    }
    case Method::lbfgs: {
        LbfgsState state(cfg.lbfgs_memory);
        LossGrad e = fit.problem(fit.theta);
        ++result.evaluations;
        if (!std::isfinite(e.loss)) {
            fail("non-finite loss at the initial point");
            break;
        }
        result.message = "max_iters reached";
        for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
            if (e.grad.norm() <= cfg.grad_tol) {
                result.message = "gradient tolerance reached";
                break;
            }
            good = fit.theta;
            LbfgsStepResult step;
            try {
                step = lbfgs_step(state, fit.problem, fit.theta, e);
            } catch (const NumericFailure& ex) {
                fail(ex.what());
                break;
            }
            result.evaluations += step.evals;
            result.iterations = k;
            record(k, e.loss, step.stuck || k == cfg.max_iters);
            if (step.stuck) {
                result.message = "line search cannot make progress (converged or stuck)";
                break;
            }
        }
        break;
    }
    }

    result.history = std::move(record.history);

    std::visit(
        [&](auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ChebyshevModel>)
                m.unflatten(fit.theta * y_scale);
            else {
                m.unflatten(fit.theta);
                m.scale_output(y_scale);
            }
        },
        result.model);
    return result;
}

Prediction predict(const AnyModel& model, const ComplexSequence& tx) {
    const RowMatrix inputs = embed_inputs(model, tx);
    Prediction out;
    out.begin = delays_of(model).max();
    Vector y;
    if (const auto* cheb = std::get_if<ChebyshevModel>(&model)) {
        const RowMatrix features = kernels::parallel::cheb_features(inputs, cheb->order());
        y = kernels::parallel::linear_predict(features, cheb->flatten());
    } else {
        y = kernels::parallel::nn_predict(std::get<NNModel>(model), inputs);
    }
    out.y.assign(y.data(), y.data() + y.size());
    return out;
}

} // namespace imd2
