#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imd2/chebyshev.hpp"
#include "imd2/nn.hpp"
#include "imd2/signal.hpp"

namespace imd2 {

enum class ModelKind { chebyshev, nn };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& name);

/// Architecture of a canceller before any fitting.
struct ModelSpec {
    ModelKind kind = ModelKind::chebyshev;
    std::vector<std::size_t> delays{0, 1, 2};
    std::size_t order = 8;                 ///< Chebyshev only
    std::vector<std::size_t> widths{3, 2, 1}; ///< NN only
    Activation activation = Activation::sigmoid;

    /// K = 3 taps, P = 8: 24 coefficients.
    static ModelSpec default_chebyshev();
    /// M = 3 delays, 3-2-1 dense layers: 17 weights.
    static ModelSpec default_nn();
};

using AnyModel = std::variant<ChebyshevModel, NNModel>;

/// Zero coefficients for Chebyshev; Glorot-uniform weights from `seed` for NN.
AnyModel build_model(const ModelSpec& spec, std::uint64_t seed);

std::size_t param_count(const AnyModel& m);
const DelaySet& delays_of(const AnyModel& m);
double input_scale_of(const AnyModel& m);
ModelKind kind_of(const AnyModel& m);

enum class Method { ls, adam, lbfgs };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// One iteration is one full-batch gradient step (one solve for ls).
struct OptimConfig {
    Method method = Method::lbfgs;
    std::size_t max_iters = 20000;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t lbfgs_memory = 100;
    double grad_tol = 1e-12; ///< on the normalized-target loss gradient
    std::size_t log_every = 1;
    std::uint64_t seed = 1;
    double lambda = 1e-9;

    void validate() const;
};

struct IterRecord {
    std::size_t iter = 0;
    double loss = 0.0;    ///< mean squared error in Rx units
    double nmse_db = 0.0; ///< against Rx power
    double wall_time_s = 0.0;
};

struct TrainHistory {
    std::vector<IterRecord> records;

    /// Latest record with iter <= `iter`, or nullptr.
    const IterRecord* at_or_before(std::size_t iter) const;
    const IterRecord* last() const { return records.empty() ? nullptr : &records.back(); }
};

enum class TrainStatus { ok, numeric_failure };

struct TrainResult {
    AnyModel model;
    TrainHistory history;
    TrainStatus status = TrainStatus::ok;
    std::string message;     ///< stop reason or failure diagnostics
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
};

/// Fits `initial` to `data`. The dataset's Tx is normalized to unit peak
/// magnitude (the scale lands in the model's input_scale) and the target is
/// normalized to unit RMS while optimizing; the returned model maps raw Tx to
/// Rx units. Records every `log_every` iterations plus every entry of
/// `always_record` and the final iteration.
/// Throws UnsupportedCombination for ls on an NN.
TrainResult train(const AnyModel& initial, const Dataset& data, const OptimConfig& cfg,
                  std::span<const std::size_t> always_record = {});

/// Model output over the dataset. Output index i corresponds to sample
/// `begin + i`, begin = max delay. Uses the model's stored input_scale.
struct Prediction {
    std::vector<double> y;
    std::size_t begin = 0;
};

Prediction predict(const AnyModel& model, const ComplexSequence& tx);

} // namespace imd2
