#include <doctest.h>

#include <cmath>

#include "imd2/chain.hpp"
#include "imd2/error.hpp"
#include "imd2/kernels.hpp"
#include "imd2/metrics.hpp"
#include "imd2/train.hpp"
#include "support.hpp"

using namespace imd2;

namespace {

Dataset small_dataset(double noise_db, std::uint64_t seed = 1, std::size_t symbols = 2) {
    OfdmConfig o;
    o.n_symbols = symbols;
    o.seed = seed;
    ChainConfig c;
    c.noise_floor_db = noise_db;
    c.seed = seed;
    return imd2_chain(gen_ofdm(o), c);
}

double eval_nmse(const AnyModel& m, const Dataset& d) {
    const Prediction p = predict(m, d.tx());
    return nmse(p.y, d.rx().samples().subspan(p.begin)).nmse_db;
}

} // namespace

TEST_CASE("least squares hits the representability floor on noiseless memoryless data") {
    OfdmConfig o;
    o.n_symbols = 4;
    ChainConfig c;
    c.memory_fir = {1.0};
    c.noise_floor_db = -INFINITY;
    c.pa_p1db_dbm = INFINITY;
    const Dataset d = imd2_chain(gen_ofdm(o), c);
    ModelSpec spec;
    spec.delays = {0};
    spec.order = 3;
    OptimConfig cfg;
    cfg.method = Method::ls;
    cfg.lambda = 0.0;
    const TrainResult r = train(build_model(spec, 1), d, cfg);
    CHECK(r.iterations == 1);
    CHECK(r.history.records.size() == 1);
    CHECK(eval_nmse(r.model, d) <= -100.0);
}

TEST_CASE("nn with least squares is rejected") {
    OptimConfig cfg;
    cfg.method = Method::ls;
    CHECK_THROWS_AS(train(build_model(ModelSpec::default_nn(), 1), small_dataset(-24), cfg), UnsupportedCombination);
}

TEST_CASE("adam history has one record per iteration and matches the final model") {
    const Dataset d = small_dataset(-24);
    OptimConfig cfg;
    cfg.method = Method::adam;
    cfg.max_iters = 100;
    for (const ModelSpec& spec : {ModelSpec::default_chebyshev(), ModelSpec::default_nn()}) {
        const TrainResult r = train(build_model(spec, 3), d, cfg);
        REQUIRE(r.history.records.size() == 100);
        for (std::size_t i = 0; i < 100; ++i) CHECK(r.history.records[i].iter == i + 1);
        CHECK(r.status == TrainStatus::ok);
        CHECK(eval_nmse(r.model, d) == doctest::Approx(r.history.last()->nmse_db).epsilon(1e-9));

        std::size_t non_increasing = 0;
        for (std::size_t i = 1; i < 100; ++i)
            non_increasing += r.history.records[i].loss <= r.history.records[i - 1].loss;
        CHECK(non_increasing > 50);
    }
}

TEST_CASE("log_every thins the history but keeps requested iterations") {
    const Dataset d = small_dataset(-24);
    OptimConfig cfg;
    cfg.method = Method::adam;
    cfg.max_iters = 50;
    cfg.log_every = 20;
    const std::vector<std::size_t> keep{7};
    const TrainResult r = train(build_model(ModelSpec::default_chebyshev(), 1), d, cfg, keep);
    std::vector<std::size_t> iters;
    for (const auto& rec : r.history.records) iters.push_back(rec.iter);
    CHECK(iters == std::vector<std::size_t>{7, 20, 40, 50});
    CHECK(r.history.at_or_before(39)->iter == 20);
    CHECK(r.history.at_or_before(6) == nullptr);
}

TEST_CASE("least squares is optimal against perturbed parameters") {
    const Dataset d = small_dataset(-24);
    OptimConfig cfg;
    cfg.method = Method::ls;
    const TrainResult r = train(build_model(ModelSpec::default_chebyshev(), 1), d, cfg);
    const double best = eval_nmse(r.model, d);
    CHECK(best == doctest::Approx(r.history.last()->nmse_db).epsilon(1e-9));
    Rng rng(5);
    auto cheb = std::get<ChebyshevModel>(r.model);
    const Vector th = cheb.flatten();
    for (int i = 0; i < 20; ++i) {
        cheb.unflatten(th + 1e-3 * th.norm() * oracle::random_vector(rng, th.size()));
        CHECK(eval_nmse(cheb, d) >= best - 1e-9);
    }
}

TEST_CASE("lbfgs matches least squares on the chebyshev model") {
    const Dataset d = small_dataset(-24);
    OptimConfig ls;
    ls.method = Method::ls;
    OptimConfig lb;
    lb.max_iters = 2000;
    const double a = train(build_model(ModelSpec::default_chebyshev(), 1), d, ls).history.last()->nmse_db;
    const TrainResult r = train(build_model(ModelSpec::default_chebyshev(), 1), d, lb);
    CHECK(r.status == TrainStatus::ok);
    CHECK(std::abs(r.history.last()->nmse_db - a) <= 0.01);
    for (std::size_t i = 1; i < r.history.records.size(); ++i)
        CHECK(r.history.records[i].loss <= r.history.records[i - 1].loss * (1 + 1e-12));
}

TEST_CASE("training is deterministic") {
    const Dataset d = small_dataset(-24);
    OptimConfig cfg;
    cfg.max_iters = 30;
    const TrainResult a = train(build_model(ModelSpec::default_nn(), 4), d, cfg);
    const TrainResult b = train(build_model(ModelSpec::default_nn(), 4), d, cfg);
    CHECK(std::get<NNModel>(a.model).flatten() == std::get<NNModel>(b.model).flatten());
    CHECK(a.history.last()->loss == b.history.last()->loss);
}

TEST_CASE("divergence rolls back to the last finite parameters") {
    const Dataset d = small_dataset(-24);
    OptimConfig cfg;
    cfg.method = Method::adam;
    cfg.lr = 1e306;
    cfg.max_iters = 20;
    const TrainResult r = train(build_model(ModelSpec::default_chebyshev(), 1), d, cfg);
    CHECK(r.status == TrainStatus::numeric_failure);
    CHECK(std::get<ChebyshevModel>(r.model).theta().allFinite());
}

TEST_CASE("model stores the training scale") {
    const Dataset d = small_dataset(-24);
    OptimConfig cfg;
    cfg.method = Method::ls;
    const TrainResult r = train(build_model(ModelSpec::default_chebyshev(), 1), d, cfg);
    CHECK(input_scale_of(r.model) == d.tx().peak_magnitude());
    CHECK(param_count(r.model) == 24);
    CHECK(param_count(build_model(ModelSpec::default_nn(), 1)) == 17);
    CHECK(kind_of(r.model) == ModelKind::chebyshev);
}

TEST_CASE("config validation") {
    OptimConfig c;
    c.max_iters = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.lr = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(method_from_string("lbfgs") == Method::lbfgs);
    CHECK_THROWS_AS(method_from_string("sgd"), ConfigError);
    CHECK(model_kind_from_string("polynomial") == ModelKind::chebyshev);
}
