#include "imd2/report.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>

#include "imd2/config.hpp"
#include "imd2/error.hpp"

namespace imd2 {

namespace {

json nmse_json(double db) { return number_json(db); }

json report_config(const ModelSpec& spec, const OptimConfig& optim) {
    return {{"model", to_json(spec)}, {"optimizer", to_json(optim)}};
}

} // namespace

json RunReport::to_json() const {
    json cps = json::array();
    for (const auto& c : checkpoints)
        cps.push_back({{"iter", c.iter}, {"nmse_db", nmse_json(c.nmse_db)}, {"suppression_db", nmse_json(c.suppression_db)}});
    return {{"model", imd2::to_json(model)},
            {"optimizer", imd2::to_json(optimizer)},
            {"param_count", param_count},
            {"seed", optimizer.seed},
            {"config_hash", config_hash},
            {"iterations", iterations},
            {"evaluations", evaluations},
            {"status", status},
            {"message", message},
            {"checkpoints", cps},
            {"final",
             {{"nmse_db", nmse_json(final_nmse.nmse_db)},
              {"suppression_db", nmse_json(final_nmse.suppression_db)},
              {"num_samples", final_nmse.num_samples},
              {"denominator_convention", "rx_power"},
              {"nmse_tx_denominator_db", nmse_json(final_nmse_tx_db)}}}};
}

json RunReport::timing_json() const { return {{"config_hash", config_hash}, {"wall_time_s", wall_time_s}}; }

RunReport make_run_report(const ModelSpec& spec, const OptimConfig& optim, const TrainResult& result,
                          const Dataset& data, std::span<const std::size_t> checkpoints) {
    RunReport r;
    r.model = spec;
    r.optimizer = optim;
    r.param_count = param_count(result.model);
    r.iterations = result.iterations;
    r.evaluations = result.evaluations;
    r.status = result.status == TrainStatus::ok ? "ok" : "numeric_failure";
    r.message = result.message;
    r.config_hash = config_hash(report_config(spec, optim));
    if (const auto* last = result.history.last()) r.wall_time_s = last->wall_time_s;
    // Checkpoints past an exhausted budget were never reached. A run that
    // stopped early on convergence holds its final value from then on.
    const bool converged = result.status == TrainStatus::ok && result.iterations < optim.max_iters;
    for (auto cp : checkpoints) {
        if (cp > result.iterations && !converged) continue;
        if (const auto* rec = result.history.at_or_before(cp)) r.checkpoints.push_back({cp, rec->nmse_db, -rec->nmse_db});
    }
    const Prediction pred = predict(result.model, data.tx());
    const auto ref = data.rx().samples().subspan(pred.begin);
    r.final_nmse = nmse(pred.y, ref);
    r.final_nmse_tx_db = nmse_tx_denominator_db(pred.y, ref, data.tx().samples().subspan(pred.begin));
    return r;
}

// ---------------------------------------------------------------------------

SuiteConfig SuiteConfig::default_suite() {
    SuiteConfig s;
    const std::pair<const char*, ModelSpec> models[] = {{"polynomial", ModelSpec::default_chebyshev()},
                                                        {"nn", ModelSpec::default_nn()}};
    const std::pair<const char*, Method> methods[] = {{"ls", Method::ls}, {"adam", Method::adam}, {"lbfgs", Method::lbfgs}};
    for (const auto& [ml, spec] : models) {
        for (const auto& [ol, method] : methods) {
            OptimConfig o;
            o.method = method;
            s.rows.push_back({ml, ol, spec, o});
        }
    }
    s.reseed(1);
    return s;
}

void SuiteConfig::reseed(std::uint64_t new_seed) {
    seed = new_seed;
    ofdm.seed = new_seed;
    chain.seed = new_seed;
    for (auto& r : rows) r.optimizer.seed = new_seed;
}

json SuiteConfig::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"model_label", r.model_label},
                             {"optimizer_label", r.optimizer_label},
                             {"model", imd2::to_json(r.model)},
                             {"optimizer", imd2::to_json(r.optimizer)}});
    json j{{"seed", seed}, {"checkpoints", checkpoints}, {"rows", rows_json}};
    if (dataset) {
        j["dataset"] = dataset->generic_string();
    } else {
        j["ofdm"] = imd2::to_json(ofdm);
        j["chain"] = imd2::to_json(chain);
    }
    return j;
}

SuiteConfig suite_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("suite: expected a table/object");
    for (const auto& [k, v] : j.items()) {
        static const char* known[] = {"seed", "checkpoints", "ofdm", "chain", "dataset", "models", "optimizers", "pairs"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* n) { return k == n; }) == std::end(known))
            throw ConfigError("suite." + k + ": unknown field");
    }
    SuiteConfig s = SuiteConfig::default_suite();
    if (j.contains("ofdm")) s.ofdm = ofdm_config_from_json(j.at("ofdm"));
    if (j.contains("chain")) s.chain = chain_config_from_json(j.at("chain"));
    if (j.contains("dataset")) s.dataset = j.at("dataset").get<std::string>();
    if (j.contains("checkpoints")) {
        const auto& c = j.at("checkpoints");
        if (!c.is_array() || c.empty()) throw ConfigError("suite.checkpoints: expected a nonempty array");
        s.checkpoints.clear();
        for (const auto& v : c) {
            if (!v.is_number_integer() || v.get<long long>() <= 0)
                throw ConfigError("suite.checkpoints: expected positive integers");
            if (!s.checkpoints.empty() && v.get<std::size_t>() <= s.checkpoints.back())
                throw ConfigError("suite.checkpoints: must be strictly increasing");
            s.checkpoints.push_back(v.get<std::size_t>());
        }
    }

    std::map<std::string, ModelSpec> models{{"polynomial", ModelSpec::default_chebyshev()}, {"nn", ModelSpec::default_nn()}};
    std::map<std::string, OptimConfig> optimizers;
    for (auto m : {Method::ls, Method::adam, Method::lbfgs}) {
        OptimConfig o;
        o.method = m;
        optimizers[to_string(m)] = o;
    }
    if (j.contains("models"))
        for (const auto& [k, v] : j.at("models").items()) models[k] = model_spec_from_json(v);
    if (j.contains("optimizers"))
        for (const auto& [k, v] : j.at("optimizers").items()) optimizers[k] = optim_config_from_json(v);

    if (j.contains("pairs")) {
        s.rows.clear();
        for (const auto& p : j.at("pairs")) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
                throw ConfigError("suite.pairs: expected [model_label, optimizer_label] entries");
            const auto ml = p[0].get<std::string>(), ol = p[1].get<std::string>();
            if (!models.count(ml)) throw ConfigError("suite.pairs: unknown model '" + ml + "'");
            if (!optimizers.count(ol)) throw ConfigError("suite.pairs: unknown optimizer '" + ol + "'");
            s.rows.push_back({ml, ol, models.at(ml), optimizers.at(ol)});
        }
    } else {
        for (auto& r : s.rows) {
            r.model = models.at(r.model_label);
            r.optimizer = optimizers.at(r.optimizer_label);
        }
    }
    const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : s.seed;
    // Explicit seeds in the ofdm/chain tables win over the suite seed.
    const auto ofdm_seed = s.ofdm.seed;
    const auto chain_seed = s.chain.seed;
    s.reseed(seed);
    if (j.contains("ofdm") && j.at("ofdm").contains("seed")) s.ofdm.seed = ofdm_seed;
    if (j.contains("chain") && j.at("chain").contains("seed")) s.chain.seed = chain_seed;
    return s;
}

Dataset suite_dataset(const SuiteConfig& suite) {
    if (suite.dataset) return load_dataset(*suite.dataset, format_from_path(*suite.dataset));
    return imd2_chain(gen_ofdm(suite.ofdm), suite.chain);
}

BenchResult run_bench(const SuiteConfig& suite, const Dataset& data, unsigned threads) {
    BenchResult out;
    out.suite = suite;
    out.samples = data.size();
    const auto& cps = suite.checkpoints;
    out.rows.resize(suite.rows.size());

    const int n = static_cast<int>(suite.rows.size());
    omp_set_max_active_levels(1);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1u, threads))
    for (int i = 0; i < n; ++i) {
        BenchRowResult& res = out.rows[i];
        res.row = suite.rows[i];
        res.row.optimizer.max_iters = cps.back();
        const auto start = std::chrono::steady_clock::now();
        try {
            const AnyModel init = build_model(res.row.model, res.row.optimizer.seed);
            res.param_count = param_count(init);
            const TrainResult tr = train(init, data, res.row.optimizer, cps);
            res.iterations = tr.iterations;
            res.message = tr.message;
            for (auto cp : cps) {
                const auto* rec = tr.history.at_or_before(cp);
                const bool reached = tr.status == TrainStatus::ok || cp <= tr.iterations;
                if (rec && reached)
                    res.cells.push_back({BenchCell::Kind::value, -rec->nmse_db});
                else
                    res.cells.push_back({BenchCell::Kind::failed, 0.0});
            }
        } catch (const UnsupportedCombination& e) {
            res.cells.assign(cps.size(), {BenchCell::Kind::not_applicable, 0.0});
            res.message = e.what();
        } catch (const std::exception& e) {
            res.cells.assign(cps.size(), {BenchCell::Kind::failed, 0.0});
            res.message = e.what();
        }
        res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return out;
}

json BenchResult::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        json cells = json::array();
        for (const auto& c : r.cells) {
            switch (c.kind) {
            case BenchCell::Kind::value: cells.push_back(number_json(c.suppression_db)); break;
            case BenchCell::Kind::not_applicable: cells.push_back("N/A"); break;
            case BenchCell::Kind::failed: cells.push_back("FAIL"); break;
            }
        }
        rows_json.push_back({{"model", r.row.model_label},
                             {"optimizer", r.row.optimizer_label},
                             {"param_count", r.param_count},
                             {"iterations", r.iterations},
                             {"message", r.message},
                             {"suppression_db", cells}});
    }
    const json cfg = suite.to_json();
    return {{"config_hash", config_hash(cfg)},
            {"seed", suite.seed},
            {"samples", samples},
            {"checkpoints", suite.checkpoints},
            {"suite", cfg},
            {"rows", rows_json}};
}

json BenchResult::timing_json() const {
    json rows_json = json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"model", r.row.model_label}, {"optimizer", r.row.optimizer_label}, {"wall_time_s", r.wall_time_s}});
    return {{"config_hash", config_hash(suite.to_json())}, {"rows", rows_json}};
}

std::string BenchResult::table() const {
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-12s %-10s", "model", "algorithm");
    out += buf;
    for (auto cp : suite.checkpoints) {
        std::snprintf(buf, sizeof buf, " %9zu", cp);
        out += buf;
    }
    out += "\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-12s %-10s", r.row.model_label.c_str(), r.row.optimizer_label.c_str());
        out += buf;
        for (const auto& c : r.cells) {
            if (c.kind == BenchCell::Kind::value)
                std::snprintf(buf, sizeof buf, " %9.2f", c.suppression_db);
            else
                std::snprintf(buf, sizeof buf, " %9s", c.kind == BenchCell::Kind::not_applicable ? "N/A" : "FAIL");
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace imd2
