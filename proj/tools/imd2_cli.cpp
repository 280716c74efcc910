// imd2: dataset generation, canceller training, evaluation and benchmark tables.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "imd2/chain.hpp"
#include "imd2/config.hpp"
#include "imd2/error.hpp"
#include "imd2/metrics.hpp"
#include "imd2/model_io.hpp"
#include "imd2/report.hpp"
#include "imd2/train.hpp"

namespace fs = std::filesystem;
using namespace imd2;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumeric = 3, kUnsupported = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string checkpoints;
    bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Config file (.json or TOML)");
    cmd->add_option("--seed", c.seed, "Seed for every random source");
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--checkpoints", c.checkpoints, "Comma-separated checkpoint iterations");
    cmd->add_flag("--verbose", c.verbose, "Extra diagnostics on stderr");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path out_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

/// Sample rate from the generator sidecar `<stem>.json`, if one exists.
double sidecar_rate(const fs::path& dataset) {
    fs::path side = dataset;
    side.replace_extension(".json");
    if (side == dataset || !fs::exists(side)) return 1.0;
    std::ifstream in(side);
    const json j = json::parse(in, nullptr, false);
    if (j.is_object() && j.contains("sample_rate_hz") && j.at("sample_rate_hz").is_number())
        return j.at("sample_rate_hz").get<double>();
    return 1.0;
}

Dataset read_dataset(const std::string& path) {
    const fs::path p(path);
    return load_dataset(p, format_from_path(p), sidecar_rate(p));
}

// --- generate ---------------------------------------------------------------

// One file may hold the tables of every subcommand; each reads its own.
void check_tables(const json& j) {
    for (const auto& [k, v] : j.items())
        if (k != "ofdm" && k != "chain" && k != "model" && k != "optimizer" && k != "checkpoints")
            throw ConfigError(k + ": unknown table (expected ofdm, chain, model, optimizer, checkpoints)");
}

struct GenerateArgs {
    Common c;
    std::string format = "csv";
};

int cmd_generate(const GenerateArgs& a) {
    OfdmConfig ofdm;
    ChainConfig chain;
    if (!a.c.config.empty()) {
        const json j = load_config_file(a.c.config);
        check_tables(j);
        if (j.contains("ofdm")) ofdm = ofdm_config_from_json(j.at("ofdm"));
        if (j.contains("chain")) chain = chain_config_from_json(j.at("chain"));
    }
    if (a.c.seed) ofdm.seed = chain.seed = *a.c.seed;
    ofdm.validate();
    chain.validate();

    const Dataset data = imd2_chain(gen_ofdm(ofdm), chain);
    const fs::path dir = out_dir(a.c.out);
    const bool binary = a.format == "binary";
    const fs::path file = dir / (binary ? "dataset.bin" : "dataset.csv");
    save_dataset(file, data, binary ? DatasetFormat::binary : DatasetFormat::csv);

    const json cfg{{"ofdm", to_json(ofdm)}, {"chain", to_json(chain)}};
    json side{{"config", cfg},
              {"config_hash", config_hash(cfg)},
              {"file", file.filename().generic_string()},
              {"format", binary ? "f64le-binary" : "csv"},
              {"samples", data.size()},
              {"sample_rate_hz", data.sample_rate_hz()},
              {"leakage_power_dbm", power_budget(chain, chain.tx_power_dbm)},
              {"carrier_tx_hz", 814e6},
              {"carrier_rx_hz", 859e6}};
    write_json(dir / "dataset.json", side);
    std::cout << "wrote " << file.string() << " (" << data.size() << " samples)\n";
    return kOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
    Common c;
    std::string model_type;
    std::string dataset;
    std::string optimizer;
    std::optional<std::size_t> max_iters;
};

int cmd_train(const TrainArgs& a) {
    ModelSpec spec = a.model_type == "nn" ? ModelSpec::default_nn() : ModelSpec::default_chebyshev();
    OptimConfig optim;
    std::vector<std::size_t> checkpoints = kDefaultCheckpoints;
    if (!a.c.config.empty()) {
        const json j = load_config_file(a.c.config);
        check_tables(j);
        if (j.contains("model")) spec = model_spec_from_json(j.at("model"));
        if (j.contains("optimizer")) optim = optim_config_from_json(j.at("optimizer"));
        if (j.contains("checkpoints")) {
            std::string csv;
            for (const auto& v : j.at("checkpoints")) csv += (csv.empty() ? "" : ",") + v.dump();
            checkpoints = parse_checkpoints(csv);
        }
    }
    spec.kind = model_kind_from_string(a.model_type);
    if (!a.optimizer.empty()) optim.method = method_from_string(a.optimizer);
    if (a.c.seed) optim.seed = *a.c.seed;
    if (!a.c.checkpoints.empty()) checkpoints = parse_checkpoints(a.c.checkpoints);
    if (a.max_iters) optim.max_iters = *a.max_iters;
    optim.validate();
    if (spec.kind == ModelKind::nn && optim.method == Method::ls)
        throw UnsupportedCombination("ls is not applicable to the NN model (not linear in its weights)");

    const Dataset data = read_dataset(a.dataset);
    const AnyModel init = build_model(spec, optim.seed);
    const TrainResult result = train(init, data, optim, checkpoints);

    const fs::path dir = out_dir(a.c.out);
    save_model(dir / "model.json", result.model);
    const RunReport report = make_run_report(spec, optim, result, data, checkpoints);
    write_json(dir / "report.json", report.to_json());
    write_json(dir / "timing.json", report.timing_json());
    {
        std::string csv = "iter,loss,nmse_db\n";
        char buf[96];
        for (const auto& r : result.history.records) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.iter, r.loss, r.nmse_db);
            csv += buf;
        }
        write_text(dir / "learning_curve.csv", csv);
    }

    std::cout << to_string(spec.kind) << " + " << to_string(optim.method) << ": " << result.iterations
              << " iterations, suppression " << -report.final_nmse.nmse_db << " dB (" << result.message << ")\n";
    if (a.c.verbose)
        std::cerr << "NMSE vs Rx power " << report.final_nmse.nmse_text() << " dB; vs Tx power "
                  << report.final_nmse_tx_db << " dB\n";
    if (result.status != TrainStatus::ok) {
        std::cerr << "numeric failure: " << result.message << " (saved last good parameters)\n";
        return kNumeric;
    }
    return kOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
    Common c;
    std::string model;
    std::string dataset;
    std::size_t segment_len = 256;
};

int cmd_eval(const EvalArgs& a) {
    const AnyModel model = load_model(a.model);
    const Dataset data = read_dataset(a.dataset);
    const double peak = data.tx().peak_magnitude();
    const double scale = input_scale_of(model);
    if (peak > scale * (1.0 + 1e-12))
        std::cerr << "warning: dataset peak |x| " << peak << " exceeds the model input_scale " << scale << "\n";

    const Prediction pred = predict(model, data.tx());
    const auto rx = data.rx().samples().subspan(pred.begin);
    const NmseReport rep = nmse(pred.y, rx);
    const double tx_db = nmse_tx_denominator_db(pred.y, rx, data.tx().samples().subspan(pred.begin));

    std::vector<double> residual(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) residual[i] = rx[i] - pred.y[i];
    const double rate = data.sample_rate_hz();
    WelchOptions w;
    w.segment_len = a.segment_len;
    w.overlap = a.segment_len / 2;
    const RealSequence rx_seq(std::vector<double>(rx.begin(), rx.end()), rate);
    const RealSequence res_seq(std::move(residual), rate);

    const fs::path dir = out_dir(a.c.out);
    write_psd_csv(dir / "psd_rx.csv", psd_welch(rx_seq, w));
    write_psd_csv(dir / "psd_residual.csv", psd_welch(res_seq, w));
    const json report{{"nmse_db", number_json(rep.nmse_db)},
                      {"suppression_db", number_json(rep.suppression_db)},
                      {"num_samples", rep.num_samples},
                      {"denominator_convention", "rx_power"},
                      {"nmse_tx_denominator_db", number_json(tx_db)}};
    write_json(dir / "nmse.json", report);
    std::cout << "NMSE " << rep.nmse_text() << " dB over " << rep.num_samples << " samples\n";
    if (a.c.verbose) std::cerr << "NMSE with Tx-power denominator: " << tx_db << " dB\n";
    return kOk;
}

// --- bench ------------------------------------------------------------------

int cmd_bench(const Common& c) {
    SuiteConfig suite = c.config.empty() ? SuiteConfig::default_suite() : suite_from_json(load_config_file(c.config));
    if (c.seed) suite.reseed(*c.seed);
    if (!c.checkpoints.empty()) suite.checkpoints = parse_checkpoints(c.checkpoints);

    unsigned threads = static_cast<unsigned>(suite.rows.size());
    if (const char* env = std::getenv("IMD2_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v < 1) throw ConfigError("IMD2_THREADS: must be a positive integer");
        threads = std::min<unsigned>(threads, static_cast<unsigned>(v));
    }

    const Dataset data = suite_dataset(suite);
    const BenchResult result = run_bench(suite, data, threads);
    const fs::path dir = out_dir(c.out);
    write_json(dir / "bench.json", result.to_json());
    write_json(dir / "bench_timing.json", result.timing_json());
    const std::string table = result.table();
    write_text(dir / "bench.txt", table);
    std::cout << table;
    if (c.verbose)
        for (const auto& r : result.rows)
            std::cerr << r.row.model_label << "/" << r.row.optimizer_label << ": " << r.message << " ("
                      << r.wall_time_s << " s)\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IMD2 self-interference canceller toolkit"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Synthesize a Tx/Rx dataset from a chain config");
    add_common(g, gen.c);
    g->add_option("--format", gen.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Fit a canceller");
    add_common(t, tr.c);
    t->add_option("model", tr.model_type, "chebyshev | nn")->required()->check(CLI::IsMember({"chebyshev", "polynomial", "nn"}));
    t->add_option("--dataset", tr.dataset, "Dataset file (.csv or .bin)")->required();
    t->add_option("--optimizer", tr.optimizer, "ls | adam | lbfgs");
    t->add_option("--max-iters", tr.max_iters, "Iteration budget");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a saved model on a dataset");
    add_common(e, ev.c);
    e->add_option("--model", ev.model, "Model JSON")->required();
    e->add_option("--dataset", ev.dataset, "Dataset file")->required();
    e->add_option("--segment-len", ev.segment_len, "Welch segment length (power of two)");

    Common bench;
    auto* b = app.add_subcommand("bench", "Run the model x optimizer comparison table");
    add_common(b, bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (g->parsed()) return cmd_generate(gen);
        if (t->parsed()) return cmd_train(tr);
        if (e->parsed()) return cmd_eval(ev);
        if (b->parsed()) return cmd_bench(bench);
    } catch (const UnsupportedCombination& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kUnsupported;
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return kConfig;
    } catch (const ParseError& ex) {
        std::cerr << "parse error: " << ex.what() << "\n";
        return kConfig;
    } catch (const NumericFailure& ex) {
        std::cerr << "numeric failure: " << ex.what() << "\n";
        return kNumeric;
    } catch (const RankDeficient& ex) {
        std::cerr << "numeric failure: " << ex.what() << "\n";
        return kNumeric;
    } catch (const DomainError& ex) {
        std::cerr << "numeric failure: " << ex.what() << "\n";
        return kNumeric;
    } catch (const DegenerateInput& ex) {
        std::cerr << "numeric failure: " << ex.what() << "\n";
        return kNumeric;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kOther;
    }
    return kOther;
}
