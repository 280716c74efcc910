#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "cli_util.hpp"

using nlohmann::json;
using cli::fs::path;

namespace {

json read_json(const path& p) { return json::parse(cli::slurp(p)); }

std::vector<std::pair<double, double>> read_psd(const path& p) {
    std::istringstream in(cli::slurp(p));
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    return rows;
}

void write(const path& p, const std::string& s) { std::ofstream(p) << s; }

const char* kSmallChain = R"(
[ofdm]
n_symbols = 3

[chain]
noise_floor_db = -24.0
)";

} // namespace

TEST_CASE("generate writes a dataset and sidecar, deterministically") {
    const path dir = cli::scratch("generate");
    REQUIRE(cli::run(dir, "generate --out " + (dir / "a").string()).code == 0);
    REQUIRE(cli::run(dir, "generate --out " + (dir / "b").string()).code == 0);
    const std::string a = cli::slurp(dir / "a" / "dataset.csv");
    CHECK(a == cli::slurp(dir / "b" / "dataset.csv"));
    CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 20 * (512 + 36));
    const json side = read_json(dir / "a" / "dataset.json");
    CHECK(side.at("samples") == 10960);
    CHECK(side.at("leakage_power_dbm") == 4.0);
    CHECK(side.at("config").at("chain").at("pa_gain_db") == 26.0);
    CHECK(side.at("config_hash").get<std::string>().size() == 16);

    REQUIRE(cli::run(dir, "generate --format binary --seed 3 --out " + (dir / "c").string()).code == 0);
    const std::string bin = cli::slurp(dir / "c" / "dataset.bin");
    CHECK(bin.substr(0, 4) == "IMD2");
    CHECK(bin.size() == 8 + 24 * 10960);
}

TEST_CASE("generate rejects bad configs with exit code 2") {
    const path dir = cli::scratch("generate_bad");
    write(dir / "bad.toml", "[ofdm]\ncp_len = 600\n");
    const auto r = cli::run(dir, "generate --config " + (dir / "bad.toml").string() + " --out " + dir.string());
    CHECK(r.code == 2);
    CHECK(r.err.find("cp_len") != std::string::npos);

    write(dir / "typo.toml", "[chain]\nlna_gian_db = 3\n");
    CHECK(cli::run(dir, "generate --config " + (dir / "typo.toml").string()).code == 2);
    CHECK(cli::run(dir, "generate --config " + (dir / "missing.toml").string()).code == 2);
    CHECK(cli::run(dir, "frobnicate").code == 2);

    write(dir / "extra.toml", "[chain]\nseed = 2\n[model]\ntype = \"nn\"\n[optimizer]\nmax_iters = 5\n");
    CHECK(cli::run(dir, "generate --config " + (dir / "extra.toml").string() + " --out " + dir.string()).code == 0);
    write(dir / "stray.toml", "[chian]\nseed = 2\n");
    CHECK(cli::run(dir, "generate --config " + (dir / "stray.toml").string()).code == 2);
}

TEST_CASE("train, eval and the N/A combination") {
    const path dir = cli::scratch("train");
    write(dir / "chain.toml", kSmallChain);
    REQUIRE(cli::run(dir, "generate --config " + (dir / "chain.toml").string() + " --out " + dir.string()).code == 0);
    const std::string data = (dir / "dataset.csv").string();

    const auto na = cli::run(dir, "train nn --optimizer ls --dataset " + data + " --out " + (dir / "na").string());
    CHECK(na.code == 4);

    REQUIRE(cli::run(dir, "train chebyshev --optimizer ls --dataset " + data + " --out " + (dir / "ls").string()).code == 0);
    const json rep = read_json(dir / "ls" / "report.json");
    REQUIRE(rep.at("checkpoints").size() == 5);
    for (const auto& c : rep.at("checkpoints")) CHECK(c.at("suppression_db") == rep.at("checkpoints")[0].at("suppression_db"));
    CHECK(rep.at("param_count") == 24);
    const double train_nmse = rep.at("final").at("nmse_db").get<double>();
    CHECK(std::abs(train_nmse + 24.0) <= 0.5);

    // Evaluating on the training set reproduces the training NMSE.
    const auto ev = cli::run(dir, "eval --model " + (dir / "ls" / "model.json").string() + " --dataset " + data +
                                      " --out " + (dir / "ev").string());
    REQUIRE(ev.code == 0);
    const json nm = read_json(dir / "ev" / "nmse.json");
    CHECK(std::abs(nm.at("nmse_db").get<double>() - train_nmse) <= 1e-9);
    CHECK(nm.at("denominator_convention") == "rx_power");

    // Residual below Rx across the IMD2 band (DC excluded; the Rx mean is removed).
    const auto rx = read_psd(dir / "ev" / "psd_rx.csv");
    const auto res = read_psd(dir / "ev" / "psd_residual.csv");
    REQUIRE(rx.size() == res.size());
    for (std::size_t i = 1; i < rx.size(); ++i)
        if (rx[i].first <= 5e6) CHECK(res[i].second <= rx[i].second + 1.0);

    // A zero-parameter model leaves the residual equal to Rx.
    json zero = read_json(dir / "ls" / "model.json");
    for (auto& row : zero.at("theta"))
        for (auto& v : row) v = 0.0;
    write(dir / "zero.json", zero.dump());
    REQUIRE(cli::run(dir, "eval --model " + (dir / "zero.json").string() + " --dataset " + data + " --out " +
                              (dir / "zero").string())
                .code == 0);
    CHECK(read_json(dir / "zero" / "nmse.json").at("nmse_db").get<double>() == doctest::Approx(0.0).epsilon(1e-12));

    // Scale mismatch is a warning, not an error.
    write(dir / "big.toml", std::string(kSmallChain) + "seed = 2\n");
    json small = read_json(dir / "ls" / "model.json");
    small["input_scale"] = small.at("input_scale").get<double>() * 0.5;
    write(dir / "small.json", small.dump());
    const auto warn = cli::run(dir, "eval --model " + (dir / "small.json").string() + " --dataset " + data + " --out " +
                                        (dir / "warn").string());
    CHECK(warn.err.find("warning") != std::string::npos);
}

TEST_CASE("adam smoke run on a tiny dataset") {
    const path dir = cli::scratch("adam");
    write(dir / "tiny.toml", "[ofdm]\nn_symbols = 1\nn_subcarriers = 64\ncp_len = 8\nbandwidth_hz = 5e6\n");
    REQUIRE(cli::run(dir, "generate --format binary --config " + (dir / "tiny.toml").string() + " --out " + dir.string()).code == 0);
    const auto r = cli::run(dir, "train chebyshev --optimizer adam --max-iters 100 --checkpoints 50,100 --dataset " +
                                     (dir / "dataset.bin").string() + " --out " + dir.string());
    REQUIRE(r.code == 0);
    const json rep = read_json(dir / "report.json");
    CHECK(rep.at("iterations") == 100);
    CHECK(rep.at("checkpoints").size() == 2);
    std::istringstream curve(cli::slurp(dir / "learning_curve.csv"));
    std::string line;
    std::getline(curve, line);
    CHECK(line == "iter,loss,nmse_db");
    std::vector<double> loss;
    while (std::getline(curve, line)) {
        const auto a = line.find(','), b = line.find(',', a + 1);
        loss.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    }
    REQUIRE(loss.size() == 100);
    std::size_t down = 0;
    for (std::size_t i = 1; i < loss.size(); ++i) down += loss[i] <= loss[i - 1];
    CHECK(down > loss.size() / 2);
    CHECK(cli::slurp(dir / "timing.json").find("wall_time_s") != std::string::npos);
}

TEST_CASE("bench is deterministic and table shaped") {
    const path dir = cli::scratch("bench");
    write(dir / "suite.json", R"({"checkpoints": [5, 10], "ofdm": {"n_symbols": 2}})");
    const std::string args = "bench --seed 4 --config " + (dir / "suite.json").string() + " --out ";
    REQUIRE(cli::run(dir, args + (dir / "a").string()).code == 0);
    REQUIRE(cli::run(dir, args + (dir / "b").string(), "IMD2_THREADS=1").code == 0);
    const std::string a = cli::slurp(dir / "a" / "bench.json");
    CHECK(a == cli::slurp(dir / "b" / "bench.json"));
    const json j = json::parse(a);
    REQUIRE(j.at("rows").size() == 6);
    CHECK(j.at("rows")[3].at("suppression_db")[0] == "N/A");
    CHECK(j.at("seed") == 4);
    CHECK(cli::slurp(dir / "a" / "bench.txt").find("polynomial") != std::string::npos);
    CHECK(cli::run(dir, args + (dir / "c").string(), "IMD2_THREADS=0").code == 2);
}
