// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli_util.hpp"
#include "imd2/chain.hpp"
#include "imd2/chebyshev.hpp"
#include "imd2/metrics.hpp"
#include "imd2/nn.hpp"
#include "imd2/optim.hpp"
#include "imd2/train.hpp"
#include "support.hpp"

using namespace imd2;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double final_nmse(const AnyModel& m, const Dataset& d) {
    const Prediction p = predict(m, d.tx());
    return nmse(p.y, d.rx().samples().subspan(p.begin)).nmse_db;
}

Dataset chain_dataset(std::uint64_t seed, double noise_db) {
    OfdmConfig o;
    o.seed = seed;
    ChainConfig c;
    c.seed = seed;
    c.noise_floor_db = noise_db;
    return imd2_chain(gen_ofdm(o), c);
}

OptimConfig optim(Method m, std::size_t iters, std::uint64_t seed = 1) {
    OptimConfig o;
    o.method = m;
    o.max_iters = iters;
    o.seed = seed;
    return o;
}

double suppression_at(const TrainResult& r, std::size_t iter) {
    const IterRecord* rec = r.history.at_or_before(iter);
    return rec ? -rec->nmse_db : -INFINITY;
}

// 1
Outcome representability() {
    OfdmConfig o;
    ChainConfig c;
    c.memory_fir = {1.0};
    c.noise_floor_db = -INFINITY;
    c.pa_p1db_dbm = INFINITY;
    const Dataset d = imd2_chain(gen_ofdm(o), c);
    ModelSpec spec;
    spec.delays = {0};
    spec.order = 3;
    const TrainResult r = train(build_model(spec, 1), d, optim(Method::ls, 1));
    const double v = final_nmse(r.model, d);
    return {v <= -100.0, fmt("Chebyshev K=1 P=3 + LS on noiseless memoryless data: NMSE %.1f dB (need <= -100)", v)};
}

// 2
Outcome noise_floor() {
    double worst = 0.0, lo = INFINITY, hi = -INFINITY;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Dataset d = chain_dataset(seed, -24.0);
        const TrainResult r = train(build_model(ModelSpec::default_chebyshev(), seed), d, optim(Method::ls, 1, seed));
        const double v = final_nmse(r.model, d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        worst = std::max(worst, std::abs(v + 24.0));
    }
    return {worst <= 0.5, fmt("LS NMSE over 10 seeds in [%.3f, %.3f] dB (need -24 +/- 0.5)", lo, hi)};
}

// 3
Outcome ls_constancy() {
    const auto dir = cli::scratch("acceptance_ls");
    const auto gen = cli::run(dir, "generate --out " + dir.string());
    const auto tr = cli::run(dir, "train chebyshev --optimizer ls --dataset " + (dir / "dataset.csv").string() +
                                      " --out " + dir.string());
    if (gen.code != 0 || tr.code != 0) return {false, "CLI run failed: " + gen.err + tr.err};
    const json rep = json::parse(cli::slurp(dir / "report.json"));
    const auto& cps = rep.at("checkpoints");
    bool same = cps.size() == 5;
    std::string cells;
    for (const auto& c : cps) {
        same = same && c.at("suppression_db") == cps[0].at("suppression_db");
        cells += fmt(" %zu:%.4f", c.at("iter").get<std::size_t>(), c.at("suppression_db").get<double>());
    }
    return {same, "LS report suppression per checkpoint:" + cells};
}

// 4
Outcome lbfgs_vs_ls() {
    const Dataset d = chain_dataset(1, -24.0);
    const double ls = -final_nmse(train(build_model(ModelSpec::default_chebyshev(), 1), d, optim(Method::ls, 1)).model, d);
    const std::vector<std::size_t> at{2000};
    const TrainResult cheb = train(build_model(ModelSpec::default_chebyshev(), 1), d, optim(Method::lbfgs, 2000), at);
    const TrainResult nn = train(build_model(ModelSpec::default_nn(), 1), d, optim(Method::lbfgs, 2000), at);
    const double c = suppression_at(cheb, 2000), n = suppression_at(nn, 2000);
    const bool pass = ls - c <= 0.3 && ls - n <= 0.3;
    return {pass, fmt("LS %.3f dB; at iter 2000 Chebyshev+L-BFGS %.3f (gap %.3f), NN+L-BFGS %.3f (gap %.3f); need gap <= 0.3",
                      ls, c, ls - c, n, ls - n)};
}

// 5
Outcome ordering() {
    int cheb_ok = 0, nn_ok = 0;
    const std::vector<std::size_t> at{1000};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Dataset d = chain_dataset(seed, -24.0);
        for (const ModelSpec& spec : {ModelSpec::default_chebyshev(), ModelSpec::default_nn()}) {
            const AnyModel init = build_model(spec, seed);
            const double adam = suppression_at(train(init, d, optim(Method::adam, 1000, seed), at), 1000);
            const double lbfgs = suppression_at(train(init, d, optim(Method::lbfgs, 1000, seed), at), 1000);
            (spec.kind == ModelKind::nn ? nn_ok : cheb_ok) += adam <= lbfgs;
        }
    }
    return {cheb_ok >= 8 && nn_ok >= 8,
            fmt("Adam <= L-BFGS at iter 1000: Chebyshev %d/10, NN %d/10 seeds (need >= 8 each)", cheb_ok, nn_ok)};
}

// 6
Outcome nn_ls_rejected() {
    const auto dir = cli::scratch("acceptance_na");
    cli::run(dir, "generate --out " + dir.string());
    const auto r = cli::run(dir, "train nn --optimizer ls --dataset " + (dir / "dataset.csv").string() + " --out " +
                                     dir.string());
    return {r.code == 4, fmt("`train nn --optimizer ls` exit code %d (need 4)", r.code)};
}

// 7
Outcome gradients() {
    Rng rng(2024);
    double worst_nn = 0.0, worst_cheb = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        NNModel m = init_weights(DelaySet::contiguous(3), {3, 2, 1}, Activation::sigmoid, 5000 + trial);
        const std::vector<double> x{rng.uniform(), rng.uniform(), rng.uniform()};
        const Vector w = m.flatten();
        auto f = [&](const Vector& p) {
            m.unflatten(p);
            return m.forward(x);
        };
        const Vector fd = oracle::fd_gradient(f, w, 1e-5);
        m.unflatten(w);
        worst_nn = std::max(worst_nn, oracle::rel_err(m.backward(x, 1.0), fd));

        ChebyshevModel c(DelaySet::contiguous(3), 8);
        const Vector th = oracle::random_vector(rng, 24);
        auto g = [&](const Vector& p) {
            c.unflatten(p);
            return c.forward(x);
        };
        const Vector fdc = oracle::fd_gradient(g, th, 1e-5);
        c.unflatten(th);
        worst_cheb = std::max(worst_cheb, oracle::rel_err(c.gradient(x), fdc));
    }
    return {worst_nn <= 1e-6 && worst_cheb <= 1e-6,
            fmt("max rel. error vs central differences over 100 cases: NN %.2e, Chebyshev %.2e (need <= 1e-6)",
                worst_nn, worst_cheb)};
}

// 8
Outcome lbfgs_quadratic() {
    Rng rng(8);
    int finite_ok = 0, trials = 0;
    double worst_dir = 0.0;
    for (Eigen::Index n = 1; n <= 20; ++n) {
        for (int rep = 0; rep < 3; ++rep, ++trials) {
            const RowMatrix a = oracle::random_matrix(rng, n, n);
            const RowMatrix q = a * a.transpose() + 0.1 * RowMatrix::Identity(n, n);
            const Vector b = oracle::random_vector(rng, n);
            const LossProblem p{static_cast<std::size_t>(n), [&](const Vector& x) {
                                    const Vector qx = q * x;
                                    return LossGrad{0.5 * x.dot(qx) - b.dot(x), qx - b};
                                }};
            LbfgsState s(100);
            Vector th = Vector::Zero(n);
            LossGrad at = p(th);
            for (Eigen::Index k = 0; k < n + 2 && at.grad.norm() > 1e-10; ++k) {
                if (n <= 5) {
                    const Vector two = s.direction(at.grad);
                    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
                    if (!s.pairs().empty())
                        h *= s.pairs().back().delta.dot(s.pairs().back().gamma) / s.pairs().back().gamma.squaredNorm();
                    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
                    for (const auto& pr : s.pairs()) {
                        const double rho = 1.0 / pr.delta.dot(pr.gamma);
                        h = (eye - rho * pr.delta * pr.gamma.transpose()) * h *
                                (eye - rho * pr.gamma * pr.delta.transpose()) +
                            rho * pr.delta * pr.delta.transpose();
                    }
                    const Vector dense = -h * at.grad;
                    worst_dir = std::max(worst_dir, (two - dense).norm() / std::max(1.0, dense.norm()));
                }
                if (lbfgs_step(s, p, th, at).stuck) break;
            }
            finite_ok += at.grad.norm() <= 1e-10;
        }
    }
    return {finite_ok == trials && worst_dir <= 1e-9,
            fmt("%d/%d SPD quadratics (dim 1..20) reach |g| <= 1e-10 within dim+2 iterations; two-loop vs dense "
                "BFGS direction max diff %.2e (need <= 1e-9)",
                finite_ok, trials, worst_dir)};
}

// 9
Outcome adam_oracle() {
    AdamState s = AdamState::fresh(1);
    Vector th = Vector::Constant(1, 1.0);
    double m = 0, v = 0, r = 1.0, worst = 0.0;
    for (int k = 1; k <= 10; ++k) {
        adam_step(s, th, 2.0 * th);
        const double g = 2.0 * r;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        r -= 1e-3 * (m / (1 - std::pow(0.9, k))) / (std::sqrt(v / (1 - std::pow(0.999, k))) + 1e-8);
        worst = std::max(worst, std::abs(th(0) - r));
    }
    return {worst <= 1e-12, fmt("10 Adam steps on theta^2: max deviation from scalar reference %.2e (need <= 1e-12)", worst)};
}

// 10
Outcome param_counts() {
    const auto c = param_count(build_model(ModelSpec::default_chebyshev(), 1));
    const auto n = param_count(build_model(ModelSpec::default_nn(), 1));
    return {c == 24 && n == 17, fmt("Chebyshev K=3 P=8: %zu parameters, NN 3-2-1: %zu (need 24 and 17)", c, n)};
}

// 11
Outcome psd_sanity() {
    const double fs = 7.68e6;
    std::vector<double> s(20000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::cos(2 * M_PI * 1.1e6 * double(i) / fs + 0.4);
    const double integ = psd_welch(RealSequence(s, fs)).integrated_power();
    const double err = std::abs(integ / 0.5 - 1.0);

    const Dataset d = chain_dataset(1, -24.0);
    const TrainResult r = train(build_model(ModelSpec::default_chebyshev(), 1), d, optim(Method::ls, 1));
    const Prediction p = predict(r.model, d.tx());
    const auto rx = d.rx().samples().subspan(p.begin);
    std::vector<double> res(rx.size());
    for (std::size_t i = 0; i < rx.size(); ++i) res[i] = rx[i] - p.y[i];
    const PsdEstimate prx = psd_welch(RealSequence({rx.begin(), rx.end()}, fs));
    const PsdEstimate pres = psd_welch(RealSequence(res, fs));
    // Squared envelope of a B-wide signal spans (0, B]; the DC bin is excluded (mean removed).
    const double band = std::min(OfdmConfig{}.bandwidth_hz, fs / 2);
    double worst = -INFINITY;
    for (std::size_t i = 1; i < prx.freqs_hz.size(); ++i)
        if (prx.freqs_hz[i] <= band) worst = std::max(worst, pres.psd_db_per_hz[i] - prx.psd_db_per_hz[i]);
    return {err <= 0.01 && worst <= 1.0,
            fmt("unit sinusoid integrated PSD error %.3f%% (need <= 1%%); residual minus Rx PSD across the IMD2 band "
                "at most %.2f dB (need <= 1 dB)",
                100 * err, worst)};
}

// 12
Outcome determinism() {
    const auto dir = cli::scratch("acceptance_bench");
    std::ofstream(dir / "suite.json") << R"({"checkpoints": [100, 200]})";
    const std::string args = "bench --seed 7 --config " + (dir / "suite.json").string() + " --out ";
    const auto a = cli::run(dir, args + (dir / "a").string());
    const auto b = cli::run(dir, args + (dir / "b").string());
    const auto c = cli::run(dir, args + (dir / "c").string(), "IMD2_THREADS=1");
    if (a.code || b.code || c.code) return {false, "bench run failed: " + a.err + b.err + c.err};
    const std::string ja = cli::slurp(dir / "a" / "bench.json");
    const bool same = ja == cli::slurp(dir / "b" / "bench.json") && ja == cli::slurp(dir / "c" / "bench.json");
    return {same && !ja.empty(),
            fmt("three bench runs (seed 7, incl. IMD2_THREADS=1): bench.json %s (%zu bytes)",
                same ? "byte-identical" : "DIFFERS", ja.size())};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s; // 0 = no runtime limit
    std::function<Outcome()> run;
};

} // namespace

int main() {
    const std::vector<Criterion> all{
        {1, "representability floor", 5, representability},
        {2, "noise-floor attainment", 30, noise_floor},
        {3, "LS one-shot constancy", 0, ls_constancy},
        {4, "L-BFGS ~ LS within 2000 iterations", 300, lbfgs_vs_ls},
        {5, "optimizer ordering at 1000 iterations", 0, ordering},
        {6, "NN+LS rejection", 0, nn_ls_rejected},
        {7, "gradient exactness", 10, gradients},
        {8, "L-BFGS quadratic exactness", 0, lbfgs_quadratic},
        {9, "Adam step-by-step oracle", 0, adam_oracle},
        {10, "parameter counts", 0, param_counts},
        {11, "PSD sanity", 0, psd_sanity},
        {12, "determinism", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string timing = fmt("%.2f s", secs);
        if (c.budget_s > 0) {
            timing += fmt(" (limit %.0f s)", c.budget_s);
            if (secs > c.budget_s) {
                o.pass = false;
                o.detail += "; over time budget";
            }
        }
        std::printf("[%s] %2d %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
