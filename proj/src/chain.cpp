#include "imd2/chain.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fft.hpp"
#include "imd2/error.hpp"
#include "imd2/rng.hpp"

namespace imd2 {

namespace {

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }
double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

void require(bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ConfigError(std::string(field) + ": " + msg);
}

} // namespace

void OfdmConfig::validate() const {
    require(n_subcarriers >= 2 && (n_subcarriers & (n_subcarriers - 1)) == 0, "n_subcarriers",
            "must be a power of two >= 2");
    require(n_symbols >= 1, "n_symbols", "must be positive");
    require(cp_len < n_subcarriers, "cp_len", "must be smaller than n_subcarriers");
    require(sample_rate_hz > 0 && std::isfinite(sample_rate_hz), "sample_rate_hz", "must be positive");
    require(bandwidth_hz > 0 && bandwidth_hz <= sample_rate_hz, "bandwidth_hz",
            "must be positive and not exceed sample_rate_hz");
    require(occupied_subcarriers() >= 2, "bandwidth_hz", "too narrow to hold any subcarrier");
}

std::size_t OfdmConfig::occupied_subcarriers() const {
    const double spacing = sample_rate_hz / static_cast<double>(n_subcarriers);
    auto n = static_cast<std::size_t>(std::floor(bandwidth_hz / spacing + 1e-9));
    n -= n % 2;
    return std::min(n, n_subcarriers - 2);
}

void ChainConfig::validate() const {
    require(std::isfinite(tx_power_dbm), "tx_power_dbm", "must be finite");
    require(std::isfinite(pa_gain_db), "pa_gain_db", "must be finite");
    require(!std::isnan(pa_p1db_dbm) && pa_p1db_dbm > -INFINITY, "pa_p1db_dbm", "must be finite or +inf");
    require(std::isfinite(duplexer_attenuation_db), "duplexer_attenuation_db", "must be finite");
    require(std::isfinite(lna_gain_db), "lna_gain_db", "must be finite");
    require(std::isfinite(imd2_coeff) && imd2_coeff != 0.0, "imd2_coeff", "must be finite and nonzero");
    require(!memory_fir.empty(), "memory_fir", "must be nonempty");
    double sum = 0.0;
    for (double t : memory_fir) {
        require(std::isfinite(t), "memory_fir", "taps must be finite");
        sum += t;
    }
    require(sum != 0.0, "memory_fir", "taps must not sum to zero");
    require(!std::isnan(noise_floor_db) && noise_floor_db < INFINITY, "noise_floor_db", "must be finite or -inf");
}

std::vector<double> ChainConfig::normalized_fir() const {
    const double sum = std::accumulate(memory_fir.begin(), memory_fir.end(), 0.0);
    std::vector<double> out = memory_fir;
    for (auto& t : out) t /= sum;
    return out;
}

ComplexSequence gen_ofdm(const OfdmConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_subcarriers;
    const std::size_t half = cfg.occupied_subcarriers() / 2;
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    const double qpsk = 1.0 / std::sqrt(2.0);
    Rng rng(cfg.seed);

    std::vector<cdouble> out;
    out.reserve(cfg.length());
    std::vector<cdouble> bins(n);
    for (std::size_t s = 0; s < cfg.n_symbols; ++s) {
        std::fill(bins.begin(), bins.end(), cdouble{});
        // Bins 1..half and n-half..n-1; DC stays empty.
        for (std::size_t j = 1; j <= 2 * half; ++j) {
            const std::size_t k = j <= half ? j : n - (j - half);
            bins[k] = {rng.bit() ? qpsk : -qpsk, rng.bit() ? qpsk : -qpsk};
        }
        detail::fft_inplace(bins, detail::FftDirection::backward);
        for (auto& v : bins) v *= norm;
        out.insert(out.end(), bins.end() - static_cast<std::ptrdiff_t>(cfg.cp_len), bins.end());
        out.insert(out.end(), bins.begin(), bins.end());
    }
    return ComplexSequence(std::move(out), cfg.sample_rate_hz);
}

double rapp_saturation(double p1db_dbm) {
    if (p1db_dbm == INFINITY) return INFINITY;
    // At the 1 dB point the compression factor (1 + r^2s)^(-1/2s) equals 10^(-1/20),
    // with r = linear output magnitude / x_sat.
    const double s2 = 2.0 * kRappSmoothness;
    const double r = std::pow(std::pow(10.0, s2 / 20.0) - 1.0, 1.0 / s2);
    const double out_mag = std::sqrt(dbm_to_mw(p1db_dbm));
    return out_mag / (r * db_to_amp(-1.0));
}

ComplexSequence pa_model(const ComplexSequence& x, double gain_db, double p1db_dbm) {
    const double g = db_to_amp(gain_db);
    const double sat = rapp_saturation(p1db_dbm);
    const double s2 = 2.0 * kRappSmoothness;
    std::vector<cdouble> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const cdouble lin = g * x[i];
        if (std::isinf(sat)) {
            out[i] = lin;
            continue;
        }
        const double r = std::abs(lin) / sat;
        out[i] = lin / std::pow(1.0 + std::pow(r, s2), 1.0 / s2);
    }
    return ComplexSequence(std::move(out), x.sample_rate_hz());
}

double power_budget(const ChainConfig& cfg, double p_tx_dbm) {
    return p_tx_dbm - cfg.duplexer_attenuation_db + cfg.lna_gain_db;
}

Dataset imd2_chain(const ComplexSequence& tx, const ChainConfig& cfg) {
    cfg.validate();
    const double p_in = tx.mean_power();
    if (!(p_in > 0.0)) throw DegenerateInput("tx has zero power");

    // Drive so the linear-gain PA output sits at tx_power_dbm.
    const double drive = std::sqrt(dbm_to_mw(cfg.tx_power_dbm - cfg.pa_gain_db) / p_in);
    const ComplexSequence pa_in = apply_scale(tx, 1.0 / drive);
    const ComplexSequence pa_out = pa_model(pa_in, cfg.pa_gain_db, cfg.pa_p1db_dbm);
    const double leak_gain = db_to_amp(cfg.lna_gain_db - cfg.duplexer_attenuation_db);

    const std::size_t n = tx.size();
    std::vector<double> envelope(n);
    for (std::size_t i = 0; i < n; ++i) envelope[i] = std::norm(leak_gain * pa_out[i]);

    const auto fir = cfg.normalized_fir();
    std::vector<double> rx(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < fir.size() && j <= i; ++j) acc += fir[j] * envelope[i - j];
        rx[i] = cfg.imd2_coeff * acc;
    }

    auto remove_mean = [&] {
        const double mean = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
        for (auto& v : rx) v -= mean;
    };
    remove_mean();

    if (cfg.noise_floor_db > -INFINITY) {
        double ac_power = 0.0;
        for (double v : rx) ac_power += v * v;
        ac_power /= static_cast<double>(n);
        const double sigma = std::sqrt(ac_power * std::pow(10.0, cfg.noise_floor_db / 10.0));
        Rng rng(cfg.seed);
        for (auto& v : rx) v += sigma * rng.normal();
        // AC-coupled receiver: the noise's own sample mean goes too.
        remove_mean();
    }
    return Dataset(tx, RealSequence(std::move(rx), tx.sample_rate_hz()));
}

} // namespace imd2
