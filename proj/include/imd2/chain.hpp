#pragma once

#include <cstdint>
#include <vector>

#include "imd2/signal.hpp"

namespace imd2 {

/// QPSK OFDM baseband. Subcarrier spacing is sample_rate_hz / n_subcarriers;
/// the subcarriers inside +-bandwidth_hz/2 (except DC) carry data.
struct OfdmConfig {
    std::size_t n_subcarriers = 512;
    std::size_t n_symbols = 20;
    std::size_t cp_len = 36;
    double bandwidth_hz = 5e6;
    double sample_rate_hz = 7.68e6;
    std::uint64_t seed = 1;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    std::size_t occupied_subcarriers() const;
    std::size_t length() const { return n_symbols * (n_subcarriers + cp_len); }
};

/// Transmitter leakage into a direct-conversion receiver. Powers in dBm,
/// signal samples in sqrt(mW).
struct ChainConfig {
    double tx_power_dbm = 8.0; ///< average PA output power for linear gain
    double pa_gain_db = 26.0;
    double pa_p1db_dbm = 24.0; ///< +inf gives a linear PA
    double duplexer_attenuation_db = 30.0;
    double lna_gain_db = 26.0;
    double imd2_coeff = 1.0;
    std::vector<double> memory_fir{0.8, 0.15, 0.05};
    double noise_floor_db = -24.0; ///< relative to IMD2 AC power; -inf disables noise
    std::uint64_t seed = 1;

    void validate() const;
    /// memory_fir scaled to unit sum.
    std::vector<double> normalized_fir() const;
};

ComplexSequence gen_ofdm(const OfdmConfig& cfg);

/// Rapp smoothness used by pa_model.
inline constexpr double kRappSmoothness = 2.0;

/// Output saturation magnitude (sqrt(mW)) that puts the 1 dB compression
/// point at `p1db_dbm` output power.
double rapp_saturation(double p1db_dbm);

/// Rapp AM/AM: g x / (1 + (g|x|/x_sat)^(2s))^(1/(2s)), s = kRappSmoothness.
ComplexSequence pa_model(const ComplexSequence& x, double gain_db, double p1db_dbm);

/// p_tx - duplexer attenuation + LNA gain.
double power_budget(const ChainConfig& cfg, double p_tx_dbm);

/// Runs tx through PA, duplexer, LNA and the second-order mixer product, then
/// removes DC and adds noise. The returned dataset pairs the original tx with
/// the synthesized rx.
Dataset imd2_chain(const ComplexSequence& tx, const ChainConfig& cfg);

} // namespace imd2
