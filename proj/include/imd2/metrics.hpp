#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "imd2/signal.hpp"

namespace imd2 {

/// Mean of squared differences.
double mse_loss(std::span<const double> y, std::span<const double> reference);

/// Residual energy below this is reported as -inf dB.
inline constexpr double kZeroResidual = 1e-300;

/// NMSE in dB against the reference (Rx) power, and suppression = -NMSE.
struct NmseReport {
    double nmse_db = 0.0; ///< may be -inf
    double suppression_db = 0.0;
    std::size_t num_samples = 0;

    /// "-inf"/"inf" for infinities, otherwise the number printed with %.6f.
    std::string nmse_text() const;
};

/// 10 log10( sum (y - ref)^2 / sum ref^2 ). Throws DegenerateInput if ref is all zero.
NmseReport nmse(std::span<const double> y, std::span<const double> reference);

/// The printed alternative with the Tx power in the denominator:
/// 10 log10( sum (y - ref)^2 / sum |x|^2 ). Logged for comparison only.
double nmse_tx_denominator_db(std::span<const double> y, std::span<const double> reference,
                              std::span<const cdouble> tx);

/// PSD values are floored here before the dB conversion.
inline constexpr double kPsdFloorDb = -300.0;

struct PsdEstimate {
    std::vector<double> freqs_hz; ///< strictly increasing
    std::vector<double> psd;      ///< linear, power per Hz
    std::vector<double> psd_db_per_hz;
    double resolution_bw_hz = 0.0; ///< equivalent noise bandwidth of the window

    /// sum(psd) * bin spacing: the total power the estimate accounts for.
    double integrated_power() const;
    /// Integrated power over [lo_hz, hi_hz].
    double band_power(double lo_hz, double hi_hz) const;
};

enum class Window { hann };

struct WelchOptions {
    std::size_t segment_len = 256; ///< power of two
    std::size_t overlap = 128;     ///< samples shared by consecutive segments
    Window window = Window::hann;
};

/// One-sided Welch estimate (0 .. fs/2) for real input.
PsdEstimate psd_welch(const RealSequence& x, const WelchOptions& opts = {});
/// Two-sided, centered (-fs/2 .. fs/2) Welch estimate for complex input.
PsdEstimate psd_welch(const ComplexSequence& x, const WelchOptions& opts = {});

/// Writes `freq_hz,psd_db` rows.
void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& psd);

} // namespace imd2
