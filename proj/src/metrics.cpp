#include "imd2/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "fft.hpp"
#include "imd2/error.hpp"

namespace imd2 {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw InvalidArgument("length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
    if (a == 0) throw InvalidArgument("empty sequence");
}

double residual_energy(std::span<const double> y, std::span<const double> ref) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - ref[i];
        acc += e * e;
    }
    return acc;
}

std::vector<double> window_taps(Window, std::size_t n) {
    // Periodic Hann, the usual choice for spectral estimation.
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

void check_welch(std::size_t len, const WelchOptions& o) {
    const auto l = o.segment_len;
    if (l < 2 || (l & (l - 1)) != 0) throw InvalidArgument("segment length must be a power of two >= 2");
    if (l > len) throw InvalidArgument("segment length " + std::to_string(l) + " exceeds signal length " +
                                       std::to_string(len));
    if (o.overlap >= l) throw InvalidArgument("overlap must be smaller than the segment length");
}

// Averaged |X_k|^2 over Welch segments, scaled to power per Hz (two-sided).
template <typename Sample>
std::vector<double> welch_periodogram(std::span<const Sample> x, double fs, const WelchOptions& o,
                                      double& enbw_hz) {
    check_welch(x.size(), o);
    const std::size_t l = o.segment_len;
    const std::size_t hop = l - o.overlap;
    const auto w = window_taps(o.window, l);
    double sum_w = 0.0, sum_w2 = 0.0;
    for (double v : w) {
        sum_w += v;
        sum_w2 += v * v;
    }
    enbw_hz = fs * sum_w2 / (sum_w * sum_w);

    std::vector<double> acc(l, 0.0);
    std::vector<std::complex<double>> seg(l);
    std::size_t count = 0;
    for (std::size_t start = 0; start + l <= x.size(); start += hop) {
        for (std::size_t i = 0; i < l; ++i) seg[i] = std::complex<double>(x[start + i]) * w[i];
        detail::fft_inplace(seg, detail::FftDirection::forward);
        for (std::size_t k = 0; k < l; ++k) acc[k] += std::norm(seg[k]);
        ++count;
    }
    const double scale = 1.0 / (static_cast<double>(count) * fs * sum_w2);
    for (auto& v : acc) v *= scale;
    return acc;
}

PsdEstimate finish(std::vector<double> freqs, std::vector<double> psd, double enbw) {
    PsdEstimate out;
    out.freqs_hz = std::move(freqs);
    out.psd = std::move(psd);
    out.resolution_bw_hz = enbw;
    out.psd_db_per_hz.reserve(out.psd.size());
    for (double p : out.psd) out.psd_db_per_hz.push_back(p > 0.0 ? std::max(10.0 * std::log10(p), kPsdFloorDb) : kPsdFloorDb);
    return out;
}

} // namespace

double mse_loss(std::span<const double> y, std::span<const double> reference) {
    check_lengths(y.size(), reference.size());
    return residual_energy(y, reference) / static_cast<double>(y.size());
}

std::string NmseReport::nmse_text() const {
    if (std::isinf(nmse_db)) return nmse_db < 0 ? "-inf" : "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", nmse_db);
    return buf;
}

NmseReport nmse(std::span<const double> y, std::span<const double> reference) {
    check_lengths(y.size(), reference.size());
    double ref_energy = 0.0;
    for (double r : reference) ref_energy += r * r;
    if (!(ref_energy > 0.0)) throw DegenerateInput("reference signal is all zero");
    const double res = residual_energy(y, reference);
    NmseReport out;
    out.num_samples = y.size();
    out.nmse_db = res < kZeroResidual ? -INFINITY : 10.0 * std::log10(res / ref_energy);
    out.suppression_db = -out.nmse_db;
    return out;
}

double nmse_tx_denominator_db(std::span<const double> y, std::span<const double> reference,
                              std::span<const cdouble> tx) {
    check_lengths(y.size(), reference.size());
    check_lengths(y.size(), tx.size());
    double tx_energy = 0.0;
    for (const auto& s : tx) tx_energy += std::norm(s);
    if (!(tx_energy > 0.0)) throw DegenerateInput("tx signal is all zero");
    const double res = residual_energy(y, reference);
    return res < kZeroResidual ? -INFINITY : 10.0 * std::log10(res / tx_energy);
}

double PsdEstimate::integrated_power() const {
    if (freqs_hz.size() < 2) return 0.0;
    const double df = freqs_hz[1] - freqs_hz[0];
    double acc = 0.0;
    for (double p : psd) acc += p;
    return acc * df;
}

double PsdEstimate::band_power(double lo_hz, double hi_hz) const {
    if (freqs_hz.size() < 2) return 0.0;
    const double df = freqs_hz[1] - freqs_hz[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < psd.size(); ++i)
        if (freqs_hz[i] >= lo_hz && freqs_hz[i] <= hi_hz) acc += psd[i];
    return acc * df;
}

PsdEstimate psd_welch(const RealSequence& x, const WelchOptions& opts) {
    const double fs = x.sample_rate_hz();
    double enbw = 0.0;
    const auto two_sided = welch_periodogram(x.samples(), fs, opts, enbw);
    const std::size_t l = opts.segment_len;
    const std::size_t bins = l / 2 + 1;
    std::vector<double> freqs(bins), psd(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        freqs[k] = fs * static_cast<double>(k) / static_cast<double>(l);
        // Fold negative frequencies onto positive ones; DC and Nyquist appear once.
        psd[k] = (k == 0 || k == l / 2) ? two_sided[k] : 2.0 * two_sided[k];
    }
    return finish(std::move(freqs), std::move(psd), enbw);
}

PsdEstimate psd_welch(const ComplexSequence& x, const WelchOptions& opts) {
    const double fs = x.sample_rate_hz();
    double enbw = 0.0;
    const auto two_sided = welch_periodogram(x.samples(), fs, opts, enbw);
    const std::size_t l = opts.segment_len;
    std::vector<double> freqs(l), psd(l);
    for (std::size_t i = 0; i < l; ++i) {
        const std::size_t k = (i + l / 2) % l; // fftshift
        freqs[i] = fs * (static_cast<double>(i) - static_cast<double>(l / 2)) / static_cast<double>(l);
        psd[i] = two_sided[k];
    }
    return finish(std::move(freqs), std::move(psd), enbw);
}

void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& psd) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "freq_hz,psd_db\n";
    char buf[80];
    for (std::size_t i = 0; i < psd.freqs_hz.size(); ++i) {
        const int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", psd.freqs_hz[i], psd.psd_db_per_hz[i]);
        out.write(buf, n);
    }
}

} // namespace imd2
