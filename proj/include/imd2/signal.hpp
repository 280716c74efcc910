#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace imd2 {

using cdouble = std::complex<double>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Baseband Tx samples x_n. Non-empty, finite, positive sample rate.
class ComplexSequence {
public:
    ComplexSequence(std::vector<cdouble> samples, double sample_rate_hz = 1.0);

    std::span<const cdouble> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    const cdouble& operator[](std::size_t i) const noexcept { return samples_[i]; }
    double sample_rate_hz() const noexcept { return sample_rate_hz_; }

    /// Largest |x_n|.
    double peak_magnitude() const noexcept;
    double mean_power() const noexcept;

private:
    std::vector<cdouble> samples_;
    double sample_rate_hz_;
};

/// Real-valued samples: received signal or a model output.
class RealSequence {
public:
    RealSequence(std::vector<double> samples, double sample_rate_hz = 1.0);

    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double operator[](std::size_t i) const noexcept { return samples_[i]; }
    double sample_rate_hz() const noexcept { return sample_rate_hz_; }

private:
    std::vector<double> samples_;
    double sample_rate_hz_;
};

/// Strictly increasing, non-negative sample delays d_0 < d_1 < ... < d_{M-1}.
class DelaySet {
public:
    DelaySet(std::vector<std::size_t> delays);

    /// (0, 1, ..., count-1).
    static DelaySet contiguous(std::size_t count);

    std::span<const std::size_t> values() const noexcept { return delays_; }
    std::size_t size() const noexcept { return delays_.size(); }
    std::size_t operator[](std::size_t i) const noexcept { return delays_[i]; }
    std::size_t max() const noexcept { return delays_.back(); }

    bool operator==(const DelaySet&) const = default;

private:
    std::vector<std::size_t> delays_;
};

/// Training pair (x, y_bar). `valid_begin()` is the first index a model with
/// the widest delay set applied so far can produce an output for.
class Dataset {
public:
    Dataset(ComplexSequence tx, RealSequence rx);

    const ComplexSequence& tx() const noexcept { return tx_; }
    const RealSequence& rx() const noexcept { return rx_; }
    std::size_t size() const noexcept { return tx_.size(); }
    double sample_rate_hz() const noexcept { return tx_.sample_rate_hz(); }

    std::pair<std::size_t, std::size_t> valid_range() const noexcept { return {valid_begin_, size()}; }
    std::size_t valid_begin() const noexcept { return valid_begin_; }

    /// Returns a copy whose valid range starts no earlier than `delays.max()`.
    Dataset embedded_for(const DelaySet& delays) const;

    /// Rx samples inside the valid range.
    std::span<const double> target() const noexcept { return rx_.samples().subspan(valid_begin_); }

private:
    ComplexSequence tx_;
    RealSequence rx_;
    std::size_t valid_begin_ = 0;
};

/// Row n-max(d) holds (|x_{n-d_0}|, ..., |x_{n-d_{M-1}}|) for n = max(d) .. len-1.
/// Leading samples without full history are dropped, not zero-padded.
RowMatrix delay_embed(const ComplexSequence& tx, const DelaySet& delays);

/// Scales tx so its peak magnitude is exactly 1. Returns (scaled, scale).
std::pair<ComplexSequence, double> normalize_magnitude(const ComplexSequence& tx);

/// tx / scale, for applying a stored training scale to new data.
ComplexSequence apply_scale(const ComplexSequence& tx, double scale);

enum class DatasetFormat { csv, binary };

/// Picks the format from the file extension: `.bin` is binary, anything else CSV.
DatasetFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, double sample_rate_hz = 1.0);
void save_dataset(const std::filesystem::path& path, const Dataset& data, DatasetFormat format);

} // namespace imd2
