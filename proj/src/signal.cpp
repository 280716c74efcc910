#include "imd2/signal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imd2/error.hpp"

namespace imd2 {

namespace {

void check_rate(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw InvalidArgument("sample rate must be positive and finite");
}

} // namespace

ComplexSequence::ComplexSequence(std::vector<cdouble> samples, double sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (samples_.empty()) throw InvalidArgument("complex sequence is empty");
    check_rate(sample_rate_hz_);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i].real()) || !std::isfinite(samples_[i].imag()))
            throw InvalidArgument("non-finite tx sample at index " + std::to_string(i));
    }
}

double ComplexSequence::peak_magnitude() const noexcept {
    double peak = 0.0;
    for (const auto& s : samples_) peak = std::max(peak, std::abs(s));
    return peak;
}

double ComplexSequence::mean_power() const noexcept {
    double acc = 0.0;
    for (const auto& s : samples_) acc += std::norm(s);
    return acc / static_cast<double>(samples_.size());
}

RealSequence::RealSequence(std::vector<double> samples, double sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (samples_.empty()) throw InvalidArgument("real sequence is empty");
    check_rate(sample_rate_hz_);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i]))
            throw InvalidArgument("non-finite rx sample at index " + std::to_string(i));
    }
}

DelaySet::DelaySet(std::vector<std::size_t> delays) : delays_(std::move(delays)) {
    if (delays_.empty()) throw InvalidArgument("delay set is empty");
    for (std::size_t i = 1; i < delays_.size(); ++i) {
        if (delays_[i] <= delays_[i - 1])
            throw InvalidArgument("delays must be strictly increasing");
    }
}

DelaySet DelaySet::contiguous(std::size_t count) {
    std::vector<std::size_t> d(count);
    for (std::size_t i = 0; i < count; ++i) d[i] = i;
    return DelaySet(std::move(d));
}

Dataset::Dataset(ComplexSequence tx, RealSequence rx) : tx_(std::move(tx)), rx_(std::move(rx)) {
    if (tx_.size() != rx_.size())
        throw InvalidArgument("tx and rx lengths differ (" + std::to_string(tx_.size()) + " vs " +
                              std::to_string(rx_.size()) + ")");
    if (tx_.sample_rate_hz() != rx_.sample_rate_hz())
        throw InvalidArgument("tx and rx sample rates differ");
}

Dataset Dataset::embedded_for(const DelaySet& delays) const {
    if (delays.max() >= size())
        throw InvalidArgument("delay " + std::to_string(delays.max()) + " exceeds dataset length " +
                              std::to_string(size()));
    Dataset out = *this;
    out.valid_begin_ = std::max(valid_begin_, delays.max());
    return out;
}

RowMatrix delay_embed(const ComplexSequence& tx, const DelaySet& delays) {
    const std::size_t dmax = delays.max();
    if (dmax >= tx.size())
        throw InvalidArgument("delay " + std::to_string(dmax) + " exceeds sequence length " +
                              std::to_string(tx.size()));
    const std::size_t rows = tx.size() - dmax;
    const std::size_t cols = delays.size();
    RowMatrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t n = r + dmax;
        for (std::size_t k = 0; k < cols; ++k) out(r, k) = std::abs(tx[n - delays[k]]);
    }
    return out;
}

std::pair<ComplexSequence, double> normalize_magnitude(const ComplexSequence& tx) {
    const double scale = tx.peak_magnitude();
    if (!(scale > 0.0)) throw DegenerateInput("cannot normalize an all-zero sequence");
    return {apply_scale(tx, scale), scale};
}

ComplexSequence apply_scale(const ComplexSequence& tx, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("scale must be positive");
    std::vector<cdouble> out(tx.samples().begin(), tx.samples().end());
    if (scale != 1.0) {
        for (auto& s : out) s /= scale;
    }
    return ComplexSequence(std::move(out), tx.sample_rate_hz());
}

} // namespace imd2
