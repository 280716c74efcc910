#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <new>

namespace imd2::detail {

namespace {

// The FFTW planner is not thread-safe; execution with a private plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};

} // namespace

void fft_inplace(std::vector<std::complex<double>>& data, FftDirection dir) {
    if (data.empty()) return;
    // Always transform in an fftw_malloc buffer: plan selection depends on
    // alignment, and a fixed alignment keeps results bit-reproducible.
    std::unique_ptr<fftw_complex, FftwFree> buf(fftw_alloc_complex(data.size()));
    if (!buf) throw std::bad_alloc();
    std::copy(data.begin(), data.end(), reinterpret_cast<std::complex<double>*>(buf.get()));
    const int sign = dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf.get(), buf.get(), sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    const auto* out = reinterpret_cast<const std::complex<double>*>(buf.get());
    std::copy(out, out + data.size(), data.begin());
}

} // namespace imd2::detail
