// fft.cpp

#include "fft.hpp"

#include <algorithm>
#include <mutex>
#include <new>

namespace mclpbeam::detail {

namespace {
// The FFTW planner is not reentrant.
std::mutex &PlannerMutex() {
    static std::mutex m;
    return m;
}
}  // namespace

RealFft::RealFft(int size) : size_(size) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    real_ = fftw_alloc_real(size_);
    spectrum_ = fftw_alloc_complex(num_bins());
    if (!real_ || !spectrum_) {
        fftw_free(real_);
        fftw_free(spectrum_);
        throw std::bad_alloc();
    }
    // FFTW_ESTIMATE keeps plans (and therefore results) independent of timing.
    forward_ = fftw_plan_dft_r2c_1d(size_, real_, spectrum_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(size_, spectrum_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spectrum_);
}

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
    std::copy(in.begin(), in.begin() + size_, real_);
    fftw_execute(forward_);
    for (int k = 0; k < num_bins(); ++k)
        out[k] = {spectrum_[k][0], spectrum_[k][1]};
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
    for (int k = 0; k < num_bins(); ++k) {
        spectrum_[k][0] = in[k].real();
        spectrum_[k][1] = in[k].imag();
    }
    // DC and Nyquist are real in a one-sided spectrum.
    spectrum_[0][1] = 0.0;
    if (size_ % 2 == 0) spectrum_[num_bins() - 1][1] = 0.0;
    fftw_execute(inverse_);
    std::copy(real_, real_ + size_, out.begin());
}

}  // namespace mclpbeam::detail
