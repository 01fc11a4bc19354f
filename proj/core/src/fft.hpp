// fft.hpp
// Thin RAII wrapper over FFTW real transforms (internal to mclpbeam_core).

#pragma once

#include <complex>
#include <span>

#include <fftw3.h>

namespace mclpbeam::detail {

// One-sided real FFT of a fixed size. Instances are not shareable across
// threads; plan creation itself is serialized internally.
class RealFft {
public:
    explicit RealFft(int size);
    ~RealFft();
    RealFft(const RealFft &) = delete;
    RealFft &operator=(const RealFft &) = delete;

    int size() const { return size_; }
    int num_bins() const { return size_ / 2 + 1; }

    // in: size() samples; out: num_bins() coefficients.
    void Forward(std::span<const double> in, std::span<std::complex<double>> out);
    // Unnormalized inverse: Inverse(Forward(x)) == size() * x.
    void Inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    int size_;
    double *real_ = nullptr;
    fftw_complex *spectrum_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

}  // namespace mclpbeam::detail
