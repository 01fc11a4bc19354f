// stft.hpp
// Short-time Fourier analysis and weighted overlap-add synthesis.
//
// Frame-time mapping: frame n covers input samples [n*hop, n*hop + fft_size).
// Analyze() keeps only full frames, so T = floor((len - fft_size) / hop) + 1.
// AnalyzePadded()/SynthesizePadded() zero-pad fft_size - hop samples in front
// and enough at the end that every input sample lies in the fully overlapped
// interior; use them when the whole signal must survive a round trip.

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mclpbeam {

enum class WindowKind { kSqrtHann, kHann, kRectangular };

const char *WindowName(WindowKind kind);
WindowKind ParseWindow(const std::string &name);

struct StftConfig {
    int fft_size = 512;
    int hop = 128;
    WindowKind window = WindowKind::kSqrtHann;
    double sample_rate = 16000.0;

    int num_bins() const { return fft_size / 2 + 1; }
};

// Periodic window of the given length.
std::vector<double> MakeWindow(WindowKind kind, int length);

// max |S(t) - mean S| / mean S, with S(t) = sum_j w^2(t + j*hop) over one hop.
double ColaDeviation(const StftConfig &cfg);

// Throws kConfiguration unless fft_size is a power of two, 0 < hop <= fft_size
// and sample_rate > 0. With require_cola, also enforces ColaDeviation <= 1e-10.
void ValidateStftConfig(const StftConfig &cfg, bool require_cola);

struct AudioBuffer {
    Eigen::MatrixXd samples;  // channel x time
    double sample_rate = 16000.0;

    int num_channels() const { return static_cast<int>(samples.rows()); }
    int num_samples() const { return static_cast<int>(samples.cols()); }
};

// Complex F x T x M tensor, stored as one F x T matrix per channel.
class Spectrogram {
public:
    Spectrogram() = default;
    Spectrogram(const StftConfig &cfg, int num_frames, int num_channels);

    int num_bins() const { return num_bins_; }
    int num_frames() const { return num_frames_; }
    int num_channels() const { return static_cast<int>(channels_.size()); }
    const StftConfig &config() const { return config_; }

    std::complex<double> &operator()(int k, int n, int m) { return channels_[m](k, n); }
    const std::complex<double> &operator()(int k, int n, int m) const {
        return channels_[m](k, n);
    }

    Eigen::MatrixXcd &channel(int m) { return channels_[m]; }
    const Eigen::MatrixXcd &channel(int m) const { return channels_[m]; }

    // y(k, .) as an M x T matrix.
    Eigen::MatrixXcd BinMatrix(int k) const;
    void SetBinMatrix(int k, const Eigen::MatrixXcd &values);

    // Single-channel spectrogram holding channel m.
    Spectrogram Channel(int m) const;

private:
    StftConfig config_;
    int num_bins_ = 0;
    int num_frames_ = 0;
    std::vector<Eigen::MatrixXcd> channels_;
};

int NumFrames(int num_samples, const StftConfig &cfg);

Spectrogram Analyze(const AudioBuffer &audio, const StftConfig &cfg);

// Output length is (T - 1) * hop + fft_size. Every channel is synthesized.
AudioBuffer Synthesize(const Spectrogram &spec, const StftConfig &cfg);

// Samples [begin, end) of Synthesize() output covered by fft_size/hop frames.
struct SampleRange {
    int begin = 0;
    int end = 0;
};
SampleRange InteriorRange(int num_frames, const StftConfig &cfg);

Spectrogram AnalyzePadded(const AudioBuffer &audio, const StftConfig &cfg);
AudioBuffer SynthesizePadded(const Spectrogram &spec, const StftConfig &cfg,
                             int num_samples);

}  // namespace mclpbeam
