// stft.cpp

#include "mclpbeam/stft.hpp"

#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "mclpbeam/error.hpp"

namespace mclpbeam {

const char *WindowName(WindowKind kind) {
    switch (kind) {
        case WindowKind::kSqrtHann: return "sqrt-hann";
        case WindowKind::kHann: return "hann";
        case WindowKind::kRectangular: return "rectangular";
    }
    return "unknown";
}

WindowKind ParseWindow(const std::string &name) {
    if (name == "sqrt-hann" || name == "sqrthann") return WindowKind::kSqrtHann;
    if (name == "hann") return WindowKind::kHann;
    if (name == "rectangular" || name == "rect") return WindowKind::kRectangular;
    throw Error(ErrorKind::kConfiguration, "unknown window '" + name + "'");
}

std::vector<double> MakeWindow(WindowKind kind, int length) {
    std::vector<double> w(length, 1.0);
    if (kind == WindowKind::kRectangular) return w;
    for (int i = 0; i < length; ++i) {
        double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length);
        w[i] = kind == WindowKind::kHann ? hann : std::sqrt(hann);
    }
    return w;
}

double ColaDeviation(const StftConfig &cfg) {
    const std::vector<double> w = MakeWindow(cfg.window, cfg.fft_size);
    std::vector<double> sum(cfg.hop, 0.0);
    for (int t = 0; t < cfg.hop; ++t)
        for (int i = t; i < cfg.fft_size; i += cfg.hop) sum[t] += w[i] * w[i];
    double mean = 0.0;
    for (double s : sum) mean += s;
    mean /= cfg.hop;
    if (mean <= 0.0) return 1.0;
    double dev = 0.0;
    for (double s : sum) dev = std::max(dev, std::abs(s - mean));
    return dev / mean;
}

void ValidateStftConfig(const StftConfig &cfg, bool require_cola) {
    const int n = cfg.fft_size;
    if (n < 2 || (n & (n - 1)) != 0)
        throw Error(ErrorKind::kConfiguration,
                    "fft_size must be a power of two, got " + std::to_string(n));
    if (cfg.hop <= 0 || cfg.hop > n)
        throw Error(ErrorKind::kConfiguration,
                    "hop must satisfy 0 < hop <= fft_size, got " + std::to_string(cfg.hop));
    if (!(cfg.sample_rate > 0.0))
        throw Error(ErrorKind::kConfiguration, "sample_rate must be positive");
    if (require_cola && ColaDeviation(cfg) > 1e-10)
        throw Error(ErrorKind::kConfiguration,
                    std::string("window ") + WindowName(cfg.window) + " at hop " +
                        std::to_string(cfg.hop) + " does not satisfy overlap-add");
}

Spectrogram::Spectrogram(const StftConfig &cfg, int num_frames, int num_channels)
    : config_(cfg), num_bins_(cfg.num_bins()), num_frames_(num_frames),
      channels_(num_channels, Eigen::MatrixXcd::Zero(cfg.num_bins(), num_frames)) {}

Eigen::MatrixXcd Spectrogram::BinMatrix(int k) const {
    Eigen::MatrixXcd out(num_channels(), num_frames_);
    for (int m = 0; m < num_channels(); ++m) out.row(m) = channels_[m].row(k);
    return out;
}

void Spectrogram::SetBinMatrix(int k, const Eigen::MatrixXcd &values) {
    for (int m = 0; m < num_channels(); ++m) channels_[m].row(k) = values.row(m);
}

Spectrogram Spectrogram::Channel(int m) const {
    Spectrogram out(config_, num_frames_, 1);
    out.channels_[0] = channels_[m];
    return out;
}

int NumFrames(int num_samples, const StftConfig &cfg) {
    if (num_samples < cfg.fft_size) return 0;
    return (num_samples - cfg.fft_size) / cfg.hop + 1;
}

Spectrogram Analyze(const AudioBuffer &audio, const StftConfig &cfg) {
    ValidateStftConfig(cfg, false);
    if (audio.num_channels() < 1)
        throw Error(ErrorKind::kInvalidInput, "audio has no channels");
    if (audio.num_samples() < cfg.fft_size)
        throw Error(ErrorKind::kInvalidInput,
                    "audio shorter than one frame (" + std::to_string(audio.num_samples()) +
                        " < " + std::to_string(cfg.fft_size) + " samples)");

    const int frames = NumFrames(audio.num_samples(), cfg);
    const std::vector<double> window = MakeWindow(cfg.window, cfg.fft_size);
    Spectrogram spec(cfg, frames, audio.num_channels());
    detail::RealFft fft(cfg.fft_size);
    std::vector<double> frame(cfg.fft_size);
    std::vector<std::complex<double>> bins(cfg.num_bins());
    for (int m = 0; m < audio.num_channels(); ++m) {
        Eigen::MatrixXcd &out = spec.channel(m);
        for (int n = 0; n < frames; ++n) {
            const int start = n * cfg.hop;
            for (int i = 0; i < cfg.fft_size; ++i)
                frame[i] = window[i] * audio.samples(m, start + i);
            fft.Forward(frame, bins);
            for (int k = 0; k < cfg.num_bins(); ++k) out(k, n) = bins[k];
        }
    }
    return spec;
}

AudioBuffer Synthesize(const Spectrogram &spec, const StftConfig &cfg) {
    ValidateStftConfig(cfg, true);
    if (spec.num_bins() != cfg.num_bins())
        throw Error(ErrorKind::kInvalidInput, "spectrogram bin count does not match config");

    const int frames = spec.num_frames();
    const int length = frames > 0 ? (frames - 1) * cfg.hop + cfg.fft_size : 0;
    const std::vector<double> window = MakeWindow(cfg.window, cfg.fft_size);

    // Constant sum of squared windows; ColaDeviation() guarantees it is flat.
    double norm = 0.0;
    for (int i = 0; i < cfg.fft_size; i += cfg.hop) norm += window[i] * window[i];
    norm *= cfg.fft_size;  // unnormalized inverse FFT

    AudioBuffer audio;
    audio.sample_rate = cfg.sample_rate;
    audio.samples = Eigen::MatrixXd::Zero(spec.num_channels(), length);
    detail::RealFft fft(cfg.fft_size);
    std::vector<double> frame(cfg.fft_size);
    std::vector<std::complex<double>> bins(cfg.num_bins());
    for (int m = 0; m < spec.num_channels(); ++m) {
        const Eigen::MatrixXcd &in = spec.channel(m);
        for (int n = 0; n < frames; ++n) {
            for (int k = 0; k < cfg.num_bins(); ++k) bins[k] = in(k, n);
            fft.Inverse(bins, frame);
            const int start = n * cfg.hop;
            for (int i = 0; i < cfg.fft_size; ++i)
                audio.samples(m, start + i) += window[i] * frame[i] / norm;
        }
    }
    return audio;
}

SampleRange InteriorRange(int num_frames, const StftConfig &cfg) {
    SampleRange r;
    r.begin = cfg.fft_size - cfg.hop;
    r.end = std::max(r.begin, num_frames * cfg.hop);
    return r;
}

Spectrogram AnalyzePadded(const AudioBuffer &audio, const StftConfig &cfg) {
    ValidateStftConfig(cfg, false);
    const int front = cfg.fft_size - cfg.hop;
    const int len = audio.num_samples();
    const int frames = std::max(1, (len + front + cfg.hop - 1) / cfg.hop);
    const int padded = (frames - 1) * cfg.hop + cfg.fft_size;
    AudioBuffer tmp;
    tmp.sample_rate = audio.sample_rate;
    tmp.samples = Eigen::MatrixXd::Zero(audio.num_channels(), padded);
    tmp.samples.middleCols(front, len) = audio.samples;
    return Analyze(tmp, cfg);
}

AudioBuffer SynthesizePadded(const Spectrogram &spec, const StftConfig &cfg,
                             int num_samples) {
    AudioBuffer full = Synthesize(spec, cfg);
    const int front = cfg.fft_size - cfg.hop;
    if (front + num_samples > full.num_samples())
        throw Error(ErrorKind::kInvalidInput, "requested length exceeds padded synthesis");
    AudioBuffer out;
    out.sample_rate = full.sample_rate;
    out.samples = full.samples.middleCols(front, num_samples);
    return out;
}

}  // namespace mclpbeam
