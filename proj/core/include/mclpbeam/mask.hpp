// mask.hpp
// Pseudo-target ratio masks, median fusion across channels and mask-weighted
// spatial covariance (PSD) estimation.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mclpbeam/numerics.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam {

enum class MaskKind { kSpeech, kNoise };

// Real F x T x M tensor with values in [0, 1].
class MaskTensor {
public:
    MaskTensor() = default;
    MaskTensor(int num_bins, int num_frames, int num_channels = 1,
               MaskKind kind = MaskKind::kSpeech, double fill = 0.0);

    int num_bins() const { return num_bins_; }
    int num_frames() const { return num_frames_; }
    int num_channels() const { return static_cast<int>(channels_.size()); }
    MaskKind kind() const { return kind_; }

    double &operator()(int k, int n, int m = 0) { return channels_[m](k, n); }
    double operator()(int k, int n, int m = 0) const { return channels_[m](k, n); }

    Eigen::MatrixXd &channel(int m) { return channels_[m]; }
    const Eigen::MatrixXd &channel(int m) const { return channels_[m]; }

    // 1 - s with the kind flipped.
    MaskTensor Complement() const;

private:
    int num_bins_ = 0;
    int num_frames_ = 0;
    MaskKind kind_ = MaskKind::kSpeech;
    std::vector<Eigen::MatrixXd> channels_;
};

struct IrmConfig {
    double threshold_voiced_db = -6.0;
    double threshold_unvoiced_db = -12.0;
    double vad_energy_quantile = 0.6;
};

void ValidateIrmConfig(const IrmConfig &cfg);

// Frames whose full-band log energy exceeds the given quantile of all frames.
std::vector<bool> VoicedFrames(const Eigen::MatrixXcd &clean, double quantile);

// Binary masks: 1 where 20 log10(|clean| / max(|noisy^m|, floor)) exceeds the
// voiced or unvoiced threshold of the frame, floor = 1e-10 * max |noisy|.
// `clean` has one channel (broadcast) or as many channels as `noisy`; voicing
// is decided per clean channel.
MaskTensor ThresholdRatioMasks(const Spectrogram &clean, const Spectrogram &noisy,
                               const IrmConfig &cfg);

// Per-channel targets from a single-channel clean estimate.
MaskTensor ComputeIrmTargets(const Spectrogram &clean_est, const Spectrogram &noisy,
                             const IrmConfig &cfg);

// Elementwise lower median across channels (order statistic ceil(M/2)).
MaskTensor MedianFuse(const MaskTensor &masks);

using PsdSet = std::vector<HermitianMatrix>;

// Phi(k) = sum_n s(k,n) y y^H / sum_n s(k,n). Throws kDegenerateMask naming
// the first bin whose weights sum to zero.
PsdSet EstimatePsd(const Spectrogram &spec, const Eigen::MatrixXd &weights);
PsdSet EstimatePsd(const Spectrogram &spec, const MaskTensor &mask);

// As EstimatePsd, but degenerate bins use a uniform mask; their indices are
// appended to `substituted`.
PsdSet EstimatePsdOrUniform(const Spectrogram &spec, const MaskTensor &mask,
                            std::vector<int> *substituted);

// Mask files use the tensor format with dims (F, T) or (F, T, M).
void WriteMask(const std::string &path, const MaskTensor &mask);
MaskTensor ReadMask(const std::string &path);

}  // namespace mclpbeam
