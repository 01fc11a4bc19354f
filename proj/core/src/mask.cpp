// mask.cpp

#include "mclpbeam/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mclpbeam/error.hpp"
#include "mclpbeam/tensor_io.hpp"

namespace mclpbeam {

MaskTensor::MaskTensor(int num_bins, int num_frames, int num_channels, MaskKind kind,
                       double fill)
    : num_bins_(num_bins), num_frames_(num_frames), kind_(kind),
      channels_(num_channels, Eigen::MatrixXd::Constant(num_bins, num_frames, fill)) {}

MaskTensor MaskTensor::Complement() const {
    MaskTensor out = *this;
    out.kind_ = kind_ == MaskKind::kSpeech ? MaskKind::kNoise : MaskKind::kSpeech;
    for (auto &c : out.channels_) c = (1.0 - c.array()).matrix();
    return out;
}

void ValidateIrmConfig(const IrmConfig &cfg) {
    if (!std::isfinite(cfg.threshold_voiced_db) || !std::isfinite(cfg.threshold_unvoiced_db))
        throw Error(ErrorKind::kConfiguration, "IRM thresholds must be finite");
    if (!(cfg.vad_energy_quantile > 0.0 && cfg.vad_energy_quantile < 1.0))
        throw Error(ErrorKind::kConfiguration, "vad_energy_quantile must lie in (0, 1)");
}

std::vector<bool> VoicedFrames(const Eigen::MatrixXcd &clean, double quantile) {
    const int frames = static_cast<int>(clean.cols());
    std::vector<double> energy(frames);
    for (int n = 0; n < frames; ++n)
        energy[n] = std::log10(clean.col(n).squaredNorm() + std::numeric_limits<double>::min());
    std::vector<bool> voiced(frames, false);
    if (frames == 0) return voiced;
    std::vector<double> sorted = energy;
    std::sort(sorted.begin(), sorted.end());
    const double pos = quantile * (frames - 1);
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, frames - 1);
    const double threshold = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
    for (int n = 0; n < frames; ++n) voiced[n] = energy[n] > threshold;
    return voiced;
}

MaskTensor ThresholdRatioMasks(const Spectrogram &clean, const Spectrogram &noisy,
                               const IrmConfig &cfg) {
    ValidateIrmConfig(cfg);
    const int bins = noisy.num_bins(), frames = noisy.num_frames(),
              channels = noisy.num_channels();
    if (clean.num_bins() != bins || clean.num_frames() != frames)
        throw Error(ErrorKind::kInvalidInput, "clean and noisy spectrograms differ in shape");
    if (clean.num_channels() != 1 && clean.num_channels() != channels)
        throw Error(ErrorKind::kInvalidInput,
                    "clean spectrogram must have 1 or " + std::to_string(channels) + " channels");

    double max_mag = 0.0;
    for (int m = 0; m < channels; ++m) max_mag = std::max(max_mag, noisy.channel(m).cwiseAbs().maxCoeff());
    const double floor = std::max(1e-10 * max_mag, std::numeric_limits<double>::min());
    const double ratio_voiced = std::pow(10.0, cfg.threshold_voiced_db / 20.0);
    const double ratio_unvoiced = std::pow(10.0, cfg.threshold_unvoiced_db / 20.0);

    MaskTensor out(bins, frames, channels);
    std::vector<bool> voiced;
    for (int m = 0; m < channels; ++m) {
        const Eigen::MatrixXcd &c = clean.channel(clean.num_channels() == 1 ? 0 : m);
        if (m == 0 || clean.num_channels() > 1) voiced = VoicedFrames(c, cfg.vad_energy_quantile);
        const Eigen::MatrixXcd &y = noisy.channel(m);
        for (int n = 0; n < frames; ++n) {
            const double limit = voiced[n] ? ratio_voiced : ratio_unvoiced;
            for (int k = 0; k < bins; ++k) {
                const double rho = std::abs(c(k, n)) / std::max(std::abs(y(k, n)), floor);
                out(k, n, m) = rho > limit ? 1.0 : 0.0;
            }
        }
    }
    return out;
}

MaskTensor ComputeIrmTargets(const Spectrogram &clean_est, const Spectrogram &noisy,
                             const IrmConfig &cfg) {
    if (clean_est.num_channels() != 1)
        throw Error(ErrorKind::kInvalidInput, "clean estimate must be single-channel");
    return ThresholdRatioMasks(clean_est, noisy, cfg);
}

MaskTensor MedianFuse(const MaskTensor &masks) {
    const int channels = masks.num_channels();
    if (channels < 1) throw Error(ErrorKind::kInvalidInput, "no masks to fuse");
    MaskTensor out(masks.num_bins(), masks.num_frames(), 1, masks.kind());
    const int order = (channels + 1) / 2 - 1;  // ceil(M/2), zero-based
    std::vector<double> values(channels);
    for (int n = 0; n < masks.num_frames(); ++n) {
        for (int k = 0; k < masks.num_bins(); ++k) {
            for (int m = 0; m < channels; ++m) values[m] = masks(k, n, m);
            std::nth_element(values.begin(), values.begin() + order, values.end());
            out(k, n) = values[order];
        }
    }
    return out;
}

PsdSet EstimatePsd(const Spectrogram &spec, const Eigen::MatrixXd &weights) {
    const int bins = spec.num_bins();
    if (weights.rows() != bins || weights.cols() != spec.num_frames())
        throw Error(ErrorKind::kInvalidInput, "mask shape does not match spectrogram");
    PsdSet out;
    out.reserve(bins);
    for (int k = 0; k < bins; ++k) {
        const double total = weights.row(k).sum();
        if (!(total > 0.0))
            throw Error(ErrorKind::kDegenerateMask, "mask weights sum to zero", k);
        const Eigen::MatrixXcd y = spec.BinMatrix(k);
        const Eigen::MatrixXcd weighted = y * weights.row(k).transpose().asDiagonal();
        out.emplace_back(weighted * y.adjoint() / total);
    }
    return out;
}

PsdSet EstimatePsd(const Spectrogram &spec, const MaskTensor &mask) {
    if (mask.num_channels() != 1)
        throw Error(ErrorKind::kInvalidInput, "PSD estimation needs a fused (single) mask");
    return EstimatePsd(spec, mask.channel(0));
}

PsdSet EstimatePsdOrUniform(const Spectrogram &spec, const MaskTensor &mask,
                            std::vector<int> *substituted) {
    if (mask.num_channels() != 1)
        throw Error(ErrorKind::kInvalidInput, "PSD estimation needs a fused (single) mask");
    Eigen::MatrixXd weights = mask.channel(0);
    if (weights.rows() != spec.num_bins() || weights.cols() != spec.num_frames())
        throw Error(ErrorKind::kInvalidInput, "mask shape does not match spectrogram");
    for (int k = 0; k < weights.rows(); ++k) {
        if (!(weights.row(k).sum() > 0.0)) {
            weights.row(k).setOnes();
            if (substituted) substituted->push_back(k);
        }
    }
    return EstimatePsd(spec, weights);
}

void WriteMask(const std::string &path, const MaskTensor &mask) {
    Tensor t;
    t.dtype = TensorDtype::kFloat64;
    const int bins = mask.num_bins(), frames = mask.num_frames(), channels = mask.num_channels();
    t.dims = {uint64_t(bins), uint64_t(frames)};
    if (channels > 1) t.dims.push_back(uint64_t(channels));
    t.real.reserve(t.num_elements());
    for (int k = 0; k < bins; ++k)
        for (int n = 0; n < frames; ++n)
            for (int m = 0; m < channels; ++m) t.real.push_back(mask(k, n, m));
    WriteTensor(path, t);
}

MaskTensor ReadMask(const std::string &path) {
    const Tensor t = ReadTensor(path);
    if (t.dtype != TensorDtype::kFloat64 || (t.dims.size() != 2 && t.dims.size() != 3))
        throw Error(ErrorKind::kInvalidInput, path + ": mask must be a real 2-D or 3-D tensor");
    const int bins = int(t.dims[0]), frames = int(t.dims[1]);
    const int channels = t.dims.size() == 3 ? int(t.dims[2]) : 1;
    MaskTensor mask(bins, frames, channels);
    size_t i = 0;
    for (int k = 0; k < bins; ++k)
        for (int n = 0; n < frames; ++n)
            for (int m = 0; m < channels; ++m) {
                const double v = t.real[i++];
                if (!(v >= 0.0 && v <= 1.0))
                    throw Error(ErrorKind::kInvalidInput, path + ": mask value outside [0, 1]");
                mask(k, n, m) = v;
            }
    return mask;
}

}  // namespace mclpbeam
