// simharness.hpp
// Synthetic reverberant, noisy multichannel scenes with ground truth, and the
// enhancement metrics used to score them.
//
// Each channel is y^m = h^m * x + v^m where h^m is a delayed, scaled unit
// impulse followed by an exponentially decaying Gaussian tail
// (amplitude envelope exp(-6.9 t / T60)).

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mclpbeam/beamform.hpp"
#include "mclpbeam/mask.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam {

enum class NoiseKind { kWhite, kBabble };

const char *NoiseKindName(NoiseKind kind);
NoiseKind ParseNoiseKind(const std::string &name);

struct SceneConfig {
    int num_channels = 4;
    int rir_length = 4800;       // L_h: direct tap plus tail taps
    double decay_t60 = 0.3;      // seconds
    double reverb_level_db = 0.0;  // tail energy relative to the direct tap
    std::vector<int> direct_delays;  // samples; default 3*m
    std::vector<double> gains;       // default 1
    NoiseKind noise_kind = NoiseKind::kWhite;
    double snr_db = std::numeric_limits<double>::infinity();  // +inf: no noise
    uint64_t seed = 1;
};

void ValidateSceneConfig(const SceneConfig &cfg);

struct SceneTruth {
    SceneConfig config;
    AudioBuffer dry;    // 1 channel
    AudioBuffer direct;  // direct-path source per channel (delay and gain only)
    AudioBuffer image;   // reverberant clean image per channel
    AudioBuffer noise;
    AudioBuffer mixed;  // image + noise, sample for sample
    std::vector<Eigen::VectorXd> rirs;
};

// Output channels have the source length (causal, truncated convolution).
// Noise is scaled per channel to hit snr_db exactly.
SceneTruth SimulateScene(const AudioBuffer &source, const SceneConfig &cfg);

// Deterministic speech-like test signal: voiced syllables (glottal pulse train
// through formant resonators), unvoiced fricative bursts and pauses.
AudioBuffer SpeechLikeSource(double seconds, double sample_rate, uint64_t seed);

// Speech-shaped noise: Gaussian noise with a speech-like long-term spectrum
// (flat below ~300 Hz, -6 dB/octave above) gated by syllable-length envelopes
// separated by pauses. RMS 0.1 like SpeechLikeSource.
AudioBuffer SpeechShapedSource(double seconds, double sample_rate, uint64_t seed);

struct SnrResult {
    double snr_db = 0.0;
    int lag = 0;  // estimate[t + lag] aligns with reference[t]
};

inline constexpr double kSnrCapDb = 120.0;

// Scale-invariant SNR after integer-lag alignment within +-max_lag, over the
// overlap of the aligned signals: with t = (<r, e> / |r|^2) r the projection of
// the estimate onto the reference, 10 log10(|t|^2 / |e - t|^2), clamped to
// +-120 dB. Throws kInvalidInput for a zero reference.
SnrResult AlignedSnr(const Eigen::VectorXd &reference, const Eigen::VectorXd &estimate,
                     int max_lag = 512);
double SnrDb(const AudioBuffer &reference, const AudioBuffer &estimate, int max_lag = 512);

// AlignedSnr of mixture channel m against direct-path channel m, for every
// channel. Reverberation and noise both count as interference.
std::vector<double> InputSnrs(const SceneTruth &truth);

// Output SNR of a spatial filter. The weights are applied to the direct-path
// signals and to the mixture with AnalyzePadded() framing; the filtered direct
// path is the reference and the filtered mixture the estimate.
double BeamformedSnr(const SceneTruth &truth, const BeamformerWeights &weights,
                     const StftConfig &stft);

// Per-channel IRM from the direct-path source against the mixture, using the
// padded analysis framing of AnalyzePadded().
MaskTensor OracleIrm(const SceneTruth &truth, const IrmConfig &irm, const StftConfig &stft);

// Writes mixture.wav, direct.wav, image.wav, noise.wav, dry.wav and truth.txt
// into dir.
void ExportScene(const std::string &dir, const SceneTruth &truth);

}  // namespace mclpbeam
