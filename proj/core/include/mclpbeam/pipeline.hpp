// pipeline.hpp
// End-to-end unsupervised enhancement: MCLP pseudo-clean estimate, masks,
// mask-weighted PSDs, beamforming and resynthesis.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mclpbeam/beamform.hpp"
#include "mclpbeam/config.hpp"
#include "mclpbeam/estimator.hpp"
#include "mclpbeam/mask.hpp"
#include "mclpbeam/mclp.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam {

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

// Externally supplied artifacts; which one is needed depends on mask_source.
struct EnhanceAssets {
    std::optional<MaskNet> net;
    std::optional<MaskTensor> mask;
};

struct EnhanceResult {
    AudioBuffer output;  // mono, same length and rate as the input
    Spectrogram mclp_output;
    MclpState mclp_state;
    std::vector<BinDiagnostic> mclp_fallbacks;
    MaskTensor speech_mask;  // fused, F x T
    BeamformerWeights weights;
    std::vector<int> speech_psd_substituted;
    std::vector<int> noise_psd_substituted;
    bool beamformed = false;
    std::vector<std::string> warnings;
    std::vector<StageTiming> timings;
};

// Throws kInvalidInput for an empty input or a sample rate that differs from
// cfg.stft.sample_rate. M = 1 returns the MCLP output without beamforming.
EnhanceResult Enhance(const AudioBuffer &input, const PipelineConfig &cfg,
                      const EnhanceAssets &assets = {});

// Pseudo-target masks for one utterance: per-channel thresholded ratio of the
// MCLP output to each microphone signal.
MaskTensor PseudoTargets(const Spectrogram &spec, const PipelineConfig &cfg,
                         MclpResult *mclp = nullptr);

struct TrainMaskResult {
    TrainResult train;
    int num_examples = 0;
    std::vector<StageTiming> timings;
};

// Builds pseudo targets for every utterance, then trains a fresh MaskNet.
TrainMaskResult TrainMaskEstimator(const std::vector<AudioBuffer> &utterances,
                                   const PipelineConfig &cfg);

}  // namespace mclpbeam
