// pipeline.cpp

#include "mclpbeam/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "mclpbeam/error.hpp"

namespace mclpbeam {

namespace {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming> *out) : out_(out), last_(Clock::now()) {}
    void Mark(const std::string &stage) {
        const auto now = Clock::now();
        out_->push_back({stage, std::chrono::duration<double>(now - last_).count()});
        last_ = now;
    }

private:
    using Clock = std::chrono::steady_clock;
    std::vector<StageTiming> *out_;
    Clock::time_point last_;
};

void CheckInput(const AudioBuffer &input, const PipelineConfig &cfg) {
    if (input.num_channels() < 1 || input.num_samples() == 0)
        throw Error(ErrorKind::kInvalidInput, "input audio is empty");
    if (input.sample_rate != cfg.stft.sample_rate)
        throw Error(ErrorKind::kInvalidInput,
                    "input sample rate " + std::to_string(int(input.sample_rate)) +
                        " Hz differs from configured " +
                        std::to_string(int(cfg.stft.sample_rate)) + " Hz");
    if (!input.samples.allFinite())
        throw Error(ErrorKind::kInvalidInput, "input audio contains non-finite samples");
}

MaskTensor MasksFromSource(const Spectrogram &spec, const Spectrogram &mclp_out,
                           const PipelineConfig &cfg, const EnhanceAssets &assets) {
    switch (cfg.mask_source) {
        case MaskSource::kMclpDirect:
            return ComputeIrmTargets(mclp_out, spec, cfg.irm);
        case MaskSource::kNeural: {
            if (!assets.net) throw Error(ErrorKind::kConfiguration, "neural masks need a checkpoint");
            if (assets.net->output_size() != spec.num_bins())
                throw Error(ErrorKind::kInvalidInput,
                            "checkpoint predicts " + std::to_string(assets.net->output_size()) +
                                " bins, spectrogram has " + std::to_string(spec.num_bins()));
            return PredictMasks(*assets.net, spec);
        }
        case MaskSource::kFile: {
            if (!assets.mask) throw Error(ErrorKind::kConfiguration, "file masks need a mask file");
            const MaskTensor &mask = *assets.mask;
            if (mask.num_bins() != spec.num_bins() || mask.num_frames() != spec.num_frames())
                throw Error(ErrorKind::kInvalidInput,
                            "mask is " + std::to_string(mask.num_bins()) + " x " +
                                std::to_string(mask.num_frames()) + ", spectrogram is " +
                                std::to_string(spec.num_bins()) + " x " +
                                std::to_string(spec.num_frames()));
            if (mask.num_channels() != 1 && mask.num_channels() != spec.num_channels())
                throw Error(ErrorKind::kInvalidInput, "mask channel count matches neither 1 nor M");
            return mask;
        }
    }
    throw Error(ErrorKind::kConfiguration, "unknown mask source");
}

}  // namespace

MaskTensor PseudoTargets(const Spectrogram &spec, const PipelineConfig &cfg, MclpResult *mclp) {
    MclpResult local = RunMclp(spec, cfg.mclp);
    MaskTensor targets = ComputeIrmTargets(local.d1, spec, cfg.irm);
    if (mclp) *mclp = std::move(local);
    return targets;
}

EnhanceResult Enhance(const AudioBuffer &input, const PipelineConfig &cfg,
                      const EnhanceAssets &assets) {
    ValidatePipelineConfig(cfg);
    CheckInput(input, cfg);
    EnhanceResult result;
    StageClock clock(&result.timings);

    const Spectrogram spec = AnalyzePadded(input, cfg.stft);
    clock.Mark("analyze");

    MclpConfig mclp_cfg = cfg.mclp;
    if (mclp_cfg.reference_channel >= input.num_channels())
        throw Error(ErrorKind::kConfiguration, "mclp.reference_channel exceeds channel count");
    MclpResult mclp = RunMclp(spec, mclp_cfg);
    result.mclp_output = std::move(mclp.d1);
    result.mclp_state = std::move(mclp.state);
    result.mclp_fallbacks = std::move(mclp.diagnostics);
    clock.Mark("mclp");

    if (input.num_channels() == 1) {
        result.warnings.push_back("single-channel input: emitting the MCLP output without beamforming");
        result.output = SynthesizePadded(result.mclp_output, cfg.stft, input.num_samples());
        clock.Mark("synthesize");
        return result;
    }

    const MaskTensor masks = MasksFromSource(spec, result.mclp_output, cfg, assets);
    result.speech_mask = MedianFuse(masks);
    clock.Mark("mask");

    const PsdSet xx = EstimatePsdOrUniform(spec, result.speech_mask, &result.speech_psd_substituted);
    const PsdSet vv =
        EstimatePsdOrUniform(spec, result.speech_mask.Complement(), &result.noise_psd_substituted);
    clock.Mark("psd");

    if (cfg.beamformer == BeamformerKind::kGev) {
        result.weights = GevWeights(xx, vv, cfg.beamform_delta, mclp_cfg.reference_channel);
    } else {
        std::vector<Eigen::VectorXcd> steering;
        if (cfg.steering == SteeringSource::kRtf) {
            steering = result.mclp_state.a;
        } else {
            steering = SteeringFromPsd(xx);
        }
        result.weights = MvdrWeights(vv, steering, cfg.beamform_delta);
    }
    if (result.weights.fallback_bins.size() == size_t(spec.num_bins()))
        result.warnings.push_back(
            "speech and noise PSDs coincide in every bin: emitting the reference channel");
    clock.Mark("beamform");

    const Spectrogram z = Apply(spec, result.weights);
    result.beamformed = true;
    result.output = SynthesizePadded(z, cfg.stft, input.num_samples());
    clock.Mark("synthesize");
    return result;
}

TrainMaskResult TrainMaskEstimator(const std::vector<AudioBuffer> &utterances,
                                   const PipelineConfig &cfg) {
    ValidatePipelineConfig(cfg);
    if (utterances.empty()) throw Error(ErrorKind::kInvalidInput, "no training utterances");
    TrainMaskResult result;
    StageClock clock(&result.timings);

    MaskDataset data;
    for (const AudioBuffer &audio : utterances) {
        CheckInput(audio, cfg);
        const Spectrogram spec = AnalyzePadded(audio, cfg.stft);
        data.Append(spec, PseudoTargets(spec, cfg), cfg.estimator_context);
    }
    result.num_examples = data.size();
    clock.Mark("targets");

    MaskNet net = MakeMaskNet(cfg.stft.num_bins(), cfg.estimator_context, cfg.estimator_hidden,
                              cfg.seed, cfg.train.dropout_rate);
    FitInputNormalization(net, data.features);
    result.train = Train(std::move(net), data, cfg.train);
    clock.Mark("train");
    return result;
}

}  // namespace mclpbeam
