// commands.cpp

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mclpbeam/config.hpp"
#include "mclpbeam/error.hpp"
#include "mclpbeam/pipeline.hpp"
#include "mclpbeam/simharness.hpp"
#include "mclpbeam/wav.hpp"

namespace mclpbeam::cli {

namespace {

using nlohmann::json;

// Flags shared by every subcommand. Each one maps onto a config key and is
// applied after the config file.
struct SharedFlags {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> beamformer;
    std::optional<std::string> mask_source;
    std::optional<int> taps;
    std::optional<int> delay;
    std::optional<int> iterations;
    std::vector<std::string> settings;
    bool summary = false;
};

void AddSharedFlags(CLI::App *cmd, SharedFlags &f) {
    cmd->add_option("--config", f.config_path, "key=value configuration file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--beamformer", f.beamformer, "gev | mvdr");
    cmd->add_option("--mask-source", f.mask_source, "mclp-direct | neural | file");
    cmd->add_option("--mclp-taps", f.taps, "MCLP lags per channel (L)");
    cmd->add_option("--mclp-delay", f.delay, "MCLP prediction delay in frames (D)");
    cmd->add_option("--iterations", f.iterations, "MCLP iterations");
    cmd->add_option("--set", f.settings, "override any config key, e.g. --set stft.hop=256");
    cmd->add_flag("--summary", f.summary, "print a one-line JSON summary to stdout");
}

PipelineConfig ResolveConfig(const SharedFlags &f) {
    PipelineConfig cfg;
    if (!f.config_path.empty()) LoadConfigFile(f.config_path, cfg);
    if (f.seed) ApplySetting(cfg, "seed", std::to_string(*f.seed));
    if (f.beamformer) ApplySetting(cfg, "beamformer", *f.beamformer);
    if (f.mask_source) ApplySetting(cfg, "mask_source", *f.mask_source);
    if (f.taps) ApplySetting(cfg, "mclp.taps", std::to_string(*f.taps));
    if (f.delay) ApplySetting(cfg, "mclp.delay", std::to_string(*f.delay));
    if (f.iterations) ApplySetting(cfg, "mclp.iterations", std::to_string(*f.iterations));
    for (const std::string &s : f.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::kConfiguration, "--set expects key=value, got '" + s + "'");
        ApplySetting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
}

void PrintTimings(const std::vector<StageTiming> &timings) {
    for (const auto &t : timings)
        std::fprintf(stderr, "  %-12s %8.3f s\n", t.stage.c_str(), t.seconds);
}

json TimingsJson(const std::vector<StageTiming> &timings) {
    json out = json::object();
    for (const auto &t : timings) out[t.stage] = t.seconds;
    return out;
}

void EmitSummary(bool enabled, const json &j) {
    if (enabled) std::cout << j.dump() << std::endl;
}

// --- enhance ---------------------------------------------------------------

struct EnhanceArgs {
    SharedFlags shared;
    std::string input;
    std::string output;
    std::string mask;
    std::string checkpoint;
    std::string mask_out;
    std::string weights_out;
};

void RunEnhance(const EnhanceArgs &args) {
    PipelineConfig cfg = ResolveConfig(args.shared);
    if (!args.mask.empty()) cfg.mask_path = args.mask;
    if (!args.checkpoint.empty()) cfg.checkpoint_path = args.checkpoint;
    if (!args.mask_out.empty()) cfg.mask_out_path = args.mask_out;
    if (!args.weights_out.empty()) cfg.weights_out_path = args.weights_out;
    ValidatePipelineConfig(cfg);

    const AudioBuffer input = ReadWav(args.input);
    EnhanceAssets assets;
    if (cfg.mask_source == MaskSource::kFile) assets.mask = ReadMask(cfg.mask_path);
    if (cfg.mask_source == MaskSource::kNeural) assets.net = LoadMaskNet(cfg.checkpoint_path);

    const EnhanceResult result = Enhance(input, cfg, assets);
    WriteWav(args.output, result.output);
    if (!cfg.mask_out_path.empty() && result.beamformed)
        WriteMask(cfg.mask_out_path, result.speech_mask);
    if (!cfg.weights_out_path.empty() && result.beamformed)
        WriteWeights(cfg.weights_out_path, result.weights);

    std::fprintf(stderr, "enhance: %d channels, %d samples at %g Hz\n", input.num_channels(),
                 input.num_samples(), input.sample_rate);
    PrintTimings(result.timings);
    std::fprintf(stderr, "  mclp fallback bins: %zu\n", result.mclp_fallbacks.size());
    for (const auto &d : result.mclp_fallbacks)
        std::fprintf(stderr, "    bin %d: %s\n", d.bin, d.message.c_str());
    if (result.beamformed) {
        std::fprintf(stderr, "  %s fallback bins: %zu\n", BeamformerName(cfg.beamformer),
                     result.weights.fallback_bins.size());
        std::fprintf(stderr, "  uniform-mask PSD bins: speech %zu, noise %zu\n",
                     result.speech_psd_substituted.size(), result.noise_psd_substituted.size());
    }
    for (const auto &w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    EmitSummary(args.shared.summary,
                {{"command", "enhance"},
                 {"output", args.output},
                 {"channels", input.num_channels()},
                 {"samples", input.num_samples()},
                 {"sample_rate", input.sample_rate},
                 {"beamformer", BeamformerName(cfg.beamformer)},
                 {"mask_source", MaskSourceName(cfg.mask_source)},
                 {"beamformed", result.beamformed},
                 {"mclp_fallback_bins", result.mclp_fallbacks.size()},
                 {"beamformer_fallback_bins", result.weights.fallback_bins.size()},
                 {"speech_psd_substituted", result.speech_psd_substituted.size()},
                 {"noise_psd_substituted", result.noise_psd_substituted.size()},
                 {"warnings", result.warnings},
                 {"timings", TimingsJson(result.timings)}});
}

// --- train-mask ------------------------------------------------------------

struct TrainArgs {
    SharedFlags shared;
    std::vector<std::string> inputs;
    std::string output;
    std::optional<int> epochs;
    std::optional<double> learning_rate;
};

void RunTrain(const TrainArgs &args) {
    PipelineConfig cfg = ResolveConfig(args.shared);
    if (args.epochs) ApplySetting(cfg, "train.epochs", std::to_string(*args.epochs));
    if (args.learning_rate) cfg.train.learning_rate = *args.learning_rate;
    ValidateTrainConfig(cfg.train);

    std::vector<AudioBuffer> utterances;
    for (const auto &path : args.inputs) utterances.push_back(ReadWav(path));
    const TrainMaskResult result = TrainMaskEstimator(utterances, cfg);
    SaveMaskNet(args.output, result.train.net);

    std::fprintf(stderr, "train-mask: %zu utterances, %d examples\n", utterances.size(),
                 result.num_examples);
    PrintTimings(result.timings);
    std::fprintf(stderr, "  initial loss %.6f\n", result.train.initial_loss);
    for (size_t e = 0; e < result.train.loss_trace.size(); ++e)
        std::fprintf(stderr, "  epoch %3zu loss %.6f\n", e + 1, result.train.loss_trace[e]);

    EmitSummary(args.shared.summary, {{"command", "train-mask"},
                                      {"checkpoint", args.output},
                                      {"utterances", utterances.size()},
                                      {"examples", result.num_examples},
                                      {"initial_loss", result.train.initial_loss},
                                      {"loss_trace", result.train.loss_trace},
                                      {"timings", TimingsJson(result.timings)}});
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    SharedFlags shared;
    std::string source;
    double speech_like_seconds = 0.0;
    double speech_shaped_seconds = 0.0;
    double sample_rate = 16000.0;
    std::string output_dir;
    int channels = 4;
    int rir_length = 4800;
    double t60 = 0.3;
    double reverb_level_db = 0.0;
    std::string snr = "inf";
    std::string noise = "white";
};

void RunSimulate(const SimulateArgs &args) {
    const PipelineConfig cfg = ResolveConfig(args.shared);
    const int sources = int(!args.source.empty()) + int(args.speech_like_seconds > 0.0) +
                        int(args.speech_shaped_seconds > 0.0);
    if (sources != 1)
        throw Error(ErrorKind::kInvalidInput,
                    "give exactly one of a source WAV, --speech-like or --speech-shaped");
    AudioBuffer source;
    if (!args.source.empty()) {
        source = ReadWav(args.source);
        if (source.num_channels() != 1)
            throw Error(ErrorKind::kInvalidInput, "source WAV must be mono");
    } else if (args.speech_like_seconds > 0.0) {
        source = SpeechLikeSource(args.speech_like_seconds, args.sample_rate, cfg.seed);
    } else {
        source = SpeechShapedSource(args.speech_shaped_seconds, args.sample_rate, cfg.seed);
    }

    SceneConfig scene;
    scene.num_channels = args.channels;
    scene.rir_length = args.rir_length;
    scene.decay_t60 = args.t60;
    scene.reverb_level_db = args.reverb_level_db;
    scene.noise_kind = ParseNoiseKind(args.noise);
    if (args.snr == "inf") {
        scene.snr_db = std::numeric_limits<double>::infinity();
    } else {
        try {
            size_t used = 0;
            scene.snr_db = std::stod(args.snr, &used);
            if (used != args.snr.size()) throw std::invalid_argument(args.snr);
        } catch (const std::exception &) {
            throw Error(ErrorKind::kInvalidInput, "--snr expects a number or 'inf'");
        }
    }
    scene.seed = cfg.seed;

    const SceneTruth truth = SimulateScene(source, scene);
    ExportScene(args.output_dir, truth);
    const std::vector<double> snrs = InputSnrs(truth);

    std::fprintf(stderr, "simulate: %d channels, %d samples -> %s\n", scene.num_channels,
                 source.num_samples(), args.output_dir.c_str());
    for (size_t m = 0; m < snrs.size(); ++m)
        std::fprintf(stderr, "  channel %zu snr vs direct path %.2f dB\n", m, snrs[m]);
    EmitSummary(args.shared.summary, {{"command", "simulate"},
                                      {"directory", args.output_dir},
                                      {"channels", scene.num_channels},
                                      {"samples", source.num_samples()},
                                      {"input_snr_db", snrs}});
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    SharedFlags shared;
    std::string reference;
    std::string estimate;
    int reference_channel = 0;
    int estimate_channel = 0;
    int max_lag = 512;
};

void RunEval(const EvalArgs &args) {
    const AudioBuffer ref = ReadWav(args.reference);
    const AudioBuffer est = ReadWav(args.estimate);
    if (args.reference_channel < 0 || args.reference_channel >= ref.num_channels() ||
        args.estimate_channel < 0 || args.estimate_channel >= est.num_channels())
        throw Error(ErrorKind::kInvalidInput, "channel index out of range");
    if (ref.sample_rate != est.sample_rate)
        throw Error(ErrorKind::kInvalidInput, "reference and estimate sample rates differ");
    const SnrResult r = AlignedSnr(ref.samples.row(args.reference_channel).transpose(),
                                   est.samples.row(args.estimate_channel).transpose(), args.max_lag);
    std::printf("snr_db=%.4f lag=%d\n", r.snr_db, r.lag);
    EmitSummary(args.shared.summary, {{"command", "eval"}, {"snr_db", r.snr_db}, {"lag", r.lag}});
}

int ExitCodeFor(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kNumericalFailure:
        case ErrorKind::kDegenerateBin:
        case ErrorKind::kDivergedTraining:
            return kExitNumericalFailure;
        default:
            return kExitInputError;
    }
}

}  // namespace

int Run(int argc, const char *const *argv) {
    CLI::App app{"mclpbeam: unsupervised MCLP-driven mask estimation and beamforming"};
    app.require_subcommand(1);

    EnhanceArgs enhance;
    CLI::App *enhance_cmd = app.add_subcommand("enhance", "enhance a multichannel WAV");
    enhance_cmd->add_option("input", enhance.input, "multichannel WAV")->required();
    enhance_cmd->add_option("-o,--output", enhance.output, "mono output WAV")->required();
    enhance_cmd->add_option("--mask", enhance.mask, "mask tensor file (mask-source=file)");
    enhance_cmd->add_option("--checkpoint", enhance.checkpoint, "mask net (mask-source=neural)");
    enhance_cmd->add_option("--mask-out", enhance.mask_out, "write the fused speech mask");
    enhance_cmd->add_option("--weights-out", enhance.weights_out, "write beamformer weights");
    AddSharedFlags(enhance_cmd, enhance.shared);

    TrainArgs train;
    CLI::App *train_cmd = app.add_subcommand("train-mask", "train the mask estimator");
    train_cmd->add_option("inputs", train.inputs, "multichannel WAVs")->required();
    train_cmd->add_option("-o,--output", train.output, "checkpoint path")->required();
    train_cmd->add_option("--epochs", train.epochs, "training epochs");
    train_cmd->add_option("--learning-rate", train.learning_rate, "SGD learning rate");
    AddSharedFlags(train_cmd, train.shared);

    SimulateArgs sim;
    CLI::App *sim_cmd = app.add_subcommand("simulate", "simulate a reverberant noisy scene");
    sim_cmd->add_option("source", sim.source, "mono source WAV");
    sim_cmd->add_option("--speech-like", sim.speech_like_seconds,
                        "use a synthetic voiced source of this many seconds");
    sim_cmd->add_option("--speech-shaped", sim.speech_shaped_seconds,
                        "use speech-shaped noise bursts of this many seconds");
    sim_cmd->add_option("--sample-rate", sim.sample_rate, "rate of synthetic sources");
    sim_cmd->add_option("-o,--output", sim.output_dir, "scene directory")->required();
    sim_cmd->add_option("--channels", sim.channels, "microphones");
    sim_cmd->add_option("--rir-length", sim.rir_length, "impulse response taps");
    sim_cmd->add_option("--t60", sim.t60, "reverberation time in seconds");
    sim_cmd->add_option("--reverb-level", sim.reverb_level_db, "tail energy re direct path, dB");
    sim_cmd->add_option("--snr", sim.snr, "SNR in dB, or inf");
    sim_cmd->add_option("--noise", sim.noise, "white | babble");
    AddSharedFlags(sim_cmd, sim.shared);

    EvalArgs eval;
    CLI::App *eval_cmd = app.add_subcommand("eval", "aligned SNR of an estimate");
    eval_cmd->add_option("reference", eval.reference, "reference WAV")->required();
    eval_cmd->add_option("estimate", eval.estimate, "estimate WAV")->required();
    eval_cmd->add_option("--reference-channel", eval.reference_channel);
    eval_cmd->add_option("--estimate-channel", eval.estimate_channel);
    eval_cmd->add_option("--max-lag", eval.max_lag, "alignment search range in samples");
    AddSharedFlags(eval_cmd, eval.shared);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitInputError;
    }

    try {
        if (*enhance_cmd) RunEnhance(enhance);
        else if (*train_cmd) RunTrain(train);
        else if (*sim_cmd) RunSimulate(sim);
        else if (*eval_cmd) RunEval(eval);
    } catch (const Error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ExitCodeFor(e.kind());
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInputError;
    }
    return kExitOk;
}

}  // namespace mclpbeam::cli
