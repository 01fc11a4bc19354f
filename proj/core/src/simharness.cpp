// simharness.cpp

#include "mclpbeam/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "fft.hpp"
#include "mclpbeam/error.hpp"
#include "mclpbeam/wav.hpp"

namespace mclpbeam {

const char *NoiseKindName(NoiseKind kind) {
    return kind == NoiseKind::kWhite ? "white" : "babble";
}

NoiseKind ParseNoiseKind(const std::string &name) {
    if (name == "white") return NoiseKind::kWhite;
    if (name == "babble") return NoiseKind::kBabble;
    throw Error(ErrorKind::kConfiguration, "unknown noise kind '" + name + "'");
}

void ValidateSceneConfig(const SceneConfig &cfg) {
    if (cfg.num_channels < 1) throw Error(ErrorKind::kConfiguration, "scene needs >= 1 channel");
    if (cfg.rir_length < 1) throw Error(ErrorKind::kConfiguration, "rir_length must be >= 1");
    if (cfg.rir_length > 1 && !(cfg.decay_t60 > 0.0))
        throw Error(ErrorKind::kConfiguration, "decay_t60 must be positive");
    if (std::isnan(cfg.snr_db) || cfg.snr_db == -std::numeric_limits<double>::infinity())
        throw Error(ErrorKind::kConfiguration, "snr_db must be finite or +inf");
    if (!cfg.direct_delays.empty() && int(cfg.direct_delays.size()) != cfg.num_channels)
        throw Error(ErrorKind::kConfiguration, "direct_delays must list one delay per channel");
    if (!cfg.gains.empty() && int(cfg.gains.size()) != cfg.num_channels)
        throw Error(ErrorKind::kConfiguration, "gains must list one gain per channel");
    for (int d : cfg.direct_delays)
        if (d < 0) throw Error(ErrorKind::kConfiguration, "direct delays must be >= 0");
}

namespace {

Eigen::VectorXd FftConvolve(const Eigen::VectorXd &x, const Eigen::VectorXd &h, int out_len) {
    const int full = static_cast<int>(x.size() + h.size()) - 1;
    int size = 1;
    while (size < full) size <<= 1;
    detail::RealFft fft(size);
    std::vector<double> buf(size, 0.0), out(size);
    std::vector<std::complex<double>> xf(fft.num_bins()), hf(fft.num_bins());
    std::copy(x.data(), x.data() + x.size(), buf.begin());
    fft.Forward(buf, xf);
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(h.data(), h.data() + h.size(), buf.begin());
    fft.Forward(buf, hf);
    for (size_t k = 0; k < xf.size(); ++k) xf[k] *= hf[k];
    fft.Inverse(xf, out);
    Eigen::VectorXd y(out_len);
    for (int t = 0; t < out_len; ++t) y[t] = t < size ? out[t] / size : 0.0;
    return y;
}

// Two-pole resonator y[n] = g x[n] + 2 r cos(theta) y[n-1] - r^2 y[n-2].
class Resonator {
public:
    Resonator(double freq, double bandwidth, double fs) {
        const double r = std::exp(-std::numbers::pi * bandwidth / fs);
        a1_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
        a2_ = -r * r;
        gain_ = 1.0 - r;
    }
    double operator()(double x) {
        const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
        y2_ = y1_;
        y1_ = y;
        return y;
    }

private:
    double a1_, a2_, gain_;
    double y1_ = 0.0, y2_ = 0.0;
};

Eigen::VectorXd SpeechLike(int length, double fs, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(length);
    int t = 0;
    while (t < length) {
        const double pick = uni(rng);
        if (pick < 0.25) {  // pause
            t += static_cast<int>(range(0.08, 0.25) * fs);
            continue;
        }
        const bool voiced = pick >= 0.4;
        const int dur = std::min(length - t, static_cast<int>(
                                                 (voiced ? range(0.12, 0.30) : range(0.05, 0.15)) * fs));
        const double amp = voiced ? range(0.4, 1.0) : range(0.08, 0.25);
        if (voiced) {
            Resonator f1(range(300, 900), 80, fs), f2(range(900, 2500), 120, fs),
                f3(range(2400, 3400), 160, fs);
            const double f0_start = range(100, 220);
            const double f0_end = f0_start * range(0.8, 1.2);
            double phase = 0.0;
            for (int i = 0; i < dur; ++i) {
                const double f0 = f0_start + (f0_end - f0_start) * i / dur;
                phase += f0 / fs;
                double excitation = 0.02 * gauss(rng);
                if (phase >= 1.0) {
                    phase -= 1.0;
                    excitation += 1.0;
                }
                const double env = std::sin(std::numbers::pi * (i + 0.5) / dur);
                x[t + i] += amp * env * 20.0 * f3(f2(f1(excitation)));
            }
        } else {
            Resonator hiss(range(3000, 5000), 1500, fs);
            double prev = 0.0;
            for (int i = 0; i < dur; ++i) {
                const double w = gauss(rng);
                const double env = std::sin(std::numbers::pi * (i + 0.5) / dur);
                x[t + i] += amp * env * 4.0 * hiss(w - 0.9 * prev);
                prev = w;
            }
        }
        t += dur;
    }
    const double rms = std::sqrt(x.squaredNorm() / std::max(1, length));
    if (rms > 0.0) x *= 0.1 / rms;
    return x;
}

Eigen::VectorXd SpeechShaped(int length, double fs, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    // One-pole lowpass at 300 Hz after a DC-blocking difference.
    const double pole = std::exp(-2.0 * std::numbers::pi * 300.0 / fs);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(length);
    double lp = 0.0, prev = 0.0;
    int t = 0;
    while (t < length) {
        if (uni(rng) < 0.25) {
            t += static_cast<int>(range(0.08, 0.25) * fs);
            continue;
        }
        const int dur = std::min(length - t, static_cast<int>(range(0.08, 0.30) * fs));
        const double amp = range(0.2, 1.0);
        for (int i = 0; i < dur; ++i) {
            const double w = gauss(rng);
            lp = pole * lp + (w - 0.95 * prev);
            prev = w;
            x[t + i] = amp * std::sin(std::numbers::pi * (i + 0.5) / dur) * lp;
        }
        t += dur;
    }
    const double rms = std::sqrt(x.squaredNorm() / std::max(1, length));
    if (rms > 0.0) x *= 0.1 / rms;
    return x;
}

}  // namespace

AudioBuffer SpeechShapedSource(double seconds, double sample_rate, uint64_t seed) {
    AudioBuffer out;
    out.sample_rate = sample_rate;
    const int length = static_cast<int>(std::lround(seconds * sample_rate));
    out.samples = SpeechShaped(length, sample_rate, seed).transpose();
    return out;
}

AudioBuffer SpeechLikeSource(double seconds, double sample_rate, uint64_t seed) {
    AudioBuffer out;
    out.sample_rate = sample_rate;
    const int length = static_cast<int>(std::lround(seconds * sample_rate));
    out.samples = SpeechLike(length, sample_rate, seed).transpose();
    return out;
}

SceneTruth SimulateScene(const AudioBuffer &source, const SceneConfig &cfg) {
    ValidateSceneConfig(cfg);
    if (source.num_channels() != 1)
        throw Error(ErrorKind::kInvalidInput, "scene source must be single-channel");
    if (source.samples.cwiseAbs().maxCoeff() == 0.0)
        throw Error(ErrorKind::kInvalidInput, "scene source is all zeros");

    const int channels = cfg.num_channels;
    const int length = source.num_samples();
    const double fs = source.sample_rate;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SceneTruth truth;
    truth.config = cfg;
    truth.dry = source;
    truth.direct.sample_rate = truth.image.sample_rate = truth.noise.sample_rate =
        truth.mixed.sample_rate = fs;
    truth.direct.samples = Eigen::MatrixXd::Zero(channels, length);
    truth.image.samples.resize(channels, length);
    truth.noise.samples.resize(channels, length);

    const Eigen::VectorXd x = source.samples.row(0).transpose();
    for (int m = 0; m < channels; ++m) {
        const int delay = cfg.direct_delays.empty() ? 3 * m : cfg.direct_delays[m];
        const double gain = cfg.gains.empty() ? 1.0 : cfg.gains[m];
        Eigen::VectorXd h = Eigen::VectorXd::Zero(delay + cfg.rir_length);
        h[delay] = gain;
        if (delay < length)
            truth.direct.samples.row(m).tail(length - delay) =
                gain * x.head(length - delay).transpose();
        if (cfg.rir_length > 1) {
            Eigen::VectorXd tail(cfg.rir_length - 1);
            for (int t = 1; t < cfg.rir_length; ++t)
                tail[t - 1] = gauss(rng) * std::exp(-6.9 * t / (cfg.decay_t60 * fs));
            const double energy = tail.squaredNorm();
            if (energy > 0.0)
                tail *= std::sqrt(gain * gain * std::pow(10.0, cfg.reverb_level_db / 10.0) / energy);
            h.segment(delay + 1, cfg.rir_length - 1) = tail;
        }
        truth.image.samples.row(m) = FftConvolve(x, h, length).transpose();
        truth.rirs.push_back(std::move(h));
    }

    for (int m = 0; m < channels; ++m) {
        Eigen::VectorXd v(length);
        if (!std::isfinite(cfg.snr_db)) {
            v.setZero();
        } else {
            if (cfg.noise_kind == NoiseKind::kWhite) {
                for (int t = 0; t < length; ++t) v[t] = gauss(rng);
            } else {
                v.setZero();
                for (int talker = 0; talker < 6; ++talker)
                    v += SpeechLike(length, fs, rng());
            }
            const double signal = truth.image.samples.row(m).squaredNorm();
            const double power = v.squaredNorm();
            v *= power > 0.0 ? std::sqrt(signal / (power * std::pow(10.0, cfg.snr_db / 10.0))) : 0.0;
        }
        truth.noise.samples.row(m) = v.transpose();
    }
    // On a common 2^-40 grid, sums of audio-range samples are exact, so
    // mixed - image - noise == 0 holds bit-for-bit.
    const auto snap = [](double v) { return std::ldexp(std::nearbyint(std::ldexp(v, 40)), -40); };
    truth.image.samples = truth.image.samples.unaryExpr(snap);
    truth.noise.samples = truth.noise.samples.unaryExpr(snap);
    truth.mixed.samples = truth.image.samples + truth.noise.samples;
    return truth;
}

SnrResult AlignedSnr(const Eigen::VectorXd &reference, const Eigen::VectorXd &estimate,
                     int max_lag) {
    if (reference.squaredNorm() == 0.0)
        throw Error(ErrorKind::kInvalidInput, "SNR reference is all zeros");
    const int nr = static_cast<int>(reference.size());
    const int ne = static_cast<int>(estimate.size());

    auto overlap = [&](int lag, int &begin, int &end) {
        begin = std::max(0, -lag);
        end = std::min(nr, ne - lag);
    };
    int best_lag = 0;
    double best = -1.0;
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        int b, e;
        overlap(lag, b, e);
        if (e <= b) continue;
        const double c = std::abs(reference.segment(b, e - b).dot(estimate.segment(b + lag, e - b)));
        if (c > best) {
            best = c;
            best_lag = lag;
        }
    }

    int b, e;
    overlap(best_lag, b, e);
    SnrResult out;
    out.lag = best_lag;
    if (e <= b) return out;
    const Eigen::VectorXd r = reference.segment(b, e - b);
    const Eigen::VectorXd est = estimate.segment(b + best_lag, e - b);
    const double energy = r.squaredNorm();
    if (energy == 0.0) throw Error(ErrorKind::kInvalidInput, "SNR reference is zero on the overlap");
    const Eigen::VectorXd target = (r.dot(est) / energy) * r;
    const double sig = target.squaredNorm();
    const double err = (est - target).squaredNorm();
    if (sig == 0.0)
        out.snr_db = -kSnrCapDb;
    else
        out.snr_db = err > 0.0 ? std::clamp(10.0 * std::log10(sig / err), -kSnrCapDb, kSnrCapDb)
                               : kSnrCapDb;
    return out;
}

double SnrDb(const AudioBuffer &reference, const AudioBuffer &estimate, int max_lag) {
    if (reference.num_channels() < 1 || estimate.num_channels() < 1)
        throw Error(ErrorKind::kInvalidInput, "SNR needs non-empty audio");
    return AlignedSnr(reference.samples.row(0).transpose(), estimate.samples.row(0).transpose(),
                      max_lag)
        .snr_db;
}

std::vector<double> InputSnrs(const SceneTruth &truth) {
    std::vector<double> out;
    for (int m = 0; m < truth.mixed.num_channels(); ++m)
        out.push_back(AlignedSnr(truth.direct.samples.row(m).transpose(),
                                 truth.mixed.samples.row(m).transpose())
                          .snr_db);
    return out;
}

double BeamformedSnr(const SceneTruth &truth, const BeamformerWeights &weights,
                     const StftConfig &stft) {
    const int length = truth.mixed.num_samples();
    const AudioBuffer direct =
        SynthesizePadded(Apply(AnalyzePadded(truth.direct, stft), weights), stft, length);
    const AudioBuffer mixed =
        SynthesizePadded(Apply(AnalyzePadded(truth.mixed, stft), weights), stft, length);
    return AlignedSnr(direct.samples.row(0).transpose(), mixed.samples.row(0).transpose()).snr_db;
}

MaskTensor OracleIrm(const SceneTruth &truth, const IrmConfig &irm, const StftConfig &stft) {
    const Spectrogram direct = AnalyzePadded(truth.direct, stft);
    const Spectrogram mixed = AnalyzePadded(truth.mixed, stft);
    return ThresholdRatioMasks(direct, mixed, irm);
}

void ExportScene(const std::string &dir, const SceneTruth &truth) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir + ": " + ec.message());
    const fs::path root(dir);
    WriteWav((root / "mixture.wav").string(), truth.mixed);
    WriteWav((root / "direct.wav").string(), truth.direct);
    WriteWav((root / "image.wav").string(), truth.image);
    WriteWav((root / "noise.wav").string(), truth.noise);
    WriteWav((root / "dry.wav").string(), truth.dry);

    const SceneConfig &c = truth.config;
    std::ostringstream os;
    os << "# scene truth manifest\n";
    os << "num_channels=" << c.num_channels << "\n";
    os << "rir_length=" << c.rir_length << "\n";
    os << "decay_t60=" << c.decay_t60 << "\n";
    os << "reverb_level_db=" << c.reverb_level_db << "\n";
    os << "noise_kind=" << NoiseKindName(c.noise_kind) << "\n";
    os << "snr_db=" << c.snr_db << "\n";
    os << "seed=" << c.seed << "\n";
    os << "sample_rate=" << truth.mixed.sample_rate << "\n";
    os << "num_samples=" << truth.mixed.num_samples() << "\n";
    os << "file.mixture=mixture.wav\n";
    os << "file.image=image.wav\n";
    os << "file.noise=noise.wav\n";
    os << "file.dry=dry.wav\n";
    std::ofstream out(root / "truth.txt");
    if (!out) throw Error(ErrorKind::kIo, "cannot write truth manifest in " + dir);
    out << os.str();
}

}  // namespace mclpbeam
