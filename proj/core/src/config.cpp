// config.cpp

#include "mclpbeam/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mclpbeam/error.hpp"

namespace mclpbeam {

const char *MaskSourceName(MaskSource source) {
    switch (source) {
        case MaskSource::kMclpDirect: return "mclp-direct";
        case MaskSource::kNeural: return "neural";
        case MaskSource::kFile: return "file";
    }
    return "?";
}

MaskSource ParseMaskSource(const std::string &name) {
    if (name == "mclp-direct") return MaskSource::kMclpDirect;
    if (name == "neural") return MaskSource::kNeural;
    if (name == "file") return MaskSource::kFile;
    throw Error(ErrorKind::kConfiguration, "unknown mask source '" + name + "'");
}

namespace {

std::string Trim(const std::string &s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(const std::string &key, const std::string &value) {
    T out{};
    const char *end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || value.empty())
        throw Error(ErrorKind::kConfiguration, "bad value '" + value + "' for " + key);
    return out;
}

double ParseDouble(const std::string &key, const std::string &value) {
    return ParseNumber<double>(key, value);
}

std::vector<int> ParseIntList(const std::string &key, const std::string &value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(ParseNumber<int>(key, Trim(item)));
    return out;
}

std::string JoinInts(const std::vector<int> &values) {
    std::string out;
    for (size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
    return out;
}

std::string FormatDouble(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Field {
    std::function<void(PipelineConfig &, const std::string &, const std::string &)> set;
    std::function<std::string(const PipelineConfig &)> get;
};

template <typename T>
Field IntField(T PipelineConfig::*section, int T::*member) {
    return {[=](PipelineConfig &c, const std::string &k, const std::string &v) {
                (c.*section).*member = ParseNumber<int>(k, v);
            },
            [=](const PipelineConfig &c) { return std::to_string((c.*section).*member); }};
}

template <typename T>
Field DoubleField(T PipelineConfig::*section, double T::*member) {
    return {[=](PipelineConfig &c, const std::string &k, const std::string &v) {
                (c.*section).*member = ParseDouble(k, v);
            },
            [=](const PipelineConfig &c) { return FormatDouble((c.*section).*member); }};
}

const std::map<std::string, Field> &Fields() {
    static const std::map<std::string, Field> fields = [] {
        using C = PipelineConfig;
        std::map<std::string, Field> f;
        f["stft.fft_size"] = IntField(&C::stft, &StftConfig::fft_size);
        f["stft.hop"] = IntField(&C::stft, &StftConfig::hop);
        f["stft.sample_rate"] = DoubleField(&C::stft, &StftConfig::sample_rate);
        f["stft.window"] = {[](C &c, const std::string &, const std::string &v) {
                                c.stft.window = ParseWindow(v);
                            },
                            [](const C &c) { return std::string(WindowName(c.stft.window)); }};

        f["mclp.taps"] = IntField(&C::mclp, &MclpConfig::taps);
        f["mclp.delay"] = IntField(&C::mclp, &MclpConfig::delay);
        f["mclp.iterations"] = IntField(&C::mclp, &MclpConfig::iterations);
        f["mclp.floor_scale"] = DoubleField(&C::mclp, &MclpConfig::floor_scale);
        f["mclp.variance_floor"] = DoubleField(&C::mclp, &MclpConfig::variance_floor);
        f["mclp.delta"] = DoubleField(&C::mclp, &MclpConfig::delta);
        f["mclp.reference_channel"] = IntField(&C::mclp, &MclpConfig::reference_channel);
        f["mclp.context"] = IntField(&C::mclp, &MclpConfig::context);
        f["mclp.num_threads"] = IntField(&C::mclp, &MclpConfig::num_threads);

        f["irm.threshold_voiced_db"] = DoubleField(&C::irm, &IrmConfig::threshold_voiced_db);
        f["irm.threshold_unvoiced_db"] = DoubleField(&C::irm, &IrmConfig::threshold_unvoiced_db);
        f["irm.vad_energy_quantile"] = DoubleField(&C::irm, &IrmConfig::vad_energy_quantile);

        f["beamformer"] = {[](C &c, const std::string &, const std::string &v) {
                               c.beamformer = ParseBeamformer(v);
                           },
                           [](const C &c) { return std::string(BeamformerName(c.beamformer)); }};
        f["beamform.delta"] = {[](C &c, const std::string &k, const std::string &v) {
                                   c.beamform_delta = ParseDouble(k, v);
                               },
                               [](const C &c) { return FormatDouble(c.beamform_delta); }};
        f["beamform.steering"] = {
            [](C &c, const std::string &k, const std::string &v) {
                if (v == "psd") c.steering = SteeringSource::kPsd;
                else if (v == "rtf") c.steering = SteeringSource::kRtf;
                else throw Error(ErrorKind::kConfiguration, "bad value '" + v + "' for " + k);
            },
            [](const C &c) { return std::string(c.steering == SteeringSource::kPsd ? "psd" : "rtf"); }};
        f["mask_source"] = {[](C &c, const std::string &, const std::string &v) {
                                c.mask_source = ParseMaskSource(v);
                            },
                            [](const C &c) { return std::string(MaskSourceName(c.mask_source)); }};

        f["train.learning_rate"] = DoubleField(&C::train, &TrainConfig::learning_rate);
        f["train.momentum"] = DoubleField(&C::train, &TrainConfig::momentum);
        f["train.epochs"] = IntField(&C::train, &TrainConfig::epochs);
        f["train.batch_size"] = IntField(&C::train, &TrainConfig::batch_size);
        f["train.dropout_rate"] = DoubleField(&C::train, &TrainConfig::dropout_rate);

        f["estimator.context"] = {[](C &c, const std::string &k, const std::string &v) {
                                      c.estimator_context = ParseNumber<int>(k, v);
                                  },
                                  [](const C &c) { return std::to_string(c.estimator_context); }};
        f["estimator.hidden"] = {[](C &c, const std::string &k, const std::string &v) {
                                     c.estimator_hidden = ParseIntList(k, v);
                                 },
                                 [](const C &c) { return JoinInts(c.estimator_hidden); }};
        f["seed"] = {[](C &c, const std::string &k, const std::string &v) {
                         c.seed = ParseNumber<uint64_t>(k, v);
                         c.train.seed = c.seed;
                     },
                     [](const C &c) { return std::to_string(c.seed); }};

        auto path = [](std::string C::*member) -> Field {
            return {[=](C &c, const std::string &, const std::string &v) { c.*member = v; },
                    [=](const C &c) { return c.*member; }};
        };
        f["paths.mask"] = path(&C::mask_path);
        f["paths.checkpoint"] = path(&C::checkpoint_path);
        f["paths.mask_out"] = path(&C::mask_out_path);
        f["paths.weights_out"] = path(&C::weights_out_path);
        return f;
    }();
    return fields;
}

}  // namespace

void ApplySetting(PipelineConfig &cfg, const std::string &key, const std::string &value) {
    const auto it = Fields().find(Trim(key));
    if (it == Fields().end()) throw Error(ErrorKind::kConfiguration, "unknown key '" + key + "'");
    it->second.set(cfg, it->first, Trim(value));
}

void LoadConfigFile(const std::string &path, PipelineConfig &cfg) {
    std::ifstream file(path);
    if (!file) throw Error(ErrorKind::kIo, "cannot open config " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = Trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::kConfiguration,
                        path + ":" + std::to_string(line_no) + ": expected key = value");
        try {
            ApplySetting(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error &e) {
            throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void ValidatePipelineConfig(const PipelineConfig &cfg) {
    ValidateStftConfig(cfg.stft, true);
    ValidateIrmConfig(cfg.irm);
    ValidateTrainConfig(cfg.train);
    if (cfg.mclp.taps < 1 || cfg.mclp.delay < 1 || cfg.mclp.iterations < 1)
        throw Error(ErrorKind::kConfiguration, "mclp needs taps >= 1, delay >= 1, iterations >= 1");
    if (cfg.estimator_context < 0)
        throw Error(ErrorKind::kConfiguration, "estimator.context must be >= 0");
    if (!(cfg.beamform_delta >= 0.0))
        throw Error(ErrorKind::kConfiguration, "beamform.delta must be >= 0");
    if (cfg.mask_source == MaskSource::kFile && cfg.mask_path.empty())
        throw Error(ErrorKind::kConfiguration, "mask_source=file needs paths.mask");
    if (cfg.mask_source == MaskSource::kNeural && cfg.checkpoint_path.empty())
        throw Error(ErrorKind::kConfiguration, "mask_source=neural needs paths.checkpoint");
}

std::string DumpConfig(const PipelineConfig &cfg) {
    std::string out;
    for (const auto &[key, field] : Fields()) out += key + " = " + field.get(cfg) + "\n";
    return out;
}

}  // namespace mclpbeam
