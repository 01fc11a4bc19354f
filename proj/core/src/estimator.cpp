// estimator.cpp

#include "mclpbeam/estimator.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "mclpbeam/error.hpp"

namespace mclpbeam {

MaskNet MakeMaskNet(int num_bins, int context, const std::vector<int> &hidden, uint64_t seed,
                    double dropout_rate) {
    if (num_bins < 1 || context < 0)
        throw Error(ErrorKind::kConfiguration, "mask net needs >= 1 bin and context >= 0");
    std::vector<int> sizes{num_bins * (2 * context + 1)};
    for (int h : hidden) {
        if (h < 1) throw Error(ErrorKind::kConfiguration, "hidden layer widths must be >= 1");
        sizes.push_back(h);
    }
    sizes.push_back(num_bins);

    std::mt19937_64 rng(seed);
    MaskNet net;
    net.context = context;
    net.dropout_rate = dropout_rate;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const bool last = l + 2 == sizes.size();
        // He-uniform for ReLU layers, Glorot-uniform for the logistic output.
        const double limit = last ? std::sqrt(6.0 / (in + out)) : std::sqrt(6.0 / in);
        std::uniform_real_distribution<double> uni(-limit, limit);
        DenseLayer layer;
        layer.weight.resize(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) layer.weight(r, c) = uni(rng);
        layer.bias = Eigen::VectorXd::Zero(out);
        net.layers.push_back(std::move(layer));
    }
    net.input_mean = Eigen::VectorXd::Zero(sizes.front());
    net.input_scale = Eigen::VectorXd::Ones(sizes.front());
    return net;
}

void FitInputNormalization(MaskNet &net, const Eigen::MatrixXd &features) {
    if (features.cols() != net.input_size() || features.rows() == 0)
        throw Error(ErrorKind::kInvalidInput, "normalization features do not match the net");
    net.input_mean = features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = features.rowwise() - net.input_mean.transpose();
    const Eigen::VectorXd var = centered.cwiseAbs2().colwise().mean().transpose();
    net.input_scale = (var.array() + 1e-8).rsqrt().matrix();
}

Eigen::MatrixXd Featurize(const Spectrogram &spec, int channel, int context) {
    if (context < 0) throw Error(ErrorKind::kInvalidInput, "context must be >= 0");
    if (channel < 0 || channel >= spec.num_channels())
        throw Error(ErrorKind::kInvalidInput, "channel out of range");
    const int bins = spec.num_bins(), frames = spec.num_frames();
    const Eigen::MatrixXd logmag =
        (spec.channel(channel).cwiseAbs().array() + kFeatureFloor).log().matrix();  // F x T
    Eigen::MatrixXd out(frames, bins * (2 * context + 1));
    for (int n = 0; n < frames; ++n) {
        for (int j = -context; j <= context; ++j) {
            const int src = std::clamp(n + j, 0, frames - 1);
            out.block(n, (j + context) * bins, 1, bins) = logmag.col(src).transpose();
        }
    }
    return out;
}

namespace {

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // input of each layer (rows = examples)
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
    std::vector<Eigen::MatrixXd> drop;    // dropout multipliers of hidden layers
};

Eigen::MatrixXd RunForward(const MaskNet &net, const Eigen::MatrixXd &features,
                           std::mt19937_64 *rng, double dropout_rate, ForwardCache *cache) {
    if (net.layers.empty()) throw Error(ErrorKind::kInvalidInput, "mask net has no layers");
    if (features.cols() != net.input_size())
        throw Error(ErrorKind::kInvalidInput,
                    "feature width " + std::to_string(features.cols()) +
                        " does not match net input " + std::to_string(net.input_size()));
    Eigen::MatrixXd x = features;
    if (net.input_mean.size() == features.cols())
        x = ((x.rowwise() - net.input_mean.transpose()).array().rowwise() *
             net.input_scale.transpose().array())
                .matrix();

    const size_t num_layers = net.layers.size();
    std::bernoulli_distribution keep(1.0 - dropout_rate);
    for (size_t l = 0; l < num_layers; ++l) {
        const DenseLayer &layer = net.layers[l];
        Eigen::MatrixXd z = x * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (cache) {
            cache->inputs.push_back(x);
            cache->pre.push_back(z);
        }
        if (l + 1 == num_layers) return z;
        x = z.cwiseMax(0.0);
        if (rng && dropout_rate > 0.0) {
            Eigen::MatrixXd mult(x.rows(), x.cols());
            const double scale = 1.0 / (1.0 - dropout_rate);
            for (Eigen::Index c = 0; c < mult.cols(); ++c)
                for (Eigen::Index r = 0; r < mult.rows(); ++r) mult(r, c) = keep(*rng) ? scale : 0.0;
            x = x.cwiseProduct(mult);
            if (cache) cache->drop.push_back(std::move(mult));
        } else if (cache) {
            cache->drop.emplace_back();
        }
    }
    return x;  // unreachable
}

double Sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double MeanBce(const Eigen::MatrixXd &logits, const Eigen::MatrixXd &targets) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            const double z = logits(r, c);
            total += std::max(z, 0.0) - z * targets(r, c) + std::log1p(std::exp(-std::abs(z)));
        }
    return total / static_cast<double>(logits.size());
}

NetGradient Backward(const MaskNet &net, const ForwardCache &cache, const Eigen::MatrixXd &logits,
                     const Eigen::MatrixXd &targets) {
    const size_t num_layers = net.layers.size();
    NetGradient g;
    g.weight.resize(num_layers);
    g.bias.resize(num_layers);
    Eigen::MatrixXd delta = logits.unaryExpr([](double z) { return Sigmoid(z); }) - targets;
    delta /= static_cast<double>(logits.size());
    for (size_t l = num_layers; l-- > 0;) {
        g.weight[l] = delta.transpose() * cache.inputs[l];
        g.bias[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd back = delta * net.layers[l].weight;
        // Derivative through dropout and the ReLU of layer l - 1.
        const Eigen::MatrixXd &pre = cache.pre[l - 1];
        back = back.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
        if (cache.drop[l - 1].size() > 0) back = back.cwiseProduct(cache.drop[l - 1]);
        delta = std::move(back);
    }
    return g;
}

}  // namespace

Eigen::MatrixXd ForwardLogits(const MaskNet &net, const Eigen::MatrixXd &features) {
    return RunForward(net, features, nullptr, 0.0, nullptr);
}

MaskTensor Forward(const MaskNet &net, const Eigen::MatrixXd &features) {
    const Eigen::MatrixXd logits = ForwardLogits(net, features);
    MaskTensor out(static_cast<int>(logits.cols()), static_cast<int>(logits.rows()));
    out.channel(0) = logits.transpose().unaryExpr(
        [](double z) { return std::clamp(Sigmoid(z), 1e-12, 1.0 - 1e-12); });
    return out;
}

double Loss(const MaskNet &net, const Eigen::MatrixXd &features, const Eigen::MatrixXd &targets) {
    const Eigen::MatrixXd logits = ForwardLogits(net, features);
    if (targets.rows() != logits.rows() || targets.cols() != logits.cols())
        throw Error(ErrorKind::kInvalidInput, "targets do not match net output");
    return MeanBce(logits, targets);
}

NetGradient LossGradient(const MaskNet &net, const Eigen::MatrixXd &features,
                         const Eigen::MatrixXd &targets) {
    ForwardCache cache;
    const Eigen::MatrixXd logits = RunForward(net, features, nullptr, 0.0, &cache);
    if (targets.rows() != logits.rows() || targets.cols() != logits.cols())
        throw Error(ErrorKind::kInvalidInput, "targets do not match net output");
    return Backward(net, cache, logits, targets);
}

void ValidateTrainConfig(const TrainConfig &cfg) {
    if (!(cfg.learning_rate > 0.0))
        throw Error(ErrorKind::kConfiguration, "learning_rate must be positive");
    if (cfg.epochs < 1) throw Error(ErrorKind::kConfiguration, "epochs must be >= 1");
    if (cfg.batch_size < 1) throw Error(ErrorKind::kConfiguration, "batch_size must be >= 1");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw Error(ErrorKind::kConfiguration, "momentum must lie in [0, 1)");
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
        throw Error(ErrorKind::kConfiguration, "dropout_rate must lie in [0, 1)");
}

void MaskDataset::Append(const Spectrogram &spec, const MaskTensor &masks, int context) {
    if (masks.num_bins() != spec.num_bins() || masks.num_frames() != spec.num_frames() ||
        masks.num_channels() != spec.num_channels())
        throw Error(ErrorKind::kInvalidInput, "target masks do not match the spectrogram");
    const int frames = spec.num_frames();
    for (int m = 0; m < spec.num_channels(); ++m) {
        const Eigen::MatrixXd feats = Featurize(spec, m, context);
        if (features.size() != 0 && features.cols() != feats.cols())
            throw Error(ErrorKind::kInvalidInput, "feature width differs across utterances");
        const Eigen::Index base = features.rows();
        features.conservativeResize(base + frames, feats.cols());
        targets.conservativeResize(base + frames, spec.num_bins());
        features.bottomRows(frames) = feats;
        targets.bottomRows(frames) = masks.channel(m).transpose();
    }
}

TrainResult Train(MaskNet net, const MaskDataset &data, const TrainConfig &cfg) {
    ValidateTrainConfig(cfg);
    const int n = data.size();
    if (n < 1) throw Error(ErrorKind::kInvalidInput, "training set is empty");
    if (data.targets.rows() != n || data.targets.cols() != net.output_size())
        throw Error(ErrorKind::kInvalidInput, "targets do not match net output");
    if (((data.targets.array() != 0.0) && (data.targets.array() != 1.0)).any())
        throw Error(ErrorKind::kInvalidInput, "training targets must be 0 or 1");

    std::mt19937_64 rng(cfg.seed);
    NetGradient velocity;
    for (const auto &layer : net.layers) {
        velocity.weight.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
        velocity.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    result.initial_loss = Loss(net, data.features, data.targets);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates on raw engine output keeps the shuffle library-independent.
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % uint64_t(i + 1)]);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - start);
            Eigen::MatrixXd x(count, data.features.cols()), t(count, data.targets.cols());
            for (int i = 0; i < count; ++i) {
                x.row(i) = data.features.row(order[start + i]);
                t.row(i) = data.targets.row(order[start + i]);
            }
            ForwardCache cache;
            const Eigen::MatrixXd logits = RunForward(net, x, &rng, cfg.dropout_rate, &cache);
            const NetGradient g = Backward(net, cache, logits, t);
            for (size_t l = 0; l < net.layers.size(); ++l) {
                velocity.weight[l] = cfg.momentum * velocity.weight[l] - cfg.learning_rate * g.weight[l];
                velocity.bias[l] = cfg.momentum * velocity.bias[l] - cfg.learning_rate * g.bias[l];
                net.layers[l].weight += velocity.weight[l];
                net.layers[l].bias += velocity.bias[l];
            }
        }
        const double loss = Loss(net, data.features, data.targets);
        if (!std::isfinite(loss))
            throw Error(ErrorKind::kDivergedTraining,
                        "loss became non-finite at epoch " + std::to_string(epoch + 1));
        result.loss_trace.push_back(loss);
    }
    result.net = std::move(net);
    return result;
}

MaskTensor PredictMasks(const MaskNet &net, const Spectrogram &spec) {
    MaskTensor out(spec.num_bins(), spec.num_frames(), spec.num_channels());
    for (int m = 0; m < spec.num_channels(); ++m) {
        const MaskTensor single = Forward(net, Featurize(spec, m, net.context));
        if (single.num_bins() != spec.num_bins())
            throw Error(ErrorKind::kInvalidInput, "net output width does not match bin count");
        out.channel(m) = single.channel(0);
    }
    return out;
}

namespace {

constexpr char kNetMagic[4] = {'M', 'K', 'N', 'T'};
constexpr uint32_t kNetVersion = 1;

template <typename T>
void PutLe(std::vector<uint8_t> &out, T v) {
    for (size_t i = 0; i < sizeof(T); ++i) out.push_back(uint8_t(uint64_t(v) >> (8 * i)));
}
void PutDouble(std::vector<uint8_t> &out, double v) { PutLe(out, std::bit_cast<uint64_t>(v)); }

class ByteReader {
public:
    ByteReader(std::vector<uint8_t> bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}
    template <typename T>
    T Get() {
        if (pos_ + sizeof(T) > bytes_.size())
            throw Error(ErrorKind::kInvalidInput, path_ + ": truncated checkpoint");
        uint64_t v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    double GetDouble() { return std::bit_cast<double>(Get<uint64_t>()); }
    const std::vector<uint8_t> &bytes() const { return bytes_; }
    void Skip(size_t n) { pos_ += n; }

private:
    std::vector<uint8_t> bytes_;
    std::string path_;
    size_t pos_ = 0;
};

}  // namespace

void SaveMaskNet(const std::string &path, const MaskNet &net) {
    std::vector<uint8_t> out(kNetMagic, kNetMagic + 4);
    PutLe<uint32_t>(out, kNetVersion);
    PutLe<uint32_t>(out, static_cast<uint32_t>(net.context));
    PutDouble(out, net.dropout_rate);
    PutLe<uint32_t>(out, static_cast<uint32_t>(net.layers.size()));
    PutLe<uint64_t>(out, uint64_t(net.input_size()));
    for (const auto &layer : net.layers) PutLe<uint64_t>(out, uint64_t(layer.weight.rows()));
    const int in = net.input_size();
    for (int i = 0; i < in; ++i) PutDouble(out, net.input_mean.size() == in ? net.input_mean[i] : 0.0);
    for (int i = 0; i < in; ++i) PutDouble(out, net.input_scale.size() == in ? net.input_scale[i] : 1.0);
    for (const auto &layer : net.layers) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) PutDouble(out, layer.weight(r, c));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) PutDouble(out, layer.bias[r]);
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::kIo, "cannot write " + path);
    file.write(reinterpret_cast<const char *>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error(ErrorKind::kIo, "short write to " + path);
}

MaskNet LoadMaskNet(const std::string &path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::kIo, "cannot open " + path);
    ByteReader r(std::vector<uint8_t>((std::istreambuf_iterator<char>(file)),
                                      std::istreambuf_iterator<char>()),
                 path);
    if (r.bytes().size() < 4 || std::memcmp(r.bytes().data(), kNetMagic, 4) != 0)
        throw Error(ErrorKind::kInvalidInput, path + ": not a mask net checkpoint");
    r.Skip(4);
    if (r.Get<uint32_t>() != kNetVersion)
        throw Error(ErrorKind::kInvalidInput, path + ": unsupported checkpoint version");
    MaskNet net;
    net.context = static_cast<int>(r.Get<uint32_t>());
    net.dropout_rate = r.GetDouble();
    const uint32_t layers = r.Get<uint32_t>();
    if (layers == 0 || layers > 64)
        throw Error(ErrorKind::kInvalidInput, path + ": implausible layer count");
    std::vector<uint64_t> sizes(layers + 1);
    for (auto &s : sizes) {
        s = r.Get<uint64_t>();
        if (s == 0 || s > (1u << 24))
            throw Error(ErrorKind::kInvalidInput, path + ": implausible layer size");
    }
    const auto in = static_cast<Eigen::Index>(sizes[0]);
    net.input_mean.resize(in);
    net.input_scale.resize(in);
    for (Eigen::Index i = 0; i < in; ++i) net.input_mean[i] = r.GetDouble();
    for (Eigen::Index i = 0; i < in; ++i) net.input_scale[i] = r.GetDouble();
    for (uint32_t l = 0; l < layers; ++l) {
        DenseLayer layer;
        layer.weight.resize(Eigen::Index(sizes[l + 1]), Eigen::Index(sizes[l]));
        layer.bias.resize(Eigen::Index(sizes[l + 1]));
        for (Eigen::Index row = 0; row < layer.weight.rows(); ++row)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(row, c) = r.GetDouble();
        for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias[row] = r.GetDouble();
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace mclpbeam
