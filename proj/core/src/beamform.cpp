// beamform.cpp

#include "mclpbeam/beamform.hpp"

#include <cmath>

#include "mclpbeam/error.hpp"
#include "mclpbeam/tensor_io.hpp"

namespace mclpbeam {

const char *BeamformerName(BeamformerKind kind) {
    return kind == BeamformerKind::kGev ? "gev" : "mvdr";
}

BeamformerKind ParseBeamformer(const std::string &name) {
    if (name == "gev") return BeamformerKind::kGev;
    if (name == "mvdr") return BeamformerKind::kMvdr;
    throw Error(ErrorKind::kConfiguration, "unknown beamformer '" + name + "'");
}

namespace {

bool SamePsd(const HermitianMatrix &a, const HermitianMatrix &b) {
    const double scale = std::max(a.matrix().norm(), b.matrix().norm());
    return (a.matrix() - b.matrix()).norm() <= 1e-12 * scale;
}

}  // namespace

BeamformerWeights GevWeights(const PsdSet &xx, const PsdSet &vv, double delta,
                             int reference_channel) {
    if (xx.size() != vv.size())
        throw Error(ErrorKind::kInvalidInput, "speech and noise PSD sets differ in bin count");
    BeamformerWeights out;
    out.kind = BeamformerKind::kGev;
    out.w.resize(xx.size());
    out.lambda.assign(xx.size(), 0.0);
    for (size_t k = 0; k < xx.size(); ++k) {
        const int bin = static_cast<int>(k);
        const int dim = xx[k].dim();
        auto fallback = [&] {
            out.w[k] = Eigen::VectorXcd::Unit(dim, reference_channel);
            out.lambda[k] = 1.0;
            out.fallback_bins.push_back(bin);
        };
        if (SamePsd(xx[k], vv[k])) {
            fallback();
            continue;
        }
        try {
            const GeneralizedEigenpair pair = MaxGeneralizedEigvec(xx[k], vv[k], delta, bin);
            out.w[k] = pair.vector;
            out.lambda[k] = pair.value;
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::kNumericalFailure) throw;
            fallback();
        }
    }
    return out;
}

BeamformerWeights MvdrWeights(const PsdSet &vv, const std::vector<Eigen::VectorXcd> &steering,
                              double delta) {
    if (vv.size() != steering.size())
        throw Error(ErrorKind::kInvalidInput, "noise PSD and steering differ in bin count");
    BeamformerWeights out;
    out.kind = BeamformerKind::kMvdr;
    out.w.resize(vv.size());
    out.steering = steering;
    for (size_t k = 0; k < vv.size(); ++k) {
        const int bin = static_cast<int>(k);
        const Eigen::VectorXcd &d = steering[k];
        if (d.size() != vv[k].dim())
            throw Error(ErrorKind::kInvalidInput, "steering vector length mismatch", bin);
        if (d.norm() == 0.0)
            throw Error(ErrorKind::kInvalidInput, "steering vector is zero", bin);
        const Eigen::VectorXcd vinv_d = SolveHermitian(vv[k], d, delta, bin);
        const std::complex<double> denom = d.dot(vinv_d);  // d^H vv^-1 d
        if (!(std::abs(denom) > 0.0) || !std::isfinite(std::abs(denom)))
            throw Error(ErrorKind::kNumericalFailure, "distortionless normalization vanished", bin);
        Eigen::VectorXcd w = vinv_d / denom.real();
        w /= std::conj(w.dot(d));  // w^H d == 1 to rounding
        out.w[k] = std::move(w);
    }
    return out;
}

std::vector<Eigen::VectorXcd> SteeringFromPsd(const PsdSet &xx) {
    std::vector<Eigen::VectorXcd> out;
    out.reserve(xx.size());
    for (size_t k = 0; k < xx.size(); ++k) {
        const int dim = xx[k].dim();
        const Eigen::VectorXcd e1 = Eigen::VectorXcd::Unit(dim, 0);
        if (xx[k].matrix().norm() == 0.0 || !xx[k].matrix().allFinite()) {
            out.push_back(e1);
            continue;
        }
        try {
            const GeneralizedEigenpair pair = MaxGeneralizedEigvec(
                xx[k], HermitianMatrix::Identity(dim), 0.0, static_cast<int>(k));
            const std::complex<double> first = pair.vector[0];
            if (std::abs(first) < 1e-12) {
                out.push_back(e1);
            } else {
                out.push_back(pair.vector / first);
            }
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::kNumericalFailure) throw;
            out.push_back(e1);
        }
    }
    return out;
}

Spectrogram Apply(const Spectrogram &spec, const BeamformerWeights &weights) {
    if (weights.num_bins() != spec.num_bins())
        throw Error(ErrorKind::kInvalidInput, "weights and spectrogram differ in bin count");
    Spectrogram out(spec.config(), spec.num_frames(), 1);
    for (int k = 0; k < spec.num_bins(); ++k) {
        if (weights.w[k].size() != spec.num_channels())
            throw Error(ErrorKind::kInvalidInput, "weight vector length differs from channel count",
                        k);
        for (int m = 0; m < spec.num_channels(); ++m)
            out.channel(0).row(k) += std::conj(weights.w[k][m]) * spec.channel(m).row(k);
    }
    return out;
}

void WriteWeights(const std::string &path, const BeamformerWeights &weights) {
    Tensor t;
    t.dtype = TensorDtype::kComplex128;
    const uint64_t channels = weights.w.empty() ? 0 : weights.w[0].size();
    t.dims = {uint64_t(weights.num_bins()), channels};
    for (const auto &w : weights.w)
        for (Eigen::Index m = 0; m < w.size(); ++m) t.complex.push_back(w[m]);
    WriteTensor(path, t);
}

}  // namespace mclpbeam
