// mclp.cpp

#include "mclpbeam/mclp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mclpbeam/error.hpp"
#include "mclpbeam/parallel.hpp"

namespace mclpbeam {

void ValidateMclpConfig(const MclpConfig &cfg, int num_channels) {
    if (cfg.taps < 1) throw Error(ErrorKind::kConfiguration, "mclp taps must be >= 1");
    if (cfg.delay < 1) throw Error(ErrorKind::kConfiguration, "mclp delay must be >= 1");
    if (cfg.iterations < 1)
        throw Error(ErrorKind::kConfiguration, "mclp iterations must be >= 1");
    if (!(cfg.floor_scale > 0.0) && !(cfg.variance_floor > 0.0))
        throw Error(ErrorKind::kConfiguration, "mclp variance floor must be positive");
    if (cfg.variance_floor < 0.0)
        throw Error(ErrorKind::kConfiguration, "mclp variance_floor must be >= 0");
    if (!(cfg.delta >= 0.0)) throw Error(ErrorKind::kConfiguration, "mclp delta must be >= 0");
    if (cfg.context < 0) throw Error(ErrorKind::kConfiguration, "mclp context must be >= 0");
    if (cfg.reference_channel < 0 || cfg.reference_channel >= num_channels)
        throw Error(ErrorKind::kConfiguration,
                    "reference channel " + std::to_string(cfg.reference_channel) +
                        " out of range for " + std::to_string(num_channels) + " channels");
}

Eigen::MatrixXcd BuildDelayedStack(const Eigen::MatrixXcd &y, int taps, int delay) {
    const int channels = static_cast<int>(y.rows());
    const int frames = static_cast<int>(y.cols());
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(channels * taps, frames);
    for (int m = 0; m < channels; ++m) {
        for (int l = 1; l <= taps; ++l) {
            const int shift = delay + l;
            if (shift >= frames) continue;
            phi.row(m * taps + l - 1).tail(frames - shift) = y.row(m).head(frames - shift);
        }
    }
    return phi;
}

Eigen::MatrixXcd BuildDelayedStack(const Spectrogram &spec, int k, const MclpConfig &cfg) {
    return BuildDelayedStack(spec.BinMatrix(k), cfg.taps, cfg.delay);
}

Eigen::MatrixXcd EstimatePredictionFilter(const Eigen::MatrixXcd &phi, const Eigen::MatrixXcd &y,
                                          const Eigen::VectorXd &gamma, double delta,
                                          std::optional<int> bin) {
    if (phi.cols() != y.cols() || gamma.size() != y.cols())
        throw Error(ErrorKind::kInvalidInput, "prediction filter inputs disagree on frame count",
                    bin);
    if ((gamma.array() <= 0.0).any())
        throw Error(ErrorKind::kInvalidInput, "variances must be positive", bin);
    const Eigen::MatrixXcd weighted = phi * gamma.cwiseInverse().asDiagonal();
    const HermitianMatrix r_pp(weighted * phi.adjoint());
    const Eigen::MatrixXcd r_py = weighted * y.adjoint();
    return SolveHermitian(r_pp, r_py, delta, bin);
}

Eigen::VectorXcd EstimateRtf(const Eigen::MatrixXcd &residual, int reference_channel) {
    const Eigen::Index frames = residual.cols();
    if (frames == 0 || reference_channel < 0 || reference_channel >= residual.rows())
        throw Error(ErrorKind::kInvalidInput, "residual is empty or reference out of range");
    // Reference column of (1/T) sum_n r r^H.
    Eigen::VectorXcd col = residual * residual.row(reference_channel).adjoint();
    col /= static_cast<double>(frames);
    const std::complex<double> pivot = col[reference_channel];
    if (std::abs(pivot) < 1e-12)
        throw Error(ErrorKind::kDegenerateBin, "reference residual power vanishes");
    Eigen::VectorXcd a = col / pivot;
    a[reference_channel] = 1.0;
    return a;
}

Eigen::VectorXcd EstimateSpatialFilter(const HermitianMatrix &r_rr, const Eigen::VectorXcd &a,
                                       double delta, std::optional<int> bin) {
    if (r_rr.dim() != a.size())
        throw Error(ErrorKind::kInvalidInput, "covariance and RTF sizes differ", bin);
    const Eigen::VectorXcd rinv_a = SolveHermitian(r_rr, a, delta, bin);
    const std::complex<double> denom = a.dot(rinv_a);  // a^H R^-1 a
    if (!(std::abs(denom) > 0.0) || !std::isfinite(std::abs(denom)))
        throw Error(ErrorKind::kNumericalFailure, "distortionless normalization vanished", bin);
    Eigen::VectorXcd w = rinv_a / denom.real();
    // Remove the rounding residue so that w^H a == 1.
    const std::complex<double> gain = w.dot(a);
    w /= std::conj(gain);
    return w;
}

Eigen::VectorXd UpdateVariance(const Eigen::VectorXcd &d1, double floor, int context) {
    const int frames = static_cast<int>(d1.size());
    Eigen::VectorXd power = d1.cwiseAbs2();
    Eigen::VectorXd gamma(frames);
    for (int n = 0; n < frames; ++n) {
        const int lo = std::max(0, n - context);
        const int hi = std::min(frames - 1, n + context);
        const double mean = power.segment(lo, hi - lo + 1).sum() / (hi - lo + 1);
        gamma[n] = std::max(floor, mean);
    }
    return gamma;
}

double WeightedObjective(const Eigen::VectorXcd &d1, const Eigen::VectorXd &gamma) {
    return (d1.cwiseAbs2().array() / gamma.array()).sum();
}

MclpBinResult RunMclpBin(const Eigen::MatrixXcd &y, const MclpConfig &cfg, double floor,
                         std::optional<int> bin) {
    const int channels = static_cast<int>(y.rows());
    const int frames = static_cast<int>(y.cols());
    const int ref = cfg.reference_channel;
    if (frames <= cfg.delay + cfg.taps)
        throw Error(ErrorKind::kInvalidInput,
                    "need more than D + L = " + std::to_string(cfg.delay + cfg.taps) +
                        " frames, got " + std::to_string(frames),
                    bin);

    const Eigen::MatrixXcd phi = BuildDelayedStack(y, cfg.taps, cfg.delay);
    const Eigen::VectorXcd e_ref = Eigen::VectorXcd::Unit(channels, ref);

    MclpBinResult out;
    out.gamma = y.row(ref).cwiseAbs2().transpose().cwiseMax(floor);
    out.G = Eigen::MatrixXcd::Zero(channels * cfg.taps, channels);
    out.a = e_ref;
    out.w = e_ref;

    for (int it = 0; it < cfg.iterations; ++it) {
        out.G = EstimatePredictionFilter(phi, y, out.gamma, cfg.delta, bin);
        const Eigen::MatrixXcd reverb = out.G.adjoint() * phi;
        const Eigen::MatrixXcd residual = y - reverb;
        try {
            out.a = EstimateRtf(residual, ref);
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::kDegenerateBin) throw;
            out.a = e_ref;
        }
        const HermitianMatrix r_rr(reverb * reverb.adjoint() / static_cast<double>(frames));
        out.w = EstimateSpatialFilter(r_rr, out.a, cfg.delta, bin);
        out.d1 = (out.w.adjoint() * residual).transpose();
        out.objective_trace.push_back(WeightedObjective(out.d1, out.gamma));
        out.gamma = UpdateVariance(out.d1, floor, cfg.context);
    }
    return out;
}

double VarianceFloor(const Spectrogram &spec, const MclpConfig &cfg) {
    if (cfg.variance_floor > 0.0) return cfg.variance_floor;
    double total = 0.0;
    double count = 0.0;
    for (int m = 0; m < spec.num_channels(); ++m) {
        total += spec.channel(m).cwiseAbs2().sum();
        count += static_cast<double>(spec.channel(m).size());
    }
    const double mean = count > 0.0 ? total / count : 0.0;
    return std::max(cfg.floor_scale * mean, std::numeric_limits<double>::min());
}

MclpResult RunMclp(const Spectrogram &spec, const MclpConfig &cfg) {
    ValidateMclpConfig(cfg, spec.num_channels());
    const int bins = spec.num_bins();
    const int frames = spec.num_frames();
    const int channels = spec.num_channels();
    if (frames <= cfg.delay + cfg.taps)
        throw Error(ErrorKind::kInvalidInput,
                    "need more than D + L = " + std::to_string(cfg.delay + cfg.taps) +
                        " frames, got " + std::to_string(frames));

    const double floor = VarianceFloor(spec, cfg);
    MclpResult result;
    result.d1 = Spectrogram(spec.config(), frames, 1);
    MclpState &state = result.state;
    state.variance_floor = floor;
    state.G.resize(bins);
    state.a.resize(bins);
    state.w.resize(bins);
    state.gamma = Eigen::MatrixXd::Zero(bins, frames);
    state.objective_trace.resize(bins);
    std::vector<std::optional<std::string>> failures(bins);

    ParallelFor(bins, cfg.num_threads, [&](int k) {
        const Eigen::MatrixXcd y = spec.BinMatrix(k);
        MclpBinResult r;
        try {
            r = RunMclpBin(y, cfg, floor, k);
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::kNumericalFailure) throw;
            failures[k] = e.what();
            const Eigen::VectorXcd e_ref = Eigen::VectorXcd::Unit(channels, cfg.reference_channel);
            r = MclpBinResult{};
            r.G = Eigen::MatrixXcd::Zero(channels * cfg.taps, channels);
            r.a = e_ref;
            r.w = e_ref;
            r.d1 = y.row(cfg.reference_channel).transpose();
            r.gamma = r.d1.cwiseAbs2().cwiseMax(floor);
        }
        result.d1.channel(0).row(k) = r.d1.transpose();
        state.G[k] = std::move(r.G);
        state.a[k] = std::move(r.a);
        state.w[k] = std::move(r.w);
        state.gamma.row(k) = r.gamma.transpose();
        state.objective_trace[k] = std::move(r.objective_trace);
    });

    for (int k = 0; k < bins; ++k)
        if (failures[k]) result.diagnostics.push_back({k, *failures[k]});
    return result;
}

}  // namespace mclpbeam
