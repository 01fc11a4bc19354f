// mclp.hpp
// Joint multi-channel linear prediction dereverberation and spatial filtering,
// estimated per frequency bin by maximum-likelihood coordinate updates.
//
// Model per bin k:   y(n) = a d1(n) + G^H phi(n)
// Output:            d1(n) = w^H (y(n) - G^H phi(n)),   w^H a = 1
// phi(n) stacks y^m(n - D - l) for m = 1..M, l = 1..L (channel-major).

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mclpbeam/numerics.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam {

struct MclpConfig {
    int taps = 10;      // L, lags per channel
    int delay = 2;      // D, frames skipped before the first lag
    int iterations = 3;
    // Variance floor: floor_scale * mean input power, unless variance_floor > 0
    // gives an absolute value.
    double floor_scale = 1e-8;
    double variance_floor = 0.0;
    double delta = kDefaultDelta;
    int reference_channel = 0;
    int context = 1;      // +-frames of the variance smoothing window
    int num_threads = 0;  // 0: hardware concurrency
};

void ValidateMclpConfig(const MclpConfig &cfg, int num_channels);

// LM x T matrix; row m*L + (l-1), column n holds y^m(k, n-D-l), zero when the
// lag falls before the first frame.
Eigen::MatrixXcd BuildDelayedStack(const Eigen::MatrixXcd &y, int taps, int delay);
Eigen::MatrixXcd BuildDelayedStack(const Spectrogram &spec, int k, const MclpConfig &cfg);

// G = R_pp^-1 R_py with R_pp = sum_n phi phi^H / gamma_n, R_py = sum_n phi y^H / gamma_n.
Eigen::MatrixXcd EstimatePredictionFilter(const Eigen::MatrixXcd &phi, const Eigen::MatrixXcd &y,
                                          const Eigen::VectorXd &gamma, double delta,
                                          std::optional<int> bin = std::nullopt);

// Reference column of the residual spatial covariance, scaled to a_ref = 1.
// Throws kDegenerateBin if |cov(ref, ref)| < 1e-12.
Eigen::VectorXcd EstimateRtf(const Eigen::MatrixXcd &residual, int reference_channel = 0);

// w = R^-1 a / (a^H R^-1 a), rescaled so that w^H a = 1 to rounding.
Eigen::VectorXcd EstimateSpatialFilter(const HermitianMatrix &r_rr, const Eigen::VectorXcd &a,
                                       double delta, std::optional<int> bin = std::nullopt);

// gamma_n = max(floor, mean |d1(n')|^2 over n' in [n - context, n + context]),
// the window truncated at the sequence ends.
Eigen::VectorXd UpdateVariance(const Eigen::VectorXcd &d1, double floor, int context);

// sum_n |d1(n)|^2 / gamma_n
double WeightedObjective(const Eigen::VectorXcd &d1, const Eigen::VectorXd &gamma);

struct MclpBinResult {
    Eigen::MatrixXcd G;  // LM x M
    Eigen::VectorXcd a;
    Eigen::VectorXcd w;
    Eigen::VectorXd gamma;  // variances after the final update
    Eigen::VectorXcd d1;
    std::vector<double> objective_trace;
};

// Runs cfg.iterations rounds of G -> residual -> a -> R_rr -> w -> d1 -> gamma
// on one bin's M x T observations.
MclpBinResult RunMclpBin(const Eigen::MatrixXcd &y, const MclpConfig &cfg, double floor,
                         std::optional<int> bin = std::nullopt);

struct MclpState {
    std::vector<Eigen::MatrixXcd> G;
    std::vector<Eigen::VectorXcd> a;
    std::vector<Eigen::VectorXcd> w;
    Eigen::MatrixXd gamma;  // F x T
    std::vector<std::vector<double>> objective_trace;  // per bin, per iteration
    double variance_floor = 0.0;
};

struct BinDiagnostic {
    int bin = 0;
    std::string message;
};

struct MclpResult {
    Spectrogram d1;  // M = 1
    MclpState state;
    std::vector<BinDiagnostic> diagnostics;  // bins that fell back to passthrough
};

// Bins that fail numerically fall back to reference-channel passthrough and are
// listed in diagnostics.
MclpResult RunMclp(const Spectrogram &spec, const MclpConfig &cfg);

// floor_scale * mean |y|^2 over the whole tensor (or the absolute override).
double VarianceFloor(const Spectrogram &spec, const MclpConfig &cfg);

}  // namespace mclpbeam
