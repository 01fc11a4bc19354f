// estimator.hpp
// Feedforward speech-presence estimator trained on pseudo-target masks.
//
// Input: log magnitudes of 2c+1 consecutive frames of one channel (F values
// each, oldest first). Hidden layers use ReLU with inverted dropout during
// training; the output layer is a logistic unit per frequency bin.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mclpbeam/mask.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam {

inline constexpr double kFeatureFloor = 1e-6;

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

struct MaskNet {
    std::vector<DenseLayer> layers;
    // Feature standardization (x - mean) .* scale applied before layer 0.
    Eigen::VectorXd input_mean;
    Eigen::VectorXd input_scale;
    int context = 0;
    double dropout_rate = 0.5;

    int input_size() const { return layers.empty() ? 0 : int(layers.front().weight.cols()); }
    int output_size() const { return layers.empty() ? 0 : int(layers.back().weight.rows()); }
};

// Layer sizes: F(2c+1) -> hidden... -> F. He-uniform weights, zero biases.
MaskNet MakeMaskNet(int num_bins, int context, const std::vector<int> &hidden, uint64_t seed,
                    double dropout_rate = 0.5);

// Per-feature mean and inverse standard deviation from a feature matrix.
void FitInputNormalization(MaskNet &net, const Eigen::MatrixXd &features);

// T x F(2c+1); edge frames replicate the boundary frame.
Eigen::MatrixXd Featurize(const Spectrogram &spec, int channel, int context);

// Inference (no dropout). Returns F x T with values in (0, 1).
MaskTensor Forward(const MaskNet &net, const Eigen::MatrixXd &features);

// Logits before the output sigmoid, rows = examples.
Eigen::MatrixXd ForwardLogits(const MaskNet &net, const Eigen::MatrixXd &features);

// Mean binary cross-entropy over all outputs, dropout disabled.
double Loss(const MaskNet &net, const Eigen::MatrixXd &features, const Eigen::MatrixXd &targets);

struct NetGradient {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
};

// Gradient of Loss() with respect to every weight and bias.
NetGradient LossGradient(const MaskNet &net, const Eigen::MatrixXd &features,
                         const Eigen::MatrixXd &targets);

struct TrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.9;
    int epochs = 20;
    int batch_size = 64;
    uint64_t seed = 1;
    double dropout_rate = 0.5;
};

void ValidateTrainConfig(const TrainConfig &cfg);

// Rows are examples: features N x F(2c+1), targets N x F in {0, 1}.
struct MaskDataset {
    Eigen::MatrixXd features;
    Eigen::MatrixXd targets;

    int size() const { return static_cast<int>(features.rows()); }
    // Adds every frame of every channel of `spec` with targets from `masks`.
    void Append(const Spectrogram &spec, const MaskTensor &masks, int context);
};

struct TrainResult {
    MaskNet net;
    double initial_loss = 0.0;       // full-dataset loss before the first update
    std::vector<double> loss_trace;  // full-dataset loss after each epoch
};

// Mini-batch gradient descent with momentum on mean binary cross-entropy.
// Throws kDivergedTraining when the loss becomes non-finite.
TrainResult Train(MaskNet net, const MaskDataset &data, const TrainConfig &cfg);

// Featurize + Forward for every channel; returns F x T x M.
MaskTensor PredictMasks(const MaskNet &net, const Spectrogram &spec);

// Checkpoint layout (little-endian):
//   "MKNT", u32 version (1), u32 context, f64 dropout_rate, u32 num_layers,
//   u64 sizes[num_layers + 1], f64 input_mean[sizes[0]], f64 input_scale[sizes[0]],
//   then per layer f64 weight[out][in] (row-major) and f64 bias[out].
void SaveMaskNet(const std::string &path, const MaskNet &net);
MaskNet LoadMaskNet(const std::string &path);

}  // namespace mclpbeam
