// test_util.hpp
// Small helpers shared by the unit tests.

#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "mclpbeam/numerics.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam::testing {

using cd = std::complex<double>;

inline Eigen::MatrixXcd RandomComplex(int rows, int cols, std::mt19937_64 &rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd a(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) a(r, c) = cd(g(rng), g(rng));
    return a;
}

// B B^H + shift I with B square Gaussian: Hermitian positive definite.
inline HermitianMatrix RandomHpd(int dim, std::mt19937_64 &rng, double shift = 0.1) {
    const Eigen::MatrixXcd b = RandomComplex(dim, dim, rng);
    return HermitianMatrix(b * b.adjoint() + shift * Eigen::MatrixXcd::Identity(dim, dim));
}

inline AudioBuffer RandomAudio(int channels, int samples, std::mt19937_64 &rng,
                               double sample_rate = 16000.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    AudioBuffer a;
    a.sample_rate = sample_rate;
    a.samples.resize(channels, samples);
    for (int c = 0; c < samples; ++c)
        for (int r = 0; r < channels; ++r) a.samples(r, c) = g(rng);
    return a;
}

// 1 - |<u, v>| / (|u| |v|)
inline double CosineDistance(const Eigen::VectorXcd &u, const Eigen::VectorXcd &v) {
    return 1.0 - std::abs(u.dot(v)) / (u.norm() * v.norm());
}

inline double RelRms(const Eigen::VectorXd &ref, const Eigen::VectorXd &est) {
    return (ref - est).norm() / ref.norm();
}

}  // namespace mclpbeam::testing
