// beamform.hpp
// GEV and MVDR spatial filters from per-bin PSD matrices.
//
// Conjugate convention: z(k, n) = w(k)^H y(k, n) = sum_m conj(w_m) y^m(k, n).

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mclpbeam/mask.hpp"
#include "mclpbeam/numerics.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam {

enum class BeamformerKind { kGev, kMvdr };

const char *BeamformerName(BeamformerKind kind);
BeamformerKind ParseBeamformer(const std::string &name);

struct BeamformerWeights {
    BeamformerKind kind = BeamformerKind::kGev;
    std::vector<Eigen::VectorXcd> w;         // per bin, length M
    std::vector<double> lambda;              // GEV: output SNR per bin
    std::vector<Eigen::VectorXcd> steering;  // MVDR: d per bin
    std::vector<int> fallback_bins;          // bins replaced by the reference unit vector

    int num_bins() const { return static_cast<int>(w.size()); }
};

// Per bin the dominant generalized eigenvector of (xx, vv). Bins that fail
// numerically, or whose PSDs coincide (every direction has the same SNR), use
// the reference unit vector and are listed in fallback_bins.
BeamformerWeights GevWeights(const PsdSet &xx, const PsdSet &vv, double delta = kDefaultDelta,
                             int reference_channel = 0);

// w = vv^-1 d / (d^H vv^-1 d). Throws kNumericalFailure naming the bin.
BeamformerWeights MvdrWeights(const PsdSet &vv, const std::vector<Eigen::VectorXcd> &steering,
                              double delta = kDefaultDelta);

// Principal eigenvector of each xx(k), scaled to unit first component. A zero
// or degenerate matrix (first component vanishing) gives e1.
std::vector<Eigen::VectorXcd> SteeringFromPsd(const PsdSet &xx);

Spectrogram Apply(const Spectrogram &spec, const BeamformerWeights &weights);

// Tensor file with dims (F, M), complex128.
void WriteWeights(const std::string &path, const BeamformerWeights &weights);

}  // namespace mclpbeam
