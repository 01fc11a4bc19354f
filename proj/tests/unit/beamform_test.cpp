// beamform_test.cpp

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "mclpbeam/beamform.hpp"
#include "mclpbeam/error.hpp"
#include "mclpbeam/simharness.hpp"
#include "mclpbeam/tensor_io.hpp"
#include "test_util.hpp"

namespace mclpbeam {
namespace {

using testing::cd;

HermitianMatrix Diag(double a, double b) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return HermitianMatrix(m);
}

TEST(Gev, DiagonalExample) {
    const BeamformerWeights w = GevWeights({Diag(3, 1)}, {HermitianMatrix::Identity(2)});
    EXPECT_EQ(w.kind, BeamformerKind::kGev);
    EXPECT_LE((w.w[0] - Eigen::VectorXcd::Unit(2, 0)).norm(), 1e-10);
    EXPECT_TRUE(w.fallback_bins.empty());
}

TEST(Gev, RankOneOracle) {
    std::mt19937_64 rng(1);
    const Eigen::VectorXcd a = testing::RandomComplex(4, 1, rng);
    const HermitianMatrix vv = testing::RandomHpd(4, rng, 0.5);
    const BeamformerWeights w = GevWeights({HermitianMatrix(2.0 * a * a.adjoint())}, {vv}, 0.0);
    EXPECT_LE(testing::CosineDistance(w.w[0], vv.matrix().ldlt().solve(a)), 1e-10);
}

TEST(Gev, ScalingSpeechPsdKeepsWeights) {
    std::mt19937_64 rng(2);
    PsdSet xx, vv, xx10;
    for (int k = 0; k < 6; ++k) {
        xx.push_back(testing::RandomHpd(3, rng));
        vv.push_back(testing::RandomHpd(3, rng));
        xx10.emplace_back(10.0 * xx.back().matrix());
    }
    const BeamformerWeights a = GevWeights(xx, vv), b = GevWeights(xx10, vv);
    for (int k = 0; k < 6; ++k) EXPECT_LE((a.w[k] - b.w[k]).norm(), 1e-8);
}

TEST(Gev, UnitNormPhaseNormalizedAndOptimal) {
    std::mt19937_64 rng(3);
    PsdSet xx, vv;
    for (int k = 0; k < 8; ++k) {
        xx.push_back(testing::RandomHpd(4, rng));
        vv.push_back(testing::RandomHpd(4, rng));
    }
    const BeamformerWeights w = GevWeights(xx, vv);
    for (int k = 0; k < 8; ++k) {
        const Eigen::VectorXcd &v = w.w[k];
        EXPECT_NEAR(v.norm(), 1.0, 1e-12);
        EXPECT_EQ(v(0).imag(), 0.0);
        EXPECT_GE(v(0).real(), 0.0);
        auto quotient = [&](const Eigen::VectorXcd &u) {
            return u.dot(xx[k].matrix() * u).real() / u.dot(vv[k].matrix() * u).real();
        };
        const double best = quotient(v);
        for (int i = 0; i < 100; ++i) {
            Eigen::VectorXcd u = testing::RandomComplex(4, 1, rng);
            u.normalize();
            EXPECT_GE(best, quotient(u) - 1e-9);
        }
    }
}

TEST(Gev, IdenticalPsdsFallBackToReference) {
    std::mt19937_64 rng(4);
    const HermitianMatrix p = testing::RandomHpd(3, rng);
    const BeamformerWeights w = GevWeights({p, p}, {p, p}, kDefaultDelta, 1);
    EXPECT_EQ(w.fallback_bins, (std::vector<int>{0, 1}));
    for (const Eigen::VectorXcd &v : w.w) EXPECT_EQ(v, Eigen::VectorXcd::Unit(3, 1));
}

TEST(Mvdr, IdentityNoise) {
    Eigen::VectorXcd d(3);
    d << 1.0, cd(0.2, -0.4), cd(0.0, 1.5);
    const BeamformerWeights w = MvdrWeights({HermitianMatrix::Identity(3)}, {d}, 0.0);
    EXPECT_EQ(w.kind, BeamformerKind::kMvdr);
    EXPECT_LE((w.w[0] - d / d.squaredNorm()).norm(), 1e-12);
}

TEST(Mvdr, DiagonalClosedForm) {
    const BeamformerWeights w =
        MvdrWeights({Diag(1, 4)}, {Eigen::VectorXcd::Ones(2)}, 0.0);
    EXPECT_NEAR(std::abs(w.w[0](0) - 0.8), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(w.w[0](1) - 0.2), 0.0, 1e-12);
}

TEST(Mvdr, DistortionlessOnEveryBin) {
    std::mt19937_64 rng(5);
    PsdSet vv;
    std::vector<Eigen::VectorXcd> d;
    for (int k = 0; k < 20; ++k) {
        vv.push_back(testing::RandomHpd(4, rng));
        d.push_back(testing::RandomComplex(4, 1, rng));
    }
    const BeamformerWeights w = MvdrWeights(vv, d);
    for (int k = 0; k < 20; ++k) EXPECT_LE(std::abs(w.w[k].dot(d[k]) - 1.0), 1e-10);
}

TEST(Mvdr, ZeroSteeringIsRejected) {
    EXPECT_THROW(MvdrWeights({HermitianMatrix::Identity(2)}, {Eigen::VectorXcd::Zero(2)}), Error);
}

TEST(Steering, RankOneAndIdentity) {
    Eigen::VectorXcd a(3);
    a << 1.0, cd(0.5, 0.5), cd(-0.3, 0.9);
    const auto d = SteeringFromPsd({HermitianMatrix(3.0 * a * a.adjoint()),
                                    HermitianMatrix::Identity(3), HermitianMatrix::Zero(3)});
    EXPECT_LE((d[0] - a).norm(), 1e-10);
    EXPECT_EQ(d[1], Eigen::VectorXcd::Unit(3, 0));
    EXPECT_EQ(d[2], Eigen::VectorXcd::Unit(3, 0));
}

TEST(Steering, PerturbedRankOne) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXcd a = testing::RandomComplex(4, 1, rng);
        const Eigen::MatrixXcd xx = a * a.adjoint();
        const Eigen::MatrixXcd e = testing::RandomComplex(4, 4, rng);
        // -40 dB relative perturbation in Frobenius norm.
        const Eigen::MatrixXcd pert = e * e.adjoint();
        const Eigen::MatrixXcd p = xx + 1e-2 * xx.norm() / pert.norm() * pert;
        const auto d = SteeringFromPsd({HermitianMatrix(p)});
        EXPECT_LE(testing::CosineDistance(d[0], a), 1e-3);
    }
}

Spectrogram RandomSpec(int bins, int frames, int channels, std::mt19937_64 &rng) {
    StftConfig cfg;
    cfg.fft_size = 2 * (bins - 1);
    Spectrogram s(cfg, frames, channels);
    for (int m = 0; m < channels; ++m) s.channel(m) = testing::RandomComplex(bins, frames, rng);
    return s;
}

BeamformerWeights Passthrough(int bins, int channels, int ref) {
    BeamformerWeights w;
    w.w.assign(bins, Eigen::VectorXcd::Unit(channels, ref));
    return w;
}

TEST(Apply, UnitVectorIsPassthrough) {
    std::mt19937_64 rng(7);
    const Spectrogram s = RandomSpec(5, 10, 3, rng);
    const Spectrogram z = Apply(s, Passthrough(5, 3, 0));
    ASSERT_EQ(z.num_channels(), 1);
    EXPECT_TRUE((z.channel(0).array() == s.channel(0).array()).all());
}

TEST(Apply, AveragingIdenticalChannels) {
    std::mt19937_64 rng(8);
    Spectrogram s = RandomSpec(5, 10, 2, rng);
    s.channel(1) = s.channel(0);
    BeamformerWeights w;
    w.w.assign(5, Eigen::VectorXcd::Constant(2, 0.5));
    EXPECT_LE((Apply(s, w).channel(0) - s.channel(0)).norm(), 1e-15);
}

TEST(Apply, MatchesNaiveLoop) {
    std::mt19937_64 rng(9);
    const Spectrogram s = RandomSpec(7, 12, 4, rng);
    BeamformerWeights w;
    for (int k = 0; k < 7; ++k) w.w.push_back(testing::RandomComplex(4, 1, rng));
    const Spectrogram z = Apply(s, w);
    for (int k = 0; k < 7; ++k)
        for (int n = 0; n < 12; ++n) {
            cd acc = 0.0;
            for (int m = 0; m < 4; ++m) acc += std::conj(w.w[k](m)) * s(k, n, m);
            EXPECT_NEAR(std::abs(z(k, n, 0) - acc), 0.0, 1e-12);
        }
}

TEST(Apply, ShapeMismatchIsInvalid) {
    std::mt19937_64 rng(10);
    const Spectrogram s = RandomSpec(5, 10, 3, rng);
    EXPECT_THROW(Apply(s, Passthrough(5, 2, 0)), Error);
    EXPECT_THROW(Apply(s, Passthrough(4, 3, 0)), Error);
}

TEST(Gev, ChannelPermutationLeavesOutputMagnitude) {
    std::mt19937_64 rng(11);
    const Spectrogram s = RandomSpec(6, 40, 3, rng);
    const std::vector<int> perm{2, 0, 1};
    Spectrogram p = s;
    for (int m = 0; m < 3; ++m) p.channel(m) = s.channel(perm[m]);
    auto weights = [](const Spectrogram &spec) {
        MaskTensor mask(spec.num_bins(), spec.num_frames());
        for (int n = 0; n < spec.num_frames(); ++n) mask.channel(0).col(n).setConstant(n % 3 ? 0.9 : 0.1);
        return GevWeights(EstimatePsd(spec, mask), EstimatePsd(spec, mask.Complement()));
    };
    const Spectrogram za = Apply(s, weights(s)), zb = Apply(p, weights(p));
    EXPECT_LE((za.channel(0).cwiseAbs() - zb.channel(0).cwiseAbs()).cwiseAbs().maxCoeff(),
              1e-8 * za.channel(0).cwiseAbs().maxCoeff());
}

TEST(Gev, OracleMasksBeatBestInputChannel) {
    const AudioBuffer src = SpeechShapedSource(3.0, 16000.0, 4);
    SceneConfig scene;
    scene.snr_db = 5.0;
    scene.seed = 4;
    const SceneTruth truth = SimulateScene(src, scene);
    StftConfig stft;
    const Spectrogram spec = AnalyzePadded(truth.mixed, stft);
    const MaskTensor mask = MedianFuse(OracleIrm(truth, IrmConfig{}, stft));
    const BeamformerWeights w = GevWeights(EstimatePsdOrUniform(spec, mask, nullptr),
                                           EstimatePsdOrUniform(spec, mask.Complement(), nullptr));
    const std::vector<double> inputs = InputSnrs(truth);
    EXPECT_GT(BeamformedSnr(truth, w, stft), *std::max_element(inputs.begin(), inputs.end()));
}

TEST(WeightsIo, WritesComplexTensor) {
    const auto path = std::filesystem::temp_directory_path() / "mclpbeam_weights.bin";
    BeamformerWeights w = Passthrough(3, 2, 1);
    WriteWeights(path.string(), w);
    const Tensor t = ReadTensor(path.string());
    EXPECT_EQ(t.dtype, TensorDtype::kComplex128);
    EXPECT_EQ(t.dims, (std::vector<uint64_t>{3, 2}));
    EXPECT_EQ(t.complex[1], cd(1.0));
    EXPECT_EQ(t.complex[0], cd(0.0));
}

}  // namespace
}  // namespace mclpbeam
