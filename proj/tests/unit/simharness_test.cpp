// simharness_test.cpp

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mclpbeam/error.hpp"
#include "mclpbeam/simharness.hpp"
#include "mclpbeam/wav.hpp"
#include "test_util.hpp"

namespace mclpbeam {
namespace {

AudioBuffer Source(uint64_t seed, int samples = 16000) {
    std::mt19937_64 rng(seed);
    return testing::RandomAudio(1, samples, rng);
}

TEST(Simulate, AnechoicIsDelayedScaledSource) {
    const AudioBuffer src = Source(1);
    SceneConfig cfg;
    cfg.num_channels = 3;
    cfg.rir_length = 1;
    cfg.direct_delays = {0, 5, 17};
    cfg.gains = {1.0, 0.5, -2.0};
    const SceneTruth t = SimulateScene(src, cfg);
    ASSERT_EQ(t.mixed.num_channels(), 3);
    ASSERT_EQ(t.mixed.num_samples(), src.num_samples());
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < src.num_samples(); ++n) {
            const int s = n - cfg.direct_delays[m];
            const double expect = s >= 0 ? cfg.gains[m] * src.samples(0, s) : 0.0;
            ASSERT_NEAR(t.mixed.samples(m, n), expect, 1e-12) << m << "," << n;
        }
    EXPECT_LE((t.direct.samples - t.image.samples).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulate, InfiniteSnrMeansNoNoise) {
    const SceneTruth t = SimulateScene(Source(2), SceneConfig{});
    EXPECT_TRUE((t.mixed.samples.array() == t.image.samples.array()).all());
    EXPECT_EQ(t.noise.samples.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, MeasuredSnrMatchesTarget) {
    for (NoiseKind kind : {NoiseKind::kWhite, NoiseKind::kBabble}) {
        for (double snr : {0.0, 10.0, -5.0}) {
            SceneConfig cfg;
            cfg.snr_db = snr;
            cfg.noise_kind = kind;
            const SceneTruth t = SimulateScene(Source(3), cfg);
            for (int m = 0; m < cfg.num_channels; ++m) {
                const double measured = 10.0 * std::log10(t.image.samples.row(m).squaredNorm() /
                                                          t.noise.samples.row(m).squaredNorm());
                EXPECT_NEAR(measured, snr, 0.1) << NoiseKindName(kind) << " channel " << m;
            }
        }
    }
}

TEST(Simulate, ExactAdditivity) {
    SceneConfig cfg;
    cfg.snr_db = 3.0;
    const SceneTruth t = SimulateScene(Source(4), cfg);
    EXPECT_EQ((t.mixed.samples - t.image.samples - t.noise.samples).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE((t.mixed.samples.array() == (t.image.samples + t.noise.samples).array()).all());
}

TEST(Simulate, DeterministicGivenSeed) {
    SceneConfig cfg;
    cfg.snr_db = 5.0;
    cfg.seed = 9;
    const SceneTruth a = SimulateScene(Source(5), cfg), b = SimulateScene(Source(5), cfg);
    EXPECT_TRUE((a.mixed.samples.array() == b.mixed.samples.array()).all());
    for (size_t m = 0; m < a.rirs.size(); ++m) EXPECT_EQ(a.rirs[m], b.rirs[m]);
    cfg.seed = 10;
    const SceneTruth c = SimulateScene(Source(5), cfg);
    EXPECT_FALSE((a.mixed.samples.array() == c.mixed.samples.array()).all());
}

TEST(Simulate, RirTailDecaysAtT60) {
    SceneConfig cfg;
    cfg.rir_length = 9600;
    cfg.decay_t60 = 0.3;
    const SceneTruth t = SimulateScene(Source(6), cfg);
    const Eigen::VectorXd &h = t.rirs[1];
    // Energy in 50 ms windows 0.3 s apart should differ by about 60 dB.
    auto energy = [&](int start) { return h.segment(start, 800).squaredNorm(); };
    const double drop = 10.0 * std::log10(energy(800) / energy(800 + 4800));
    EXPECT_NEAR(drop, 60.0, 3.0);
}

TEST(Simulate, RejectsInvalidScenes) {
    SceneConfig cfg;
    cfg.num_channels = 0;
    EXPECT_THROW(SimulateScene(Source(7), cfg), Error);
    cfg = SceneConfig{};
    cfg.gains = {1.0};
    EXPECT_THROW(SimulateScene(Source(7), cfg), Error);
    AudioBuffer silent;
    silent.samples = Eigen::MatrixXd::Zero(1, 100);
    EXPECT_THROW(SimulateScene(silent, SceneConfig{}), Error);
}

TEST(AlignedSnr, IdentityIsCapped) {
    const Eigen::VectorXd r = Source(8).samples.row(0).transpose();
    EXPECT_EQ(AlignedSnr(r, r).snr_db, kSnrCapDb);
    EXPECT_EQ(AlignedSnr(r, -r).snr_db, kSnrCapDb);
    EXPECT_EQ(AlignedSnr(r, 3.0 * r).snr_db, kSnrCapDb);
}

TEST(AlignedSnr, EqualPowerNoiseIsZeroDb) {
    std::mt19937_64 rng(9);
    const Eigen::VectorXd r = Source(10, 64000).samples.row(0).transpose();
    Eigen::VectorXd noise = testing::RandomAudio(1, 64000, rng).samples.row(0).transpose();
    noise *= r.norm() / noise.norm();
    const double snr = AlignedSnr(r, r + noise).snr_db;
    EXPECT_NEAR(snr, 0.0, 0.2);
}

TEST(AlignedSnr, RecoversLag) {
    const Eigen::VectorXd r = Source(11).samples.row(0).transpose();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(r.size());
    e.tail(r.size() - 37) = r.head(r.size() - 37);
    const SnrResult res = AlignedSnr(r, e);
    EXPECT_EQ(res.lag, 37);
    EXPECT_EQ(res.snr_db, kSnrCapDb);
}

TEST(AlignedSnr, ZeroReferenceIsInvalid) {
    try {
        AlignedSnr(Eigen::VectorXd::Zero(10), Eigen::VectorXd::Ones(10));
        FAIL() << "expected an error";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
    }
}

TEST(OracleIrm, NoiselessAnechoicSceneIsAllOnes) {
    SceneConfig cfg;
    cfg.rir_length = 1;
    const SceneTruth t = SimulateScene(SpeechShapedSource(1.0, 16000.0, 1), cfg);
    const MaskTensor m = OracleIrm(t, IrmConfig{}, StftConfig{});
    ASSERT_EQ(m.num_channels(), cfg.num_channels);
    // Bins below the 1e-10 magnitude floor are silent and masked out.
    const Spectrogram y = AnalyzePadded(t.mixed, StftConfig{});
    for (int c = 0; c < m.num_channels(); ++c) {
        const Eigen::MatrixXd mag = y.channel(c).cwiseAbs();
        const double gate = 1e-6 * mag.maxCoeff();
        int checked = 0;
        for (Eigen::Index i = 0; i < mag.size(); ++i)
            if (mag(i) > gate) {
                ++checked;
                EXPECT_EQ(m.channel(c)(i), 1.0) << "channel " << c << " index " << i;
            }
        EXPECT_GT(checked, mag.size() / 2);
    }
}

TEST(SyntheticSources, DeterministicAndNormalized) {
    for (auto make : {&SpeechLikeSource, &SpeechShapedSource}) {
        const AudioBuffer a = make(1.5, 16000.0, 3), b = make(1.5, 16000.0, 3);
        ASSERT_EQ(a.num_samples(), 24000);
        EXPECT_TRUE((a.samples.array() == b.samples.array()).all());
        const double rms = std::sqrt(a.samples.squaredNorm() / a.num_samples());
        EXPECT_NEAR(rms, 0.1, 1e-9);
    }
}

TEST(Export, WritesAllRolesAndManifest) {
    const auto dir = std::filesystem::temp_directory_path() / "mclpbeam_scene_export";
    std::filesystem::remove_all(dir);
    SceneConfig cfg;
    cfg.snr_db = 10.0;
    const SceneTruth t = SimulateScene(Source(12), cfg);
    ExportScene(dir.string(), t);
    for (const char *name : {"mixture.wav", "direct.wav", "image.wav", "noise.wav", "dry.wav",
                             "truth.txt"})
        EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
    const AudioBuffer mixed = ReadWav((dir / "mixture.wav").string());
    EXPECT_EQ(mixed.num_channels(), cfg.num_channels);
    EXPECT_LE((mixed.samples - t.mixed.samples).cwiseAbs().maxCoeff(), 1e-6);
    std::ifstream manifest(dir / "truth.txt");
    const std::string text((std::istreambuf_iterator<char>(manifest)), {});
    EXPECT_NE(text.find("snr_db"), std::string::npos);
}

}  // namespace
}  // namespace mclpbeam
