// cli_test.cpp

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "commands.hpp"
#include "mclpbeam/estimator.hpp"
#include "mclpbeam/mask.hpp"
#include "mclpbeam/simharness.hpp"
#include "mclpbeam/wav.hpp"
#include "test_util.hpp"

namespace mclpbeam {
namespace {

namespace fs = std::filesystem;

int RunCli(std::vector<std::string> args) {
    args.insert(args.begin(), "mclpbeam");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    return cli::Run(static_cast<int>(argv.size()), argv.data());
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mclpbeam_cli_" + std::string(::testing::UnitTest::GetInstance()
                                                  ->current_test_info()
                                                  ->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    std::string Path(const std::string &name) const { return (dir_ / name).string(); }

    // Simulated 4-channel scene written to <name>/ through the simulate command.
    std::string Scene(const std::string &name, int seed, double seconds = 2.0,
                      const std::string &snr = "10", const std::string &t60 = "0.3") {
        const std::string out = Path(name);
        EXPECT_EQ(RunCli({"simulate", "--speech-shaped", std::to_string(seconds), "--snr", snr,
                          "--t60", t60, "--seed", std::to_string(seed), "-o", out}),
                  0);
        return out;
    }

    fs::path dir_;
};

std::string ReadBytes(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

TEST_F(CliTest, SimulateWritesSceneAndEvalScoresIt) {
    const std::string scene = Scene("scene", 3, 1.0);
    for (const char *name : {"mixture.wav", "direct.wav", "image.wav", "noise.wav", "dry.wav"})
        EXPECT_TRUE(fs::exists(fs::path(scene) / name)) << name;
    ::testing::internal::CaptureStdout();
    EXPECT_EQ(RunCli({"eval", scene + "/direct.wav", scene + "/direct.wav", "--summary"}), 0);
    const std::string out = ::testing::internal::GetCapturedStdout();
    EXPECT_NE(out.find("snr_db=120.0000 lag=0"), std::string::npos) << out;
    const auto j = nlohmann::json::parse(out.substr(out.find('{')));
    EXPECT_EQ(j["command"], "eval");
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(RunCli({"enhance", Path("missing.wav"), "-o", Path("out.wav")}), 2);
    EXPECT_EQ(RunCli({"enhance"}), 2);
    EXPECT_EQ(RunCli({"frobnicate"}), 2);
    EXPECT_EQ(RunCli({"simulate", "-o", Path("nosource")}), 2);
    EXPECT_EQ(RunCli({"simulate", "--speech-shaped", "1", "--snr", "loud", "-o", Path("x")}), 2);

    const std::string scene = Scene("scene", 1, 1.0);
    const std::string mixture = scene + "/mixture.wav";
    EXPECT_EQ(RunCli({"enhance", mixture, "-o", Path("o.wav"), "--set", "stft.sample_rate=8000"}),
              2);
    EXPECT_EQ(RunCli({"enhance", mixture, "-o", Path("o.wav"), "--beamformer", "das"}), 2);
    EXPECT_EQ(RunCli({"enhance", mixture, "-o", Path("o.wav"), "--mask-source", "file"}), 2);
    {
        std::ofstream bad(Path("bad.cfg"));
        bad << "mclp.taps\n";
    }
    EXPECT_EQ(RunCli({"enhance", mixture, "-o", Path("o.wav"), "--config", Path("bad.cfg")}), 2);
    // Divergent training is a numerical failure.
    EXPECT_EQ(RunCli({"train-mask", mixture, "-o", Path("net.mknt"), "--epochs", "3",
                      "--learning-rate", "1e200", "--set", "estimator.hidden=8"}),
              3);
}

TEST_F(CliTest, EnhanceIsBitIdenticalAcrossRuns) {
    const std::string mixture = Scene("scene", 2, 1.5) + "/mixture.wav";
    ASSERT_EQ(RunCli({"enhance", mixture, "-o", Path("a.wav"), "--seed", "5"}), 0);
    ASSERT_EQ(RunCli({"enhance", mixture, "-o", Path("b.wav"), "--seed", "5"}), 0);
    EXPECT_EQ(ReadBytes(Path("a.wav")), ReadBytes(Path("b.wav")));
    const AudioBuffer in = ReadWav(mixture), out = ReadWav(Path("a.wav"));
    EXPECT_EQ(out.num_channels(), 1);
    EXPECT_EQ(out.num_samples(), in.num_samples());
    EXPECT_EQ(out.sample_rate, in.sample_rate);
}

TEST_F(CliTest, DuplicatedChannelsReproduceTheChannel) {
    const AudioBuffer src = SpeechShapedSource(2.0, 16000.0, 4);
    AudioBuffer dup;
    dup.sample_rate = src.sample_rate;
    dup.samples = src.samples.replicate(4, 1);
    WriteWav(Path("dup.wav"), dup);
    ASSERT_EQ(RunCli({"enhance", Path("dup.wav"), "-o", Path("out.wav")}), 0);
    const AudioBuffer out = ReadWav(Path("out.wav"));
    const double si_sdr = AlignedSnr(src.samples.row(0).transpose(),
                                     out.samples.row(0).transpose())
                              .snr_db;
    EXPECT_GE(si_sdr, 40.0);
}

TEST_F(CliTest, UnitMaskFileWarnsAndEmitsReferenceChannel) {
    const std::string mixture = Scene("scene", 6, 1.0) + "/mixture.wav";
    const AudioBuffer in = ReadWav(mixture);
    const Spectrogram spec = AnalyzePadded(in, StftConfig{});
    WriteMask(Path("ones.bin"),
              MaskTensor(spec.num_bins(), spec.num_frames(), 1, MaskKind::kSpeech, 1.0));
    ::testing::internal::CaptureStderr();
    ::testing::internal::CaptureStdout();
    const int code = RunCli({"enhance", mixture, "-o", Path("out.wav"), "--mask-source", "file",
                             "--mask", Path("ones.bin"), "--summary"});
    const std::string err = ::testing::internal::GetCapturedStderr();
    const std::string out = ::testing::internal::GetCapturedStdout();
    ASSERT_EQ(code, 0) << err;
    EXPECT_NE(err.find("warning:"), std::string::npos) << err;
    const auto j = nlohmann::json::parse(out);
    EXPECT_EQ(j["beamformer_fallback_bins"], spec.num_bins());
    const AudioBuffer y = ReadWav(Path("out.wav"));
    const Eigen::VectorXd ref = in.samples.row(0).transpose();
    EXPECT_LE(testing::RelRms(ref, y.samples.row(0).transpose()), 1e-6);
}

TEST_F(CliTest, MonoInputIsMclpPassthrough) {
    const AudioBuffer src = SpeechShapedSource(1.0, 16000.0, 7);
    WriteWav(Path("mono.wav"), src);
    ::testing::internal::CaptureStderr();
    const int code = RunCli({"enhance", Path("mono.wav"), "-o", Path("out.wav")});
    const std::string err = ::testing::internal::GetCapturedStderr();
    ASSERT_EQ(code, 0) << err;
    EXPECT_NE(err.find("warning:"), std::string::npos);
    EXPECT_EQ(ReadWav(Path("out.wav")).num_samples(), src.num_samples());
}

TEST_F(CliTest, VanishingLearningRateCheckpointEqualsInitialization) {
    const std::string mixture = Scene("scene", 8, 1.0) + "/mixture.wav";
    ASSERT_EQ(RunCli({"train-mask", mixture, "-o", Path("net.mknt"), "--epochs", "1",
                      "--learning-rate", "1e-300", "--seed", "21", "--set", "estimator.hidden=16",
                      "--set", "estimator.context=1"}),
              0);
    const MaskNet trained = LoadMaskNet(Path("net.mknt"));
    const MaskNet init = MakeMaskNet(257, 1, {16}, 21, TrainConfig{}.dropout_rate);
    ASSERT_EQ(trained.layers.size(), init.layers.size());
    for (size_t l = 0; l < init.layers.size(); ++l) {
        EXPECT_TRUE((trained.layers[l].weight.array() == init.layers[l].weight.array()).all());
        EXPECT_LE(trained.layers[l].bias.cwiseAbs().maxCoeff(), 1e-280);
    }
}

TEST_F(CliTest, TrainingOnScenesGeneralizesToHeldOutScene) {
    std::vector<std::string> args{"train-mask"};
    // Reverberant, noiseless scenes: the pseudo-targets only model dereverberation.
    for (int s = 0; s < 5; ++s)
        args.push_back(Scene("train" + std::to_string(s), 100 + s, 2.0, "inf", "0.2") +
                       "/mixture.wav");
    for (const char *a : {"-o", "", "--epochs", "15", "--learning-rate", "0.3", "--set",
                          "estimator.hidden=128", "--set", "estimator.context=1", "--set",
                          "train.dropout_rate=0", "--summary"})
        args.emplace_back(a);
    args[7] = Path("net.mknt");
    ::testing::internal::CaptureStdout();
    const int code = RunCli(args);
    const std::string out = ::testing::internal::GetCapturedStdout();
    ASSERT_EQ(code, 0);
    const auto j = nlohmann::json::parse(out);
    EXPECT_LT(j["loss_trace"].back().get<double>(), j["initial_loss"].get<double>());

    // Held-out scene from the same generator: fused mask against the fused oracle IRM.
    SceneConfig scene;
    scene.decay_t60 = 0.2;
    scene.seed = 200;
    const SceneTruth truth = SimulateScene(SpeechShapedSource(2.0, 16000.0, 200), scene);
    const StftConfig stft;
    const MaskTensor pred =
        MedianFuse(PredictMasks(LoadMaskNet(Path("net.mknt")), AnalyzePadded(truth.mixed, stft)));
    const MaskTensor oracle = MedianFuse(OracleIrm(truth, IrmConfig{}, stft));
    const double mae = (pred.channel(0) - oracle.channel(0)).cwiseAbs().mean();
    EXPECT_LT(mae, 0.3);
}

}  // namespace
}  // namespace mclpbeam
