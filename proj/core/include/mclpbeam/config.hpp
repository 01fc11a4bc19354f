// config.hpp
// Pipeline configuration and its key=value file format.
//
//   # comment
//   stft.fft_size = 512
//   mclp.taps = 10
//   beamformer = gev
//
// Later assignments win, so command-line overrides are applied as settings
// after the file has been read.

#pragma once

#include <string>
#include <vector>

#include "mclpbeam/beamform.hpp"
#include "mclpbeam/estimator.hpp"
#include "mclpbeam/mask.hpp"
#include "mclpbeam/mclp.hpp"
#include "mclpbeam/stft.hpp"

namespace mclpbeam {

enum class MaskSource { kMclpDirect, kNeural, kFile };

const char *MaskSourceName(MaskSource source);
MaskSource ParseMaskSource(const std::string &name);

enum class SteeringSource { kPsd, kRtf };

struct PipelineConfig {
    StftConfig stft;
    MclpConfig mclp;
    IrmConfig irm;
    BeamformerKind beamformer = BeamformerKind::kGev;
    MaskSource mask_source = MaskSource::kMclpDirect;
    SteeringSource steering = SteeringSource::kPsd;  // MVDR only
    double beamform_delta = kDefaultDelta;
    TrainConfig train;
    int estimator_context = 2;
    std::vector<int> estimator_hidden{512, 512};
    uint64_t seed = 1;

    std::string mask_path;        // mask_source=file
    std::string checkpoint_path;  // mask_source=neural
    std::string mask_out_path;    // optional dump of the fused speech mask
    std::string weights_out_path; // optional dump of the beamformer weights
};

// Applies one key=value setting. Throws kConfiguration on unknown keys or
// unparsable values.
void ApplySetting(PipelineConfig &cfg, const std::string &key, const std::string &value);

void LoadConfigFile(const std::string &path, PipelineConfig &cfg);

// Range checks across all sections.
void ValidatePipelineConfig(const PipelineConfig &cfg);

// Every key with its current value, one "key = value" per line.
std::string DumpConfig(const PipelineConfig &cfg);

}  // namespace mclpbeam
