// wav.hpp
// RIFF/WAVE reading (16-bit integer or 32-bit float PCM) and 32-bit float
// writing. Integer samples are scaled to [-1, 1).

#pragma once

#include <string>

#include "mclpbeam/stft.hpp"

namespace mclpbeam {

// Throws kIo when the file cannot be opened and kInvalidInput when it is not a
// supported WAVE file.
AudioBuffer ReadWav(const std::string &path);

void WriteWav(const std::string &path, const AudioBuffer &audio);

}  // namespace mclpbeam
