// wav.cpp

#include "mclpbeam/wav.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "mclpbeam/error.hpp"

namespace mclpbeam {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t ReadU32(const uint8_t *p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t ReadU16(const uint8_t *p) { return uint16_t(p[0] | p[1] << 8); }

void PutU32(std::vector<uint8_t> &out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}
void PutU16(std::vector<uint8_t> &out, uint16_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
}
void PutTag(std::vector<uint8_t> &out, const char *tag) { out.insert(out.end(), tag, tag + 4); }

[[noreturn]] void Malformed(const std::string &path, const std::string &why) {
    throw Error(ErrorKind::kInvalidInput, path + ": " + why);
}

}  // namespace

AudioBuffer ReadWav(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        Malformed(path, "not a RIFF/WAVE file");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    const uint8_t *data = nullptr;
    size_t data_size = 0;
    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const uint8_t *chunk = bytes.data() + pos;
        const size_t size = ReadU32(chunk + 4);
        const size_t body = pos + 8;
        if (body + size > bytes.size()) {
            // Tolerate a truncated data chunk from streaming writers.
            if (std::memcmp(chunk, "data", 4) != 0) Malformed(path, "truncated chunk");
        }
        const size_t avail = std::min(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (avail < 16) Malformed(path, "short fmt chunk");
            format = ReadU16(chunk + 8);
            channels = ReadU16(chunk + 10);
            rate = ReadU32(chunk + 12);
            bits = ReadU16(chunk + 22);
            if (format == kFormatExtensible) {
                if (avail < 26) Malformed(path, "short extensible fmt chunk");
                format = ReadU16(chunk + 8 + 24);  // first two bytes of the subformat GUID
            }
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_size = avail;
        }
        pos = body + size + (size & 1);
    }
    if (channels == 0 || rate == 0) Malformed(path, "missing fmt chunk");
    if (!data) Malformed(path, "missing data chunk");
    const bool is_int16 = format == kFormatPcm && bits == 16;
    const bool is_float32 = format == kFormatFloat && bits == 32;
    if (!is_int16 && !is_float32)
        Malformed(path, "unsupported sample format (format " + std::to_string(format) + ", " +
                            std::to_string(bits) + " bits); need 16-bit PCM or 32-bit float");

    const size_t bytes_per_sample = bits / 8;
    const size_t frames = data_size / (bytes_per_sample * channels);
    AudioBuffer audio;
    audio.sample_rate = rate;
    audio.samples.resize(channels, static_cast<Eigen::Index>(frames));
    for (size_t t = 0; t < frames; ++t) {
        for (size_t c = 0; c < channels; ++c) {
            const uint8_t *p = data + (t * channels + c) * bytes_per_sample;
            double v;
            if (is_int16) {
                v = static_cast<int16_t>(ReadU16(p)) / 32768.0;
            } else {
                v = static_cast<double>(std::bit_cast<float>(ReadU32(p)));
            }
            audio.samples(c, t) = v;
        }
    }
    return audio;
}

void WriteWav(const std::string &path, const AudioBuffer &audio) {
    const uint32_t channels = audio.num_channels();
    const uint32_t frames = audio.num_samples();
    if (channels == 0) throw Error(ErrorKind::kInvalidInput, "cannot write audio with no channels");
    const uint32_t rate = static_cast<uint32_t>(std::lround(audio.sample_rate));
    const uint32_t data_bytes = frames * channels * 4;

    std::vector<uint8_t> out;
    out.reserve(58 + data_bytes);
    PutTag(out, "RIFF");
    PutU32(out, 4 + (8 + 18) + (8 + 4) + (8 + data_bytes));
    PutTag(out, "WAVE");
    PutTag(out, "fmt ");
    PutU32(out, 18);
    PutU16(out, kFormatFloat);
    PutU16(out, uint16_t(channels));
    PutU32(out, rate);
    PutU32(out, rate * channels * 4);
    PutU16(out, uint16_t(channels * 4));
    PutU16(out, 32);
    PutU16(out, 0);  // cbSize
    PutTag(out, "fact");
    PutU32(out, 4);
    PutU32(out, frames);
    PutTag(out, "data");
    PutU32(out, data_bytes);
    for (uint32_t t = 0; t < frames; ++t)
        for (uint32_t c = 0; c < channels; ++c)
            PutU32(out, std::bit_cast<uint32_t>(static_cast<float>(audio.samples(c, t))));

    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::kIo, "cannot write " + path);
    file.write(reinterpret_cast<const char *>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error(ErrorKind::kIo, "short write to " + path);
}

}  // namespace mclpbeam
