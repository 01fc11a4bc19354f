// tensor_io.cpp

#include "mclpbeam/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mclpbeam/error.hpp"

namespace mclpbeam {

namespace {

constexpr char kMagic[4] = {'M', 'B', 'T', 'N'};
constexpr uint32_t kVersion = 1;

template <typename T>
void PutLe(std::vector<uint8_t> &out, T v) {
    for (size_t i = 0; i < sizeof(T); ++i) out.push_back(uint8_t(uint64_t(v) >> (8 * i)));
}

void PutDouble(std::vector<uint8_t> &out, double v) { PutLe(out, std::bit_cast<uint64_t>(v)); }

class Reader {
public:
    Reader(const std::vector<uint8_t> &bytes, const std::string &path)
        : bytes_(bytes), path_(path) {}

    template <typename T>
    T Get() {
        Need(sizeof(T));
        uint64_t v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    double GetDouble() { return std::bit_cast<double>(Get<uint64_t>()); }
    void Need(size_t n) const {
        if (pos_ + n > bytes_.size())
            throw Error(ErrorKind::kInvalidInput, path_ + ": truncated tensor file");
    }
    size_t remaining() const { return bytes_.size() - pos_; }
    size_t pos() const { return pos_; }
    void Skip(size_t n) {
        Need(n);
        pos_ += n;
    }

private:
    const std::vector<uint8_t> &bytes_;
    const std::string &path_;
    size_t pos_ = 0;
};

}  // namespace

uint64_t Tensor::num_elements() const {
    uint64_t n = 1;
    for (uint64_t d : dims) n *= d;
    return n;
}

void WriteTensor(const std::string &path, const Tensor &tensor) {
    const uint64_t count = tensor.num_elements();
    const bool is_complex = tensor.dtype == TensorDtype::kComplex128;
    if ((is_complex ? tensor.complex.size() : tensor.real.size()) != count)
        throw Error(ErrorKind::kInvalidInput, "tensor payload does not match its dims");

    std::vector<uint8_t> out(kMagic, kMagic + 4);
    PutLe<uint32_t>(out, kVersion);
    PutLe<uint32_t>(out, static_cast<uint32_t>(tensor.dtype));
    PutLe<uint32_t>(out, static_cast<uint32_t>(tensor.dims.size()));
    for (uint64_t d : tensor.dims) PutLe<uint64_t>(out, d);
    if (is_complex) {
        for (const auto &c : tensor.complex) {
            PutDouble(out, c.real());
            PutDouble(out, c.imag());
        }
    } else {
        for (double v : tensor.real) PutDouble(out, v);
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::kIo, "cannot write " + path);
    file.write(reinterpret_cast<const char *>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error(ErrorKind::kIo, "short write to " + path);
}

Tensor ReadTensor(const std::string &path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::kIo, "cannot open " + path);
    const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                     std::istreambuf_iterator<char>());
    Reader r(bytes, path);
    r.Need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw Error(ErrorKind::kInvalidInput, path + ": bad tensor magic");
    r.Skip(4);
    const auto version = r.Get<uint32_t>();
    if (version != kVersion)
        throw Error(ErrorKind::kInvalidInput,
                    path + ": unsupported tensor version " + std::to_string(version));
    Tensor t;
    const auto dtype = r.Get<uint32_t>();
    if (dtype != 1 && dtype != 2)
        throw Error(ErrorKind::kInvalidInput, path + ": unknown dtype " + std::to_string(dtype));
    t.dtype = static_cast<TensorDtype>(dtype);
    const auto ndim = r.Get<uint32_t>();
    for (uint32_t i = 0; i < ndim; ++i) t.dims.push_back(r.Get<uint64_t>());
    const uint64_t count = t.num_elements();
    const uint64_t width = t.dtype == TensorDtype::kComplex128 ? 16 : 8;
    if (count > r.remaining() / width)
        throw Error(ErrorKind::kInvalidInput, path + ": payload shorter than dims");
    if (t.dtype == TensorDtype::kComplex128) {
        t.complex.resize(count);
        for (auto &c : t.complex) {
            const double re = r.GetDouble();
            c = {re, r.GetDouble()};
        }
    } else {
        t.real.resize(count);
        for (auto &v : t.real) v = r.GetDouble();
    }
    return t;
}

}  // namespace mclpbeam
