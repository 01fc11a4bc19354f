// tensor_io.hpp
// Portable binary tensor files used to exchange masks and beamformer weights.
//
// Layout (all integers and floats little-endian):
//   bytes 0..3   magic "MBTN"
//   u32          version (1)
//   u32          dtype: 1 = float64, 2 = complex128 (interleaved re, im)
//   u32          ndim
//   u64[ndim]    dims
//   payload      prod(dims) elements, row-major (last index fastest)

#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace mclpbeam {

enum class TensorDtype : uint32_t { kFloat64 = 1, kComplex128 = 2 };

struct Tensor {
    TensorDtype dtype = TensorDtype::kFloat64;
    std::vector<uint64_t> dims;
    std::vector<double> real;                  // kFloat64 payload
    std::vector<std::complex<double>> complex;  // kComplex128 payload

    uint64_t num_elements() const;
};

void WriteTensor(const std::string &path, const Tensor &tensor);
Tensor ReadTensor(const std::string &path);

}  // namespace mclpbeam
