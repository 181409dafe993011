#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mrsi/errors.hpp"

namespace mrsi {

using cplx = std::complex<double>;

/// Dense row-major n-dimensional array.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims)
      : dims_(std::move(dims)), data_(element_count(dims_)) {}
  Tensor(std::vector<std::size_t> dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != element_count(dims_)) {
      throw ShapeError("tensor payload size does not match its dimensions");
    }
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool operator==(const Tensor&) const = default;

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<cplx>;

// MRST binary container: "MRST", u32 version (1), u32 dtype (1 real64,
// 2 complex128 interleaved), u32 ndim, u64 dims[ndim], little-endian payload.
namespace mrst {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kReal64 = 1;
inline constexpr std::uint32_t kComplex128 = 2;

std::vector<std::uint8_t> encode(const RealTensor& t);
std::vector<std::uint8_t> encode(const ComplexTensor& t);

/// Returns the dtype tag stored in an encoded buffer.
std::uint32_t peek_dtype(std::span<const std::uint8_t> bytes);

RealTensor decode_real(std::span<const std::uint8_t> bytes);
ComplexTensor decode_complex(std::span<const std::uint8_t> bytes);

void write(const std::filesystem::path& path, const RealTensor& t);
void write(const std::filesystem::path& path, const ComplexTensor& t);
RealTensor read_real(const std::filesystem::path& path);
ComplexTensor read_complex(const std::filesystem::path& path);

}  // namespace mrst

}  // namespace mrsi
