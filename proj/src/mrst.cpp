#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mrsi/tensor.hpp"

namespace mrsi::mrst {
namespace {

static_assert(std::endian::native == std::endian::little,
              "MRST payloads are written with a little-endian memory copy");

constexpr char kMagic[4] = {'M', 'R', 'S', 'T'};

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  void copy_to(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ShapeError("MRST buffer truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
std::vector<std::uint8_t> encode_impl(const Tensor<T>& t, std::uint32_t dtype) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 8 * t.rank() + sizeof(T) * t.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, dtype);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.dims()) put<std::uint64_t>(out, d);
  const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
  out.insert(out.end(), p, p + sizeof(T) * t.size());
  return out;
}

struct Header {
  std::uint32_t dtype;
  std::vector<std::size_t> dims;
};

Header read_header(Reader& r) {
  char magic[4];
  r.copy_to(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ShapeError("not an MRST file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw ShapeError("unsupported MRST version " + std::to_string(version));
  }
  Header h;
  h.dtype = r.get<std::uint32_t>();
  if (h.dtype != kReal64 && h.dtype != kComplex128) {
    throw ShapeError("unknown MRST dtype " + std::to_string(h.dtype));
  }
  const auto ndim = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < ndim; ++i) h.dims.push_back(r.get<std::uint64_t>());
  return h;
}

template <typename T>
Tensor<T> decode_impl(std::span<const std::uint8_t> bytes, std::uint32_t want) {
  Reader r(bytes);
  Header h = read_header(r);
  if (h.dtype != want) {
    throw ShapeError(want == kReal64 ? "expected a real64 MRST tensor"
                                     : "expected a complex128 MRST tensor");
  }
  Tensor<T> t(h.dims);
  if (r.remaining() != sizeof(T) * t.size()) throw ShapeError("MRST payload size mismatch");
  r.copy_to(t.data(), sizeof(T) * t.size());
  return t;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode(const RealTensor& t) { return encode_impl(t, kReal64); }
std::vector<std::uint8_t> encode(const ComplexTensor& t) { return encode_impl(t, kComplex128); }

std::uint32_t peek_dtype(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  return read_header(r).dtype;
}

RealTensor decode_real(std::span<const std::uint8_t> bytes) {
  return decode_impl<double>(bytes, kReal64);
}
ComplexTensor decode_complex(std::span<const std::uint8_t> bytes) {
  return decode_impl<cplx>(bytes, kComplex128);
}

void write(const std::filesystem::path& path, const RealTensor& t) { spill(path, encode(t)); }
void write(const std::filesystem::path& path, const ComplexTensor& t) { spill(path, encode(t)); }
RealTensor read_real(const std::filesystem::path& path) { return decode_real(slurp(path)); }
ComplexTensor read_complex(const std::filesystem::path& path) {
  return decode_complex(slurp(path));
}

}  // namespace mrsi::mrst
