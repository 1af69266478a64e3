#include "synsem/tensor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>

namespace synsem {
namespace {

constexpr std::array<char, 4> kMagic{'D', 'T', 'E', 'N'};
constexpr std::uint8_t kVersion = 1;

std::size_t product(const std::vector<std::uint64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = (out << 8) | ((v >> (8 * i)) & 0xff);
    }
    return out;
  } else {
    return v;
  }
}

template <typename U>
void put(std::vector<std::byte>& out, U v) {
  v = to_little(v);
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  out.insert(out.end(), p, p + sizeof(U));
}

template <typename U>
U get(std::span<const std::byte> in, std::size_t offset) {
  U v;
  std::memcpy(&v, in.data() + offset, sizeof(U));
  return to_little(v);
}

}  // namespace

Tensor::Tensor(DType dtype, std::vector<std::uint64_t> shape)
    : dtype_(dtype), shape_(std::move(shape)) {
  if (shape_.size() > kMaxRank) throw std::invalid_argument("tensor rank exceeds 8");
  const std::size_t n = product(shape_);
  if (dtype_ == DType::f32) {
    data_ = std::vector<float>(n, 0.0f);
  } else {
    data_ = std::vector<double>(n, 0.0);
  }
}

Tensor::Tensor(std::vector<std::uint64_t> shape, std::vector<float> data)
    : dtype_(DType::f32), shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > kMaxRank) throw std::invalid_argument("tensor rank exceeds 8");
  if (product(shape_) != std::get<0>(data_).size()) {
    throw std::invalid_argument("tensor data length does not match shape");
  }
}

Tensor::Tensor(std::vector<std::uint64_t> shape, std::vector<double> data)
    : dtype_(DType::f64), shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > kMaxRank) throw std::invalid_argument("tensor rank exceeds 8");
  if (product(shape_) != std::get<1>(data_).size()) {
    throw std::invalid_argument("tensor data length does not match shape");
  }
}

Tensor Tensor::from_matrix(const Matrix& m, DType dtype) {
  Tensor t(dtype, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())});
  std::size_t k = 0;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c, ++k) {
      if (dtype == DType::f32) {
        t.f32()[k] = static_cast<float>(m(r, c));
      } else {
        t.f64()[k] = m(r, c);
      }
    }
  }
  return t;
}

std::size_t Tensor::size() const noexcept { return product(shape_); }

std::span<const float> Tensor::f32() const { return std::get<std::vector<float>>(data_); }
std::span<float> Tensor::f32() { return std::get<std::vector<float>>(data_); }
std::span<const double> Tensor::f64() const { return std::get<std::vector<double>>(data_); }
std::span<double> Tensor::f64() { return std::get<std::vector<double>>(data_); }

double Tensor::value(std::size_t flat) const {
  return dtype_ == DType::f32 ? static_cast<double>(f32()[flat]) : f64()[flat];
}

Matrix Tensor::to_matrix() const {
  if (rank() != 1 && rank() != 2) {
    throw std::invalid_argument("to_matrix needs a rank-1 or rank-2 tensor");
  }
  const auto rows = static_cast<Index>(shape_[0]);
  const Index cols = rank() == 2 ? static_cast<Index>(shape_[1]) : 1;
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c, ++k) m(r, c) = value(k);
  }
  return m;
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.dtype_ != b.dtype_ || a.shape_ != b.shape_) return false;
  // Bitwise, so NaN payloads and signed zeros compare as stored.
  const auto bytes = a.size() * a.element_width();
  const void* pa = a.dtype_ == DType::f32 ? static_cast<const void*>(a.f32().data())
                                          : static_cast<const void*>(a.f64().data());
  const void* pb = b.dtype_ == DType::f32 ? static_cast<const void*>(b.f32().data())
                                          : static_cast<const void*>(b.f64().data());
  return bytes == 0 || std::memcmp(pa, pb, bytes) == 0;
}

std::vector<std::byte> encode_tensor(const Tensor& t) {
  std::vector<std::byte> out;
  out.reserve(8 + 8 * t.rank() + t.size() * t.element_width());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(kVersion));
  out.push_back(static_cast<std::byte>(t.dtype()));
  out.push_back(static_cast<std::byte>(t.rank()));
  out.push_back(std::byte{0});
  for (auto extent : t.shape()) put<std::uint64_t>(out, extent);
  if (t.dtype() == DType::f32) {
    for (float v : t.f32()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  } else {
    for (double v : t.f64()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Tensor decode_tensor(std::span<const std::byte> in) {
  if (in.size() < 8) throw FormatError("DTEN: truncated header");
  for (std::size_t i = 0; i < 4; ++i) {
    if (static_cast<char>(in[i]) != kMagic[i]) throw FormatError("DTEN: bad magic");
  }
  const auto version = static_cast<std::uint8_t>(in[4]);
  const auto dtype_code = static_cast<std::uint8_t>(in[5]);
  const auto ndim = static_cast<std::uint8_t>(in[6]);
  if (version != kVersion) {
    throw FormatError("DTEN: unsupported version " + std::to_string(version));
  }
  if (dtype_code > 1) throw FormatError("DTEN: bad dtype code " + std::to_string(dtype_code));
  if (ndim > Tensor::kMaxRank) throw FormatError("DTEN: ndim exceeds 8");
  if (static_cast<std::uint8_t>(in[7]) != 0) throw FormatError("DTEN: reserved byte not zero");

  const std::size_t header = 8 + 8 * std::size_t{ndim};
  if (in.size() < header) throw FormatError("DTEN: truncated extents");
  std::vector<std::uint64_t> shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) shape[i] = get<std::uint64_t>(in, 8 + 8 * i);

  const auto dtype = static_cast<DType>(dtype_code);
  const std::size_t width = dtype == DType::f32 ? 4 : 8;
  const std::size_t max_elems = (in.size() - header) / width;
  std::size_t count = 1;
  if (std::find(shape.begin(), shape.end(), 0) != shape.end()) {
    count = 0;
  } else {
    for (auto e : shape) {
      if (count > max_elems / e) throw FormatError("DTEN: truncated payload");
      count *= e;
    }
  }
  const std::size_t payload = in.size() - header;
  if (payload < count * width) throw FormatError("DTEN: truncated payload");
  if (payload > count * width) throw FormatError("DTEN: trailing bytes after payload");

  if (dtype == DType::f32) {
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = std::bit_cast<float>(get<std::uint32_t>(in, header + 4 * i));
    }
    return Tensor(std::move(shape), std::move(data));
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<double>(get<std::uint64_t>(in, header + 8 * i));
  }
  return Tensor(std::move(shape), std::move(data));
}

void store_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path.string(), path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open tensor file: " + path.string(), path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

void store_matrix(const Matrix& m, const std::filesystem::path& path, DType dtype) {
  store_tensor(Tensor::from_matrix(m, dtype), path);
}

Matrix load_matrix(const std::filesystem::path& path) { return load_tensor(path).to_matrix(); }

}  // namespace synsem
