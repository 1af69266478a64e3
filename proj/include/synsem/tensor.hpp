#pragma once

#include "synsem/common.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace synsem {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

/// Dense row-major tensor with a fixed element type. This is the on-disk
/// representation of every matrix the pipeline exchanges; computation
/// promotes to `Matrix` (f64, column-major).
class Tensor {
 public:
  static constexpr std::size_t kMaxRank = 8;

  Tensor() : Tensor(DType::f64, {0}) {}
  Tensor(DType dtype, std::vector<std::uint64_t> shape);
  Tensor(std::vector<std::uint64_t> shape, std::vector<float> data);
  Tensor(std::vector<std::uint64_t> shape, std::vector<double> data);

  static Tensor from_matrix(const Matrix& m, DType dtype = DType::f64);

  DType dtype() const noexcept { return dtype_; }
  const std::vector<std::uint64_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept;
  std::size_t element_width() const noexcept { return dtype_ == DType::f32 ? 4 : 8; }

  std::span<const float> f32() const;
  std::span<float> f32();
  std::span<const double> f64() const;
  std::span<double> f64();

  /// Value at a flat row-major offset, promoted to double.
  double value(std::size_t flat) const;

  /// 2-D view as an f64 matrix; a rank-1 tensor becomes a column.
  Matrix to_matrix() const;

  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  DType dtype_;
  std::vector<std::uint64_t> shape_;
  std::variant<std::vector<float>, std::vector<double>> data_;
};

// DTEN container: "DTEN", u8 version=1, u8 dtype, u8 ndim (<= 8), u8 reserved=0,
// ndim x u64 little-endian extents, row-major little-endian payload.
std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> bytes);

void store_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

/// Convenience wrappers for matrices.
void store_matrix(const Matrix& m, const std::filesystem::path& path, DType dtype = DType::f32);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace synsem
