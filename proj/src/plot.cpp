#include "synsem/plot.hpp"

#include "synsem/common.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

namespace synsem {
namespace {

using Rgb = std::array<unsigned char, 3>;
constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kAxis{60, 60, 60};
constexpr Rgb kBar{70, 110, 180};
constexpr Rgb kLine{200, 80, 40};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h), kWhite) {}

  void set(int x, int y, Rgb c) {
    if (x >= 0 && x < w_ && y >= 0 && y < h_) px_[static_cast<std::size_t>(y * w_ + x)] = c;
  }
  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) set(x, y, c);
    }
  }
  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      set(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
          static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
    }
  }

  void save(const std::filesystem::path& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw InputError("cannot open for writing: " + path.string(), path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng write failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w_), static_cast<png_uint_32>(h_), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<std::size_t>(w_) * 3);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const auto& c = px_[static_cast<std::size_t>(y * w_ + x)];
        std::copy(c.begin(), c.end(), row.begin() + static_cast<std::ptrdiff_t>(x) * 3);
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }

 private:
  int w_, h_;
  std::vector<Rgb> px_;
};

constexpr int kMargin = 30;

}  // namespace

void write_bar_plot(const std::filesystem::path& path, std::span<const double> values,
                    std::span<const double> errors, int width, int height) {
  if (!errors.empty() && errors.size() != values.size()) {
    throw std::invalid_argument("write_bar_plot: one error per value required");
  }
  Canvas c(width, height);
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double e = errors.empty() ? 0.0 : errors[i];
    lo = std::min(lo, values[i] - e);
    hi = std::max(hi, values[i] + e);
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  const int plot_h = height - 2 * kMargin;
  auto ypix = [&](double v) {
    return kMargin + static_cast<int>(std::lround((hi - v) / (hi - lo) * plot_h));
  };
  const int n = static_cast<int>(values.size());
  const int slot = n > 0 ? (width - 2 * kMargin) / n : 0;
  for (int i = 0; i < n; ++i) {
    const int x0 = kMargin + i * slot + slot / 6;
    const int x1 = kMargin + (i + 1) * slot - slot / 6;
    c.rect(x0, ypix(0.0), x1, ypix(values[static_cast<std::size_t>(i)]), kBar);
    if (!errors.empty()) {
      const int xm = (x0 + x1) / 2;
      const double v = values[static_cast<std::size_t>(i)];
      const double e = errors[static_cast<std::size_t>(i)];
      c.line(xm, ypix(v - e), xm, ypix(v + e), kAxis);
    }
  }
  c.line(kMargin, ypix(0.0), width - kMargin, ypix(0.0), kAxis);
  c.line(kMargin, kMargin, kMargin, height - kMargin, kAxis);
  c.save(path);
}

void write_line_plot(const std::filesystem::path& path, std::span<const double> x,
                     std::span<const double> y, int width, int height) {
  if (x.size() != y.size()) throw std::invalid_argument("write_line_plot: length mismatch");
  Canvas c(width, height);
  if (!x.empty()) {
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    const double xs = *xmax > *xmin ? *xmax - *xmin : 1.0;
    const double ys = *ymax > *ymin ? *ymax - *ymin : 1.0;
    auto px = [&](double v) {
      return kMargin + static_cast<int>(std::lround((v - *xmin) / xs * (width - 2 * kMargin)));
    };
    auto py = [&](double v) {
      return height - kMargin - static_cast<int>(std::lround((v - *ymin) / ys * (height - 2 * kMargin)));
    };
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      c.line(px(x[i]), py(y[i]), px(x[i + 1]), py(y[i + 1]), kLine);
    }
    for (std::size_t i = 0; i < x.size(); ++i) c.rect(px(x[i]) - 2, py(y[i]) - 2, px(x[i]) + 2, py(y[i]) + 2, kLine);
  }
  c.line(kMargin, height - kMargin, width - kMargin, height - kMargin, kAxis);
  c.line(kMargin, kMargin, kMargin, height - kMargin, kAxis);
  c.save(path);
}

}  // namespace synsem
