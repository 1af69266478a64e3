#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace synsem {

/// Vertical bars with optional error whiskers, one per value; the zero
/// line is drawn when values change sign.
void write_bar_plot(const std::filesystem::path& path, std::span<const double> values,
                    std::span<const double> errors = {}, int width = 640, int height = 360);

/// Polyline through (x, y) points, axes scaled to the data.
void write_line_plot(const std::filesystem::path& path, std::span<const double> x,
                     std::span<const double> y, int width = 640, int height = 360);

}  // namespace synsem
