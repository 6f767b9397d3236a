#pragma once

#include "mvd/image.hpp"

#include <filesystem>
#include <vector>

namespace mvd {

/// 8-bit RGBA PNG. Values are clamped to [0,1] and rounded on write.
ImageRGBA read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageRGBA& image);

/// Raw float depth dump:
///   bytes 0..7   magic "MVDDEPTH"
///   bytes 8..11  width  (uint32, little endian)
///   bytes 12..15 height (uint32, little endian)
///   then width*height float32 values, row-major from the top row.
/// Uncovered pixels hold +infinity.
void write_depth(const std::filesystem::path& path, int width, int height, const std::vector<double>& depth);
std::vector<double> read_depth(const std::filesystem::path& path, int* width, int* height);

} // namespace mvd
