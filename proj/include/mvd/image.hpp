#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace mvd {

/// H x W x 4 double buffer, interleaved RGBA, row-major with the origin at the
/// top-left. Pixel (x, y) sits at continuous sampling coordinate (x, y).
///
/// The same layout carries both images (values in [0,1], alpha = coverage mask)
/// and per-pixel gradients of a scalar loss with respect to an image.
class Buffer4 {
public:
    Buffer4() = default;
    Buffer4(int width, int height, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int pixel_count() const { return width_ * height_; }
    bool empty() const { return pixel_count() == 0; }

    double* pixel(int x, int y) { return data_.data() + 4 * (static_cast<size_t>(y) * width_ + x); }
    const double* pixel(int x, int y) const { return data_.data() + 4 * (static_cast<size_t>(y) * width_ + x); }
    double& at(int x, int y, int c) { return pixel(x, y)[c]; }
    double at(int x, int y, int c) const { return pixel(x, y)[c]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    Eigen::Vector4d rgba(int x, int y) const;
    void set_rgba(int x, int y, const Eigen::Vector4d& v);

    void fill(double value);
    bool same_size(const Buffer4& other) const { return width_ == other.width_ && height_ == other.height_; }
    bool operator==(const Buffer4& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

using ImageRGBA = Buffer4;
using ImageGradient = Buffer4;

/// Bilinear sample; taps outside the image read as transparent black.
Eigen::Vector4d sample_bilinear(const ImageRGBA& image, double x, double y);

/// Adds `value` into the (at most four) bilinear taps of (x, y).
void splat_bilinear(ImageGradient& target, double x, double y, const Eigen::Vector4d& value);

/// RGB composited over a white background; alpha set to 1.
ImageRGBA composite_over_white(const ImageRGBA& image);

/// 2x2 box downsample (odd trailing rows/columns are dropped).
ImageRGBA downsample2(const ImageRGBA& image);

bool all_finite(const Buffer4& buffer);

} // namespace mvd
