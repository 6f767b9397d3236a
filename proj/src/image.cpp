#include "mvd/image.hpp"

#include "mvd/kernels/kernels.hpp"
#include "mvd/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace mvd {

Buffer4::Buffer4(int width, int height, double fill)
    : width_(width), height_(height), data_(4 * static_cast<size_t>(std::max(width, 0)) * std::max(height, 0), fill)
{
    if (width < 0 || height < 0)
        throw Error("negative image size");
}

Eigen::Vector4d Buffer4::rgba(int x, int y) const
{
    const double* p = pixel(x, y);
    return {p[0], p[1], p[2], p[3]};
}

void Buffer4::set_rgba(int x, int y, const Eigen::Vector4d& v)
{
    double* p = pixel(x, y);
    for (int c = 0; c < 4; ++c)
        p[c] = v[c];
}

void Buffer4::fill(double value)
{
    std::fill(data_.begin(), data_.end(), value);
}

Eigen::Vector4d sample_bilinear(const ImageRGBA& image, double x, double y)
{
    Eigen::Vector4d out;
    kernels::active().sample_bilinear_rgba(image.data().data(), image.width(), image.height(), &x, &y, 1, out.data());
    return out;
}

void splat_bilinear(ImageGradient& target, double x, double y, const Eigen::Vector4d& value)
{
    kernels::active().scatter_bilinear_rgba(target.data().data(), target.width(), target.height(), &x, &y,
                                            value.data(), 1);
}

ImageRGBA composite_over_white(const ImageRGBA& image)
{
    ImageRGBA out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const double* p = image.pixel(x, y);
            double* o = out.pixel(x, y);
            const double a = std::clamp(p[3], 0.0, 1.0);
            for (int c = 0; c < 3; ++c)
                o[c] = a * p[c] + (1.0 - a);
            o[3] = 1.0;
        }
    return out;
}

ImageRGBA downsample2(const ImageRGBA& image)
{
    ImageRGBA out(image.width() / 2, image.height() / 2);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            for (int c = 0; c < 4; ++c)
                out.at(x, y, c) = 0.25 * (image.at(2 * x, 2 * y, c) + image.at(2 * x + 1, 2 * y, c) +
                                          image.at(2 * x, 2 * y + 1, c) + image.at(2 * x + 1, 2 * y + 1, c));
    return out;
}

bool all_finite(const Buffer4& buffer)
{
    return std::all_of(buffer.data().begin(), buffer.data().end(), [](double v) { return std::isfinite(v); });
}

} // namespace mvd
