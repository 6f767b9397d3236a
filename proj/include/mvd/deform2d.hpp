#pragma once

#include "mvd/image.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <limits>
#include <string>

namespace mvd {

using OffsetMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// G x G grid of pixel offsets spanning the whole image: vertex (i, j) sits at
/// (i (W-1)/(G-1), j (H-1)/(G-1)); row j*G + i of `offsets` holds its (dx, dy).
struct DeformationField2D {
    int grid_size = 0;
    OffsetMatrix offsets;
    double max_offset = std::numeric_limits<double>::infinity();

    static DeformationField2D zero(int grid_size, double max_offset);
    /// Zero field bounded by 0.1 * min(width, height).
    static DeformationField2D zero_for_image(int grid_size, int width, int height);

    auto at(int i, int j) { return offsets.row(j * grid_size + i); }
    Eigen::Vector2d at(int i, int j) const { return offsets.row(j * grid_size + i).transpose(); }

    void validate() const;          // finite entries, consistent sizes
    void clamp_to_bound();          // radial clamp of every offset to max_offset
    double max_magnitude() const;
    double mean_magnitude() const;
};

/// Per-pixel offset at integer pixel (x, y): bilinear blend of the four
/// surrounding grid vertices.
Eigen::Vector2d offset_at(const DeformationField2D& field, int width, int height, int x, int y);

/// Backward warp: out(p) = bilinear sample of `image` at p - offset(p), with
/// transparent black outside the image. Identity for a zero field.
ImageRGBA deform_image(const ImageRGBA& image, const DeformationField2D& field);

/// Gradient of <upstream, deform_image(image, field)> with respect to the offsets.
OffsetMatrix deform_backward(const ImageRGBA& image, const DeformationField2D& field, const ImageGradient& upstream);

/// Mean squared offset difference over 4-connected grid edges.
double smoothness_loss(const DeformationField2D& field);
OffsetMatrix smoothness_gradient(const DeformationField2D& field);

/// JSON text: {"grid_size": G, "max_offset": m, "offsets": [dx0, dy0, dx1, dy1, ...]}
/// with offsets in row-major vertex order. An unbounded field stores max_offset as null.
std::string field_to_json(const DeformationField2D& field);
DeformationField2D field_from_json(const std::string& text);
void write_field(const std::filesystem::path& path, const DeformationField2D& field);
DeformationField2D read_field(const std::filesystem::path& path);

} // namespace mvd
