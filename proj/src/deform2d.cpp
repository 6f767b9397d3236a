#include "mvd/deform2d.hpp"

#include "mvd/kernels/kernels.hpp"
#include "mvd/mesh.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace mvd {

namespace {

struct CellCoord {
    int i0;
    double t;
};

// Grid cell and fractional position of pixel coordinate `x` along one axis.
CellCoord cell_of(int x, int pixels, int grid)
{
    const double u = pixels > 1 ? static_cast<double>(x) * (grid - 1) / (pixels - 1) : 0.0;
    const int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, grid - 2);
    return {i0, u - i0};
}

void check_compatible(const DeformationField2D& field, const ImageRGBA& image)
{
    field.validate();
    if (image.width() < 2 || image.height() < 2)
        throw Error("image too small to deform");
}

} // namespace

DeformationField2D DeformationField2D::zero(int grid_size, double max_offset)
{
    if (grid_size < 2)
        throw Error("deformation grid needs at least 2 vertices per side");
    DeformationField2D f;
    f.grid_size = grid_size;
    f.offsets = OffsetMatrix::Zero(grid_size * grid_size, 2);
    f.max_offset = max_offset;
    return f;
}

DeformationField2D DeformationField2D::zero_for_image(int grid_size, int width, int height)
{
    return zero(grid_size, 0.1 * std::min(width, height));
}

void DeformationField2D::validate() const
{
    if (grid_size < 2 || offsets.rows() != grid_size * grid_size)
        throw Error("deformation field has " + std::to_string(offsets.rows()) + " offsets for grid size " +
                    std::to_string(grid_size));
    if (!offsets.allFinite())
        throw Error("deformation field contains non-finite offsets");
}

void DeformationField2D::clamp_to_bound()
{
    if (!std::isfinite(max_offset))
        return;
    for (Eigen::Index r = 0; r < offsets.rows(); ++r) {
        const double n = offsets.row(r).norm();
        if (n > max_offset)
            offsets.row(r) *= max_offset / n;
    }
}

double DeformationField2D::max_magnitude() const
{
    return offsets.rows() ? offsets.rowwise().norm().maxCoeff() : 0.0;
}

double DeformationField2D::mean_magnitude() const
{
    return offsets.rows() ? offsets.rowwise().norm().mean() : 0.0;
}

Eigen::Vector2d offset_at(const DeformationField2D& field, int width, int height, int x, int y)
{
    const int g = field.grid_size;
    const CellCoord cx = cell_of(x, width, g), cy = cell_of(y, height, g);
    return (1 - cx.t) * (1 - cy.t) * field.at(cx.i0, cy.i0) + cx.t * (1 - cy.t) * field.at(cx.i0 + 1, cy.i0) +
           (1 - cx.t) * cy.t * field.at(cx.i0, cy.i0 + 1) + cx.t * cy.t * field.at(cx.i0 + 1, cy.i0 + 1);
}

ImageRGBA deform_image(const ImageRGBA& image, const DeformationField2D& field)
{
    check_compatible(field, image);
    const int w = image.width(), h = image.height();
    ImageRGBA out(w, h);
    std::vector<double> xs(static_cast<size_t>(w)), ys(static_cast<size_t>(w));
    const auto& k = kernels::active();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Eigen::Vector2d o = offset_at(field, w, h, x, y);
            xs[x] = x - o.x();
            ys[x] = y - o.y();
        }
        k.sample_bilinear_rgba(image.data().data(), w, h, xs.data(), ys.data(), w, out.pixel(0, y));
    }
    return out;
}

OffsetMatrix deform_backward(const ImageRGBA& image, const DeformationField2D& field, const ImageGradient& upstream)
{
    check_compatible(field, image);
    if (!upstream.same_size(image))
        throw Error("upstream gradient size does not match the image");
    const int w = image.width(), h = image.height(), g = field.grid_size;
    OffsetMatrix grad = OffsetMatrix::Zero(g * g, 2);
    std::vector<double> xs(static_cast<size_t>(w)), ys(static_cast<size_t>(w));
    std::vector<double> gx(static_cast<size_t>(w)), gy(static_cast<size_t>(w));
    const auto& k = kernels::active();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Eigen::Vector2d o = offset_at(field, w, h, x, y);
            xs[x] = x - o.x();
            ys[x] = y - o.y();
        }
        k.bilinear_spatial_dot(image.data().data(), w, h, xs.data(), ys.data(), upstream.pixel(0, y), w, gx.data(),
                               gy.data());
        const CellCoord cy = cell_of(y, h, g);
        for (int x = 0; x < w; ++x) {
            if (gx[x] == 0.0 && gy[x] == 0.0)
                continue;
            // sample point = p - offset, so d/d offset = -spatial gradient
            const Eigen::Vector2d d(-gx[x], -gy[x]);
            const CellCoord cx = cell_of(x, w, g);
            grad.row(cy.i0 * g + cx.i0) += (1 - cx.t) * (1 - cy.t) * d.transpose();
            grad.row(cy.i0 * g + cx.i0 + 1) += cx.t * (1 - cy.t) * d.transpose();
            grad.row((cy.i0 + 1) * g + cx.i0) += (1 - cx.t) * cy.t * d.transpose();
            grad.row((cy.i0 + 1) * g + cx.i0 + 1) += cx.t * cy.t * d.transpose();
        }
    }
    return grad;
}

double smoothness_loss(const DeformationField2D& field)
{
    field.validate();
    const int g = field.grid_size;
    double sum = 0.0;
    for (int j = 0; j < g; ++j)
        for (int i = 0; i < g; ++i) {
            if (i + 1 < g)
                sum += (field.at(i + 1, j) - field.at(i, j)).squaredNorm();
            if (j + 1 < g)
                sum += (field.at(i, j + 1) - field.at(i, j)).squaredNorm();
        }
    return sum / (2.0 * g * (g - 1));
}

OffsetMatrix smoothness_gradient(const DeformationField2D& field)
{
    field.validate();
    const int g = field.grid_size;
    const double scale = 2.0 / (2.0 * g * (g - 1));
    OffsetMatrix grad = OffsetMatrix::Zero(g * g, 2);
    for (int j = 0; j < g; ++j)
        for (int i = 0; i < g; ++i) {
            if (i + 1 < g) {
                const Eigen::Vector2d d = scale * (field.at(i + 1, j) - field.at(i, j));
                grad.row(j * g + i + 1) += d.transpose();
                grad.row(j * g + i) -= d.transpose();
            }
            if (j + 1 < g) {
                const Eigen::Vector2d d = scale * (field.at(i, j + 1) - field.at(i, j));
                grad.row((j + 1) * g + i) += d.transpose();
                grad.row(j * g + i) -= d.transpose();
            }
        }
    return grad;
}

std::string field_to_json(const DeformationField2D& field)
{
    field.validate();
    nlohmann::ordered_json j;
    j["grid_size"] = field.grid_size;
    j["max_offset"] = std::isfinite(field.max_offset) ? nlohmann::ordered_json(field.max_offset) : nullptr;
    std::vector<double> flat(field.offsets.data(), field.offsets.data() + field.offsets.size());
    j["offsets"] = flat;
    return j.dump() + "\n";
}

DeformationField2D field_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed deformation field: ") + e.what());
    }
    if (!j.contains("grid_size") || !j.contains("offsets"))
        throw Error("deformation field requires grid_size and offsets");
    const int g = j.at("grid_size").get<int>();
    const auto flat = j.at("offsets").get<std::vector<double>>();
    if (g < 2 || flat.size() != static_cast<size_t>(2 * g * g))
        throw Error("deformation field offsets do not match grid_size " + std::to_string(g));
    DeformationField2D f = DeformationField2D::zero(g, std::numeric_limits<double>::infinity());
    if (j.contains("max_offset") && !j.at("max_offset").is_null())
        f.max_offset = j.at("max_offset").get<double>();
    std::copy(flat.begin(), flat.end(), f.offsets.data());
    f.validate();
    return f;
}

void write_field(const std::filesystem::path& path, const DeformationField2D& field)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << field_to_json(field);
}

DeformationField2D read_field(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return field_from_json(ss.str());
}

} // namespace mvd
