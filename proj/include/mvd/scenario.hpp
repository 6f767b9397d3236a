#pragma once

#include "mvd/deform2d.hpp"
#include "mvd/unproject.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mvd {

enum class Shape { sphere, torus, blob, cube };
enum class ColorPattern { checker, gradient, spots };

Shape parse_shape(const std::string& name);
ColorPattern parse_pattern(const std::string& name);
std::string to_string(Shape shape);
std::string to_string(ColorPattern pattern);

/// Icosphere with `subdivisions` 4-way splits (10 * 4^s + 2 vertices) on the unit sphere.
Mesh make_icosphere(int subdivisions);

/// Watertight colored mesh centered at the origin with max |coordinate| = 1.
/// `subdivisions` <= 6.
Mesh make_gt_mesh(Shape shape, int subdivisions, ColorPattern pattern, std::uint64_t seed);

/// Hard renders at the six default poses.
std::vector<PosedImage> render_views(const Mesh& mesh, int resolution);
std::vector<PosedImage> render_normal_views(const Mesh& mesh, int resolution);

struct PerturbedViews {
    std::vector<PosedImage> views;
    std::vector<DeformationField2D> fields;
};

/// Warps every view by a random smooth G x G field whose largest offset
/// component equals `max_offset_px`.
PerturbedViews perturb_views(std::span<const PosedImage> views, double max_offset_px, std::uint64_t seed,
                             int grid_size = 20);

enum class DegradeMode { decimate, smooth, blur_colors, shape_offset };
DegradeMode parse_degrade_mode(const std::string& name);

struct Degraded {
    Mesh mesh;
    VertexMatrix displacement; // shape_offset only: new - old positions
};

/// `amount`: removed vertex fraction (decimate), iteration count (smooth,
/// blur_colors) or displacement bound as a fraction of the bbox diagonal (shape_offset).
/// A nonzero `fixed_axis` removes that component from the shape offset.
Degraded degrade_mesh(const Mesh& mesh, DegradeMode mode, double amount, std::uint64_t seed,
                      const Vec3& fixed_axis = Vec3::Zero());

struct ScenarioOptions {
    Shape shape = Shape::sphere;
    ColorPattern pattern = ColorPattern::checker;
    int subdivisions = 5;
    int resolution = 256;
    double max_offset_px = 4.0;
    int grid_size = 20;
    double shape_offset = 0.05;
    bool offset_in_view_plane = true; // no offset component along the input view axis
    int blur_iterations = 2;
    double input_elevation = 10.0;
};

/// Named presets: sphere, torus, blob, cube.
ScenarioOptions scenario_preset(const std::string& name);

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    ScenarioOptions options;
    Mesh gt_mesh;
    std::vector<PosedImage> clean_views;
    std::vector<PosedImage> views; // perturbed
    std::vector<DeformationField2D> injected_fields;
    std::vector<PosedImage> normal_views;
    Mesh initial_mesh;
    VertexMatrix shape_displacement;
    PosedImage input;
};

Scenario make_scenario(const std::string& name, std::uint64_t seed);
Scenario make_scenario(const std::string& name, const ScenarioOptions& options, std::uint64_t seed);

/// Directory layout: manifest.json, gt_mesh.ply, initial_mesh.ply, view_K.png,
/// clean_view_K.png, normal_K.png, field_K.json, input.png, displacement.json.
void write_scenario(const std::filesystem::path& dir, const Scenario& scenario);
Scenario read_scenario(const std::filesystem::path& dir);

} // namespace mvd
