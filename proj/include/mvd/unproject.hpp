#pragma once

#include "mvd/camera.hpp"
#include "mvd/image.hpp"
#include "mvd/mesh.hpp"

#include <span>
#include <vector>

namespace mvd {

struct PosedImage {
    ImageRGBA image;
    Camera camera;
};

struct UnprojectParams {
    double cos_threshold = 0.1;   // view weights below this cosine are dropped
    double depth_eps_rel = 1e-3;  // occlusion slack as a fraction of the view's depth range
    int fallback_iterations = 50; // neighbor-averaging sweeps for uncovered vertices
    std::vector<double> view_scale; // optional per-view weight multipliers (default 1)
};

/// Geometry-only part of unprojection: per view and vertex, the cosine weight
/// (zero when occluded or grazing) and the image sampling position. Reusable
/// across any number of image sets taken from the same cameras.
class Unprojector {
public:
    Unprojector(const Mesh& mesh, std::span<const Camera> cameras, const UnprojectParams& params = {});

    int view_count() const { return static_cast<int>(cameras_.size()); }
    int vertex_count() const { return static_cast<int>(adjacency_.size()); }

    /// Geometric weight of vertex v in view k (cosine, visibility and view scale).
    double weight(int view, int vertex) const { return weights_[view][vertex]; }
    /// Largest unscaled cosine weight over the views that see the vertex.
    double max_cosine(int vertex) const;

    /// RGBA vertex colors (alpha = 1). Throws when no vertex is covered.
    ColorMatrix colors(std::span<const ImageRGBA> images) const;

    /// Gradient of <upstream, colors(images)> with respect to every image.
    std::vector<ImageGradient> backward(std::span<const ImageRGBA> images, const ColorMatrix& upstream) const;

    /// Vertices that received a direct (non-fallback) color for these images.
    std::vector<char> covered(std::span<const ImageRGBA> images) const;

private:
    struct Coverage {
        std::vector<std::vector<double>> gated; // weights after the alpha test
        std::vector<double> total;
        std::vector<char> covered;
    };
    Coverage gate(std::span<const ImageRGBA> images) const;
    void check_images(std::span<const ImageRGBA> images) const;

    std::vector<Camera> cameras_;
    UnprojectParams params_;
    std::vector<std::vector<double>> weights_;  // [view][vertex]
    std::vector<std::vector<double>> cosines_;  // [view][vertex], before visibility and scaling
    std::vector<std::vector<double>> sample_x_; // image sampling coordinates
    std::vector<std::vector<double>> sample_y_;
    std::vector<std::vector<int>> adjacency_;
};

/// Returns a copy of `mesh` colored from the posed images.
Mesh unproject(const Mesh& mesh, std::span<const PosedImage> views, const UnprojectParams& params = {});

std::vector<ImageGradient> unproject_backward(const Mesh& mesh, std::span<const PosedImage> views,
                                              const ColorMatrix& upstream, const UnprojectParams& params = {});

} // namespace mvd
