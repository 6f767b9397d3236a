#pragma once

#include "mvd/camera.hpp"
#include "mvd/image.hpp"
#include "mvd/mesh.hpp"

#include <vector>

namespace mvd {

enum class RenderMode {
    hard, // z-buffered coverage, perspective-correct color interpolation
    soft, // sigmoid silhouette band and depth-softmax color aggregation
};

enum class Shading {
    vertex_color, // interpolated per-vertex RGB
    face_normal,  // flat camera-space normal encoded as 0.5 + 0.5 n
    none,         // coverage and depth only
};

struct SoftRasterParams {
    double sigma = 1.0;      // px^2; alpha = sigmoid(+-d^2 / sigma) at silhouette distance d
    double gamma_rel = 1e-2; // depth-softmax temperature as a fraction of the scene depth range
    double band_px = 4.0;    // silhouette band half-width
};

struct RenderOutput {
    ImageRGBA image;           // RGB + coverage alpha; uncovered pixels are transparent black
    std::vector<double> depth; // camera depth of the front surface, +inf where uncovered
    std::vector<int> face_id;  // front face, -1 where uncovered
};

struct RenderGradients {
    ColorMatrix colors;     // V x 4 (alpha column is always zero)
    VertexMatrix positions; // V x 3, empty unless requested
};

/// Rasterized state of one (mesh, camera) pair. Forward quantities are computed
/// at construction; the backward methods return gradients of <upstream, image>.
class RenderPass {
public:
    RenderPass(const Mesh& mesh, const Camera& camera, RenderMode mode, Shading shading = Shading::vertex_color,
               const SoftRasterParams& params = {});

    const RenderOutput& output() const { return output_; }
    const Camera& camera() const { return camera_; }
    RenderMode mode() const { return mode_; }

    /// Shades the stored fragments with different vertex colors. Geometry is reused.
    ImageRGBA shade(const ColorMatrix& colors) const;

    /// Exact gradient with respect to vertex colors (vertex_color shading).
    ColorMatrix backward_colors(const ImageGradient& upstream) const;

    /// Gradient with respect to vertex positions. Soft mode only.
    VertexMatrix backward_positions(const ImageGradient& upstream) const;

    /// Screen-space silhouette edges that border the background (soft mode).
    int exposed_edge_count() const { return static_cast<int>(edges_.size()); }

private:
    struct Fragment {
        int face;
        double bary[3]; // perspective-correct
        double depth;
        double weight;  // normalized depth-softmax weight (1 in hard mode)
    };
    struct SilhouetteEdge {
        int v0, v1;
        int face;
    };

    void rasterize();
    void build_band();
    void shade_into(const ColorMatrix* colors, ImageRGBA& image) const;
    Eigen::Vector3d face_shade(int face) const;
    void check_upstream(const ImageGradient& upstream) const;

    Mesh mesh_;
    Camera camera_;
    RenderMode mode_;
    Shading shading_;
    SoftRasterParams params_;
    double gamma_ = 1.0;

    std::vector<Projection> screen_;      // per vertex
    std::vector<Eigen::Vector3d> normal_rgb_; // per face, face_normal shading
    std::vector<int> pixel_begin_;        // CSR offsets into fragments_
    std::vector<Fragment> fragments_;     // front to back per pixel
    std::vector<SilhouetteEdge> edges_;
    std::vector<int> band_edge_;          // per pixel, -1 outside the band
    std::vector<double> band_t_;
    std::vector<double> band_dist_;
    RenderOutput output_;
};

RenderOutput render(const Mesh& mesh, const Camera& camera, RenderMode mode, const SoftRasterParams& params = {});

RenderGradients render_backward(const Mesh& mesh, const Camera& camera, RenderMode mode,
                                const ImageGradient& upstream, const SoftRasterParams& params = {},
                                bool want_positions = true);

/// Camera-space normals encoded to RGB, alpha = coverage.
ImageRGBA render_normal_map(const Mesh& mesh, const Camera& camera, RenderMode mode = RenderMode::hard,
                            const SoftRasterParams& params = {});

} // namespace mvd
