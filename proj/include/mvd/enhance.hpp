#pragma once

#include "mvd/deform2d.hpp"
#include "mvd/deform3d.hpp"
#include "mvd/optim.hpp"
#include "mvd/raster.hpp"
#include "mvd/unproject.hpp"

#include <span>
#include <vector>

namespace mvd {

/// w1..w3 weight the appearance loop (RGB MSE, mask, 2D smoothness);
/// w4..w6 the fidelity loop (RGB MSE, mask, Laplacian).
struct LossWeights {
    double w1 = 1.0;
    double w2 = 1.0;
    double w3 = 0.001;
    double w4 = 1.0;
    double w5 = 0.1;
    double w6 = 1e5;

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

/// Masked RGB MSE (pixels where both alphas exceed 0.5) and all-pixel alpha MSE,
/// each a mean per element, plus their gradients.
struct ImageLoss {
    double mse = 0.0;
    double mask = 0.0;
    ImageGradient d_render; // of w_mse * mse + w_mask * mask
    ImageGradient d_target;
};
ImageLoss image_loss(const ImageRGBA& render, const ImageRGBA& target, double w_mse, double w_mask,
                     bool want_target_gradient = false);

/// Mean over vertices of |(L V)_i|^2 with the degree-normalized uniform
/// Laplacian; the regularizer used inside the optimization loops.
class LaplacianTerm {
public:
    explicit LaplacianTerm(const Mesh& topology);
    double value(const VertexMatrix& v) const;
    VertexMatrix gradient(const VertexMatrix& v) const;

private:
    SparseMatrix l_, lt_;
    double scale_ = 0.0;
};

struct AppearanceOptions {
    int grid_size = 20;
    double max_offset_frac = 0.1; // field bound as a fraction of min(W, H)
    UnprojectParams unproject;
};

struct AppearanceResult {
    Mesh colored; // M_c
    std::vector<DeformationField2D> fields;
    std::vector<ImageRGBA> deformed;
    LossLog log;
};

AppearanceResult enhance_appearance(const Mesh& mesh, std::span<const PosedImage> views, const LossWeights& weights,
                                    const OptimConfig& config, const AppearanceOptions& options = {});

struct CameraSearchOptions {
    double coarse_min = -90.0;
    double coarse_max = 90.0;
    double coarse_step = 3.0;
    double fine_radius = 3.0;
    double fine_step = 1.0;
    int pyramid_levels = 3;
    OptimConfig refine{100, 0.05};   // elevation steps in degrees
    double distance_step_scale = 0.1; // distance step = scale * refine.step_size
    SoftRasterParams soft;
};

struct CameraEstimate {
    Camera camera;
    double coarse_elevation = 0.0;
    double grid_elevation = 0.0; // after the fine scan, before refinement
    double grid_score = 0.0;
    LossLog log;
};

/// Multi-scale RGBA MSE with equal weights over a `levels`-deep 2x pyramid.
double multiscale_mse(const ImageRGBA& a, const ImageRGBA& b, int levels = 3);

/// Grid-search ordering: lower score wins, equal scores go to the smaller |elevation|.
bool better_elevation(double elevation, double score, double best_elevation, double best_score);

CameraEstimate estimate_camera(const Mesh& mesh, const ImageRGBA& input, double distance, double fov_deg,
                               const LossWeights& weights = {}, const CameraSearchOptions& options = {});

/// d/d(elevation in degrees) and d/d(distance) of the world motion equivalent to
/// moving the camera: vertex velocities for each parameter.
VertexMatrix elevation_velocity(const VertexMatrix& v, const Camera& camera);
VertexMatrix distance_velocity(const VertexMatrix& v, const Camera& camera);

enum class DeformerKind { jacobian, vertex, grid3d };

struct FidelityOptions {
    DeformerKind deformer = DeformerKind::jacobian;
    int grid_resolution = 8;
    SoftRasterParams soft;
    double input_view_scale = 3.0;
    UnprojectParams unproject;
    /// Enhanced multiview images to blend with the input in the final unprojection.
    /// When empty, the existing vertex colors act as one unit-weight source.
    std::vector<PosedImage> views;
};

struct FidelityResult {
    Mesh deformed; // M_d, colors of M_c
    Mesh output;   // M_out
    LossLog log;
};

/// Objective of the fidelity loop over vertex positions.
class FidelityObjective final : public PositionObjective {
public:
    FidelityObjective(const Mesh& colored, const ImageRGBA& input, const Camera& camera, const LossWeights& weights,
                      const SoftRasterParams& soft = {});
    LossTerms evaluate(const VertexMatrix& positions, VertexMatrix& gradient) override;

private:
    Mesh mesh_;
    ImageRGBA input_;
    Camera camera_;
    LossWeights weights_;
    SoftRasterParams soft_;
    LaplacianTerm lap_;
};

FidelityResult enhance_fidelity(const Mesh& mesh, const ImageRGBA& input, const Camera& camera,
                                const LossWeights& weights, const OptimConfig& config,
                                const FidelityOptions& options = {});

/// Colors `mesh` from the input view (scaled weight) plus either `views` or its
/// own current colors.
Mesh unproject_input(const Mesh& mesh, const PosedImage& input, std::span<const PosedImage> views,
                     double input_scale, const UnprojectParams& params = {});

struct RefineWeights {
    double mse = 1.0;
    double mask = 1.0;
    double expansion = 0.1;
    double laplacian = 1e5;

    bool operator==(const RefineWeights&) const = default;
};

struct RefineOptions {
    RefineWeights weights;
    double expansion_delta = 0.0;
    SoftRasterParams soft;
};

struct RefineResult {
    Mesh mesh;
    LossLog log;
};

RefineResult refine_geometry(const Mesh& mesh, std::span<const PosedImage> normal_views, const OptimConfig& config,
                             const RefineOptions& options = {});

} // namespace mvd
