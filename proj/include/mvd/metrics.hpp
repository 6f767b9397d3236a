#pragma once

#include "mvd/unproject.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvd {

/// Both metrics composite the images over white and compare RGB.
double psnr(const ImageRGBA& a, const ImageRGBA& b); // capped at 99
double ssim(const ImageRGBA& a, const ImageRGBA& b); // 11x11 Gaussian window, sigma 1.5

/// Area-uniform surface samples.
VertexMatrix sample_surface(const Mesh& mesh, int count, std::uint64_t seed);

struct ChamferResult {
    double chamfer = 0.0;   // (mean a->b + mean b->a) / 2, Euclidean
    double fscore = 0.0;
    double precision = 0.0; // fraction of a-samples within threshold of b
    double recall = 0.0;
};

inline constexpr double kDefaultFscoreThreshold = 0.2;

ChamferResult chamfer_fscore(const Mesh& a, const Mesh& b, int samples = 100000,
                             double threshold = kDefaultFscoreThreshold, std::uint64_t seed = 0);
ChamferResult chamfer_fscore_points(const VertexMatrix& a, const VertexMatrix& b,
                                    double threshold = kDefaultFscoreThreshold);

/// Mean over views of the per-pixel RGB distance between the hard render of
/// `mesh` and the view image, over pixels where both alphas exceed 0.5.
double ghosting_metric(const Mesh& mesh, std::span<const PosedImage> views);

/// IoU of the alpha > 0.5 masks; 1 when both are empty.
double silhouette_iou(const ImageRGBA& a, const ImageRGBA& b);

/// Exact Euclidean distance from each point to the nearest triangle of `surface`.
std::vector<double> distances_to_surface(const VertexMatrix& points, const Mesh& surface);
double mean_distance_to_surface(const VertexMatrix& points, const Mesh& surface);

struct EvalReport {
    std::vector<double> psnr;
    std::vector<double> ssim;
    std::vector<double> view_iou;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double chamfer = 0.0;
    double fscore = 0.0;
    double silhouette_iou = 0.0;
    std::optional<double> ghosting;

    std::string to_text() const;
    std::string to_json() const;
};

struct EvalOptions {
    int resolution = 256;
    int views = 24; // split evenly over elevations 0, 15, 30
    int samples = 100000;
    double fscore_threshold = kDefaultFscoreThreshold;
    std::uint64_t seed = 0;
};

std::vector<Camera> evaluation_cameras(int views, int resolution);

EvalReport evaluate(const Mesh& generated, const Mesh& gt, const EvalOptions& options = {});

} // namespace mvd
