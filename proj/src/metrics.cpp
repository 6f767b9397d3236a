#include "mvd/metrics.hpp"

#include "mvd/raster.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace mvd {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace {

using BPoint = bg::model::point<double, 3, bg::cs::cartesian>;
using BBox = bg::model::box<BPoint>;
constexpr double kPsnrCap = 99.0;

void require_same(const ImageRGBA& a, const ImageRGBA& b, const char* what)
{
    if (!a.same_size(b) || a.empty())
        throw Error(std::string(what) + " needs two nonempty images of equal size");
}

// Composited RGB as three planes.
std::array<std::vector<double>, 3> planes(const ImageRGBA& img)
{
    const ImageRGBA white = composite_over_white(img);
    std::array<std::vector<double>, 3> out;
    for (int c = 0; c < 3; ++c) {
        out[c].resize(static_cast<size_t>(img.pixel_count()));
        for (int p = 0; p < img.pixel_count(); ++p)
            out[c][p] = white.data()[4 * static_cast<size_t>(p) + c];
    }
    return out;
}

// Separable valid-region filtering with a normalized 1D kernel.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k)
{
    const int r = static_cast<int>(k.size());
    const int ow = w - r + 1, oh = h - r + 1;
    std::vector<double> tmp(static_cast<size_t>(ow) * h), out(static_cast<size_t>(ow) * oh);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < r; ++i)
                s += k[i] * in[static_cast<size_t>(y) * w + x + i];
            tmp[static_cast<size_t>(y) * ow + x] = s;
        }
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < r; ++i)
                s += k[i] * tmp[static_cast<size_t>(y + i) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = s;
        }
    return out;
}

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0)
        return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3)
        return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0)
        return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6)
        return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0)
        return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

} // namespace

double psnr(const ImageRGBA& a, const ImageRGBA& b)
{
    require_same(a, b, "PSNR");
    const ImageRGBA wa = composite_over_white(a), wb = composite_over_white(b);
    double sse = 0.0;
    for (int p = 0; p < a.pixel_count(); ++p)
        for (int c = 0; c < 3; ++c) {
            const double d = wa.data()[4 * static_cast<size_t>(p) + c] - wb.data()[4 * static_cast<size_t>(p) + c];
            sse += d * d;
        }
    const double mse = sse / (3.0 * a.pixel_count());
    if (mse <= 0.0)
        return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageRGBA& a, const ImageRGBA& b)
{
    require_same(a, b, "SSIM");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const int w = a.width(), h = a.height();
    if (w < kWin || h < kWin)
        throw Error("SSIM needs images of at least 11x11 pixels");
    std::vector<double> k(kWin);
    double ksum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double x = i - kWin / 2;
        k[i] = std::exp(-x * x / (2 * kSigma * kSigma));
        ksum += k[i];
    }
    for (double& v : k)
        v /= ksum;
    const auto pa = planes(a), pb = planes(b);
    double total = 0.0;
    size_t count = 0;
    for (int c = 0; c < 3; ++c) {
        const auto& x = pa[c];
        const auto& y = pb[c];
        std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
        for (size_t i = 0; i < x.size(); ++i) {
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, w, h, k), my = filter_valid(y, w, h, k);
        const auto sxx = filter_valid(xx, w, h, k), syy = filter_valid(yy, w, h, k), sxy = filter_valid(xy, w, h, k);
        for (size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
            total += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
                     ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

VertexMatrix sample_surface(const Mesh& mesh, int count, std::uint64_t seed)
{
    if (count <= 0)
        throw Error("sample count must be positive");
    if (mesh.face_count() == 0)
        throw Error("cannot sample a mesh without faces");
    std::vector<double> cdf(static_cast<size_t>(mesh.face_count()));
    double acc = 0.0;
    for (int f = 0; f < mesh.face_count(); ++f) {
        acc += face_area(mesh, f);
        cdf[f] = acc;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    VertexMatrix out(count, 3);
    for (int i = 0; i < count; ++i) {
        const double target = u(rng) * acc;
        const int f = static_cast<int>(
            std::min<std::ptrdiff_t>(std::lower_bound(cdf.begin(), cdf.end(), target) - cdf.begin(), cdf.size() - 1));
        double r1 = u(rng), r2 = u(rng);
        if (r1 + r2 > 1.0) {
            r1 = 1.0 - r1;
            r2 = 1.0 - r2;
        }
        const Vec3 a = mesh.vertex(mesh.faces(f, 0)), b = mesh.vertex(mesh.faces(f, 1)), c = mesh.vertex(mesh.faces(f, 2));
        out.row(i) = (a + r1 * (b - a) + r2 * (c - a)).transpose();
    }
    return out;
}

namespace {

// Nearest-neighbor distance from every row of `query` to the rows of `ref`.
std::vector<double> nearest_distances(const VertexMatrix& query, const VertexMatrix& ref)
{
    using Value = std::pair<BPoint, int>;
    std::vector<Value> values;
    values.reserve(static_cast<size_t>(ref.rows()));
    for (Eigen::Index i = 0; i < ref.rows(); ++i)
        values.emplace_back(BPoint(ref(i, 0), ref(i, 1), ref(i, 2)), static_cast<int>(i));
    const bgi::rtree<Value, bgi::rstar<16>> tree(values.begin(), values.end());
    std::vector<double> out(static_cast<size_t>(query.rows()));
    std::vector<Value> hit;
    for (Eigen::Index i = 0; i < query.rows(); ++i) {
        hit.clear();
        tree.query(bgi::nearest(BPoint(query(i, 0), query(i, 1), query(i, 2)), 1), std::back_inserter(hit));
        out[i] = (query.row(i) - ref.row(hit.front().second)).norm();
    }
    return out;
}

} // namespace

ChamferResult chamfer_fscore_points(const VertexMatrix& a, const VertexMatrix& b, double threshold)
{
    if (a.rows() == 0 || b.rows() == 0)
        throw Error("chamfer distance needs nonempty point sets");
    if (!(threshold > 0.0))
        throw Error("F-score threshold must be positive");
    const auto dab = nearest_distances(a, b), dba = nearest_distances(b, a);
    ChamferResult r;
    double sab = 0.0, sba = 0.0;
    size_t pa = 0, pb = 0;
    for (double d : dab) {
        sab += d;
        pa += d < threshold ? 1 : 0;
    }
    for (double d : dba) {
        sba += d;
        pb += d < threshold ? 1 : 0;
    }
    r.chamfer = 0.5 * (sab / dab.size() + sba / dba.size());
    r.precision = static_cast<double>(pa) / dab.size();
    r.recall = static_cast<double>(pb) / dba.size();
    r.fscore = r.precision + r.recall > 0.0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

ChamferResult chamfer_fscore(const Mesh& a, const Mesh& b, int samples, double threshold, std::uint64_t seed)
{
    return chamfer_fscore_points(sample_surface(a, samples, seed), sample_surface(b, samples, seed), threshold);
}

double ghosting_metric(const Mesh& mesh, std::span<const PosedImage> views)
{
    double total = 0.0;
    int used = 0;
    for (const auto& view : views) {
        const ImageRGBA r = render(mesh, view.camera, RenderMode::hard).image;
        if (!r.same_size(view.image))
            throw Error("ghosting metric: view image does not match its camera");
        double sum = 0.0;
        long n = 0;
        for (int p = 0; p < r.pixel_count(); ++p) {
            const double* x = r.data().data() + 4 * static_cast<size_t>(p);
            const double* y = view.image.data().data() + 4 * static_cast<size_t>(p);
            if (x[3] > 0.5 && y[3] > 0.5) {
                sum += std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) +
                                 (x[2] - y[2]) * (x[2] - y[2]));
                ++n;
            }
        }
        if (n > 0) {
            total += sum / n;
            ++used;
        }
    }
    if (used == 0)
        throw Error("ghosting metric: no foreground overlap in any view");
    return total / used;
}

double silhouette_iou(const ImageRGBA& a, const ImageRGBA& b)
{
    require_same(a, b, "silhouette IoU");
    long inter = 0, uni = 0;
    for (int p = 0; p < a.pixel_count(); ++p) {
        const bool x = a.data()[4 * static_cast<size_t>(p) + 3] > 0.5;
        const bool y = b.data()[4 * static_cast<size_t>(p) + 3] > 0.5;
        inter += (x && y) ? 1 : 0;
        uni += (x || y) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

std::vector<double> distances_to_surface(const VertexMatrix& points, const Mesh& surface)
{
    if (surface.face_count() == 0)
        throw Error("distance to surface needs faces");
    using Value = std::pair<BBox, int>;
    std::vector<Value> boxes;
    for (int f = 0; f < surface.face_count(); ++f) {
        Vec3 lo = surface.vertex(surface.faces(f, 0)), hi = lo;
        for (int k = 1; k < 3; ++k) {
            lo = lo.cwiseMin(surface.vertex(surface.faces(f, k)));
            hi = hi.cwiseMax(surface.vertex(surface.faces(f, k)));
        }
        boxes.emplace_back(BBox(BPoint(lo.x(), lo.y(), lo.z()), BPoint(hi.x(), hi.y(), hi.z())), f);
    }
    const bgi::rtree<Value, bgi::rstar<16>> tree(boxes.begin(), boxes.end());
    std::vector<double> out(static_cast<size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const Vec3 p = points.row(i).transpose();
        double best = std::numeric_limits<double>::infinity();
        // Boxes arrive in increasing box distance, a lower bound on the triangle distance.
        for (auto it = tree.qbegin(bgi::nearest(BPoint(p.x(), p.y(), p.z()), static_cast<unsigned>(boxes.size())));
             it != tree.qend(); ++it) {
            const auto& lo = it->first.min_corner();
            const auto& hi = it->first.max_corner();
            const Vec3 l(bg::get<0>(lo), bg::get<1>(lo), bg::get<2>(lo));
            const Vec3 h(bg::get<0>(hi), bg::get<1>(hi), bg::get<2>(hi));
            const double box_dist = (l - p).cwiseMax(p - h).cwiseMax(0.0).norm();
            if (box_dist > best)
                break;
            const int f = it->second;
            const Vec3 q = closest_on_triangle(p, surface.vertex(surface.faces(f, 0)),
                                               surface.vertex(surface.faces(f, 1)), surface.vertex(surface.faces(f, 2)));
            best = std::min(best, (q - p).norm());
        }
        out[i] = best;
    }
    return out;
}

double mean_distance_to_surface(const VertexMatrix& points, const Mesh& surface)
{
    const auto d = distances_to_surface(points, surface);
    if (d.empty())
        return 0.0;
    double s = 0.0;
    for (double v : d)
        s += v;
    return s / d.size();
}

std::vector<Camera> evaluation_cameras(int views, int resolution)
{
    if (views <= 0)
        throw Error("evaluation needs at least one view");
    constexpr double elevations[3] = {0.0, 15.0, 30.0};
    const int per = (views + 2) / 3;
    std::vector<Camera> out;
    for (int i = 0; i < views; ++i) {
        Camera c;
        c.elevation_deg = elevations[i / per];
        c.azimuth_deg = 360.0 * (i % per) / per;
        c.width = c.height = resolution;
        out.push_back(c);
    }
    return out;
}

EvalReport evaluate(const Mesh& generated, const Mesh& gt, const EvalOptions& options)
{
    if (!generated.has_colors() || !gt.has_colors())
        throw Error("evaluation needs colored meshes");
    EvalReport r;
    for (const Camera& cam : evaluation_cameras(options.views, options.resolution)) {
        const ImageRGBA a = render(generated, cam, RenderMode::hard).image;
        const ImageRGBA b = render(gt, cam, RenderMode::hard).image;
        r.psnr.push_back(psnr(a, b));
        r.ssim.push_back(ssim(a, b));
        r.view_iou.push_back(silhouette_iou(a, b));
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v)
            s += x;
        return v.empty() ? 0.0 : s / v.size();
    };
    r.mean_psnr = mean(r.psnr);
    r.mean_ssim = mean(r.ssim);
    r.silhouette_iou = mean(r.view_iou);
    const ChamferResult c = chamfer_fscore(generated, gt, options.samples, options.fscore_threshold, options.seed);
    r.chamfer = c.chamfer;
    r.fscore = c.fscore;
    return r;
}

std::string EvalReport::to_text() const
{
    std::ostringstream out;
    out << std::setprecision(10);
    out << "mean_psnr = " << mean_psnr << '\n';
    out << "mean_ssim = " << mean_ssim << '\n';
    out << "chamfer = " << chamfer << '\n';
    out << "fscore = " << fscore << '\n';
    out << "silhouette_iou = " << silhouette_iou << '\n';
    if (ghosting)
        out << "ghosting = " << *ghosting << '\n';
    for (size_t i = 0; i < psnr.size(); ++i)
        out << "view_" << i << "_psnr = " << psnr[i] << '\n' << "view_" << i << "_ssim = " << ssim[i] << '\n';
    return out.str();
}

std::string EvalReport::to_json() const
{
    nlohmann::ordered_json j;
    j["mean_psnr"] = mean_psnr;
    j["mean_ssim"] = mean_ssim;
    j["chamfer"] = chamfer;
    j["fscore"] = fscore;
    j["silhouette_iou"] = silhouette_iou;
    j["ghosting"] = ghosting ? nlohmann::ordered_json(*ghosting) : nullptr;
    j["psnr"] = psnr;
    j["ssim"] = ssim;
    j["view_iou"] = view_iou;
    // Neural metrics are not computed; their keys are reserved.
    j["lpips"] = nullptr;
    j["clip_similarity"] = nullptr;
    j["fid"] = nullptr;
    return j.dump(2) + "\n";
}

} // namespace mvd
