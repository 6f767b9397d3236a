#include "mvd/unproject.hpp"

#include "mvd/operators.hpp"
#include "mvd/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvd {

namespace {

constexpr double kAlphaGate = 0.5;

// Largest finite depth in the 3x3 pixel neighborhood around a continuous
// screen position; the max keeps grazing-but-visible vertices visible.
double neighborhood_depth(const RenderOutput& out, int w, int h, double sx, double sy)
{
    const int cx = static_cast<int>(std::floor(sx)), cy = static_cast<int>(std::floor(sy));
    double best = -std::numeric_limits<double>::infinity();
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (x < 0 || y < 0 || x >= w || y >= h)
                continue;
            const double d = out.depth[static_cast<size_t>(y) * w + x];
            if (std::isfinite(d))
                best = std::max(best, d);
        }
    return best;
}

} // namespace

Unprojector::Unprojector(const Mesh& mesh, std::span<const Camera> cameras, const UnprojectParams& params)
    : cameras_(cameras.begin(), cameras.end()), params_(params)
{
    if (cameras_.empty())
        throw Error("unprojection needs at least one view");
    if (!params_.view_scale.empty() && params_.view_scale.size() != cameras_.size())
        throw Error("view_scale must have one entry per view");
    mesh.validate();
    const int nv = mesh.vertex_count();
    adjacency_ = vertex_adjacency(nv, mesh.faces);
    const auto normals = vertex_normals(mesh);

    const size_t nviews = cameras_.size();
    weights_.assign(nviews, std::vector<double>(static_cast<size_t>(nv), 0.0));
    cosines_ = weights_;
    sample_x_ = weights_;
    sample_y_ = weights_;
    for (size_t k = 0; k < nviews; ++k) {
        const Camera& cam = cameras_[k];
        cam.validate();
        const RenderPass depth_pass(mesh, cam, RenderMode::hard, Shading::none);
        const RenderOutput& out = depth_pass.output();
        double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
        std::vector<Projection> proj(static_cast<size_t>(nv));
        for (int v = 0; v < nv; ++v) {
            proj[v] = project(mesh.vertex(v), cam);
            if (proj[v].in_front) {
                zmin = std::min(zmin, proj[v].depth);
                zmax = std::max(zmax, proj[v].depth);
            }
        }
        const double eps = params_.depth_eps_rel * (zmax > zmin ? zmax - zmin : 1.0);
        const double scale = params_.view_scale.empty() ? 1.0 : params_.view_scale[k];
        const Vec3 eye = cam.position();
        for (int v = 0; v < nv; ++v) {
            sample_x_[k][v] = proj[v].x - 0.5;
            sample_y_[k][v] = proj[v].y - 0.5;
            if (!proj[v].in_front)
                continue;
            const Vec3 to_eye = (eye - mesh.vertex(v)).normalized();
            const double c = normals[v].dot(to_eye);
            cosines_[k][v] = std::max(c, 0.0);
            if (c < params_.cos_threshold)
                continue;
            if (proj[v].x < 0 || proj[v].y < 0 || proj[v].x >= cam.width || proj[v].y >= cam.height)
                continue;
            const double front = neighborhood_depth(out, cam.width, cam.height, proj[v].x, proj[v].y);
            if (!std::isfinite(front) || proj[v].depth > front + eps)
                continue;
            weights_[k][v] = c * scale;
        }
    }
}

double Unprojector::max_cosine(int vertex) const
{
    double best = 0.0;
    for (size_t k = 0; k < cameras_.size(); ++k)
        if (weights_[k][vertex] > 0.0)
            best = std::max(best, cosines_[k][vertex]);
    return best;
}

void Unprojector::check_images(std::span<const ImageRGBA> images) const
{
    if (images.size() != cameras_.size())
        throw Error("expected " + std::to_string(cameras_.size()) + " images, got " + std::to_string(images.size()));
    for (size_t k = 0; k < images.size(); ++k)
        if (images[k].width() != cameras_[k].width || images[k].height() != cameras_[k].height)
            throw Error("image " + std::to_string(k) + " does not match its camera resolution");
}

Unprojector::Coverage Unprojector::gate(std::span<const ImageRGBA> images) const
{
    check_images(images);
    const int nv = vertex_count();
    Coverage cov;
    cov.gated = weights_;
    cov.total.assign(static_cast<size_t>(nv), 0.0);
    cov.covered.assign(static_cast<size_t>(nv), 0);
    for (size_t k = 0; k < images.size(); ++k)
        for (int v = 0; v < nv; ++v) {
            double& w = cov.gated[k][v];
            if (w <= 0.0)
                continue;
            if (sample_bilinear(images[k], sample_x_[k][v], sample_y_[k][v])[3] < kAlphaGate)
                w = 0.0;
        }
    // view order is fixed so the reduction is deterministic
    for (size_t k = 0; k < images.size(); ++k)
        for (int v = 0; v < nv; ++v)
            cov.total[v] += cov.gated[k][v];
    for (int v = 0; v < nv; ++v)
        cov.covered[v] = cov.total[v] > 0.0;
    return cov;
}

std::vector<char> Unprojector::covered(std::span<const ImageRGBA> images) const
{
    return gate(images).covered;
}

namespace {

/// Linear fill of uncovered vertices: repeated averaging over already-known
/// neighbors, then the mean covered value for anything still unreached.
/// `known_history` receives the known mask before every sweep (for the adjoint).
void diffuse(const std::vector<std::vector<int>>& adj, const std::vector<char>& covered, int sweeps,
             ColorMatrix& values, std::vector<std::vector<char>>* known_history)
{
    const int nv = static_cast<int>(adj.size());
    std::vector<char> known = covered;
    ColorMatrix next = values;
    for (int s = 0; s < sweeps; ++s) {
        if (known_history)
            known_history->push_back(known);
        std::vector<char> now_known = known;
        bool changed = false;
        for (int v = 0; v < nv; ++v) {
            if (covered[v])
                continue;
            Eigen::RowVector4d sum = Eigen::RowVector4d::Zero();
            int count = 0;
            for (int n : adj[v])
                if (known[n]) {
                    sum += values.row(n);
                    ++count;
                }
            if (count > 0) {
                next.row(v) = sum / count;
                now_known[v] = 1;
                changed = true;
            }
        }
        values = next;
        known.swap(now_known);
        if (!changed)
            break;
    }
    if (known_history)
        known_history->push_back(known);
    Eigen::RowVector4d mean = Eigen::RowVector4d::Zero();
    int ncov = 0;
    for (int v = 0; v < nv; ++v)
        if (covered[v]) {
            mean += values.row(v);
            ++ncov;
        }
    if (ncov > 0)
        mean /= ncov;
    for (int v = 0; v < nv; ++v)
        if (!known[v])
            values.row(v) = mean;
}

} // namespace

ColorMatrix Unprojector::colors(std::span<const ImageRGBA> images) const
{
    const Coverage cov = gate(images);
    const int nv = vertex_count();
    if (std::none_of(cov.covered.begin(), cov.covered.end(), [](char c) { return c != 0; }))
        throw Error("no view covers the mesh");
    ColorMatrix out = ColorMatrix::Zero(nv, 4);
    for (size_t k = 0; k < images.size(); ++k)
        for (int v = 0; v < nv; ++v) {
            const double w = cov.gated[k][v];
            if (w > 0.0)
                out.row(v) += w * sample_bilinear(images[k], sample_x_[k][v], sample_y_[k][v]).transpose();
        }
    for (int v = 0; v < nv; ++v)
        if (cov.covered[v])
            out.row(v) /= cov.total[v];
    diffuse(adjacency_, cov.covered, params_.fallback_iterations, out, nullptr);
    out.col(3).setOnes();
    return out;
}

std::vector<ImageGradient> Unprojector::backward(std::span<const ImageRGBA> images, const ColorMatrix& upstream) const
{
    const Coverage cov = gate(images);
    const int nv = vertex_count();
    if (upstream.rows() != nv)
        throw Error("upstream color gradient has the wrong vertex count");

    // Replay the fallback sweeps to get their known masks, then run them backward.
    std::vector<std::vector<char>> history;
    {
        ColorMatrix scratch = ColorMatrix::Zero(nv, 4);
        diffuse(adjacency_, cov.covered, params_.fallback_iterations, scratch, &history);
    }
    ColorMatrix g = upstream;
    g.col(3).setZero(); // output alpha is constant
    const std::vector<char>& final_known = history.back();
    int ncov = 0;
    for (int v = 0; v < nv; ++v)
        ncov += cov.covered[v] ? 1 : 0;
    Eigen::RowVector4d unreached = Eigen::RowVector4d::Zero();
    for (int v = 0; v < nv; ++v)
        if (!final_known[v]) {
            unreached += g.row(v);
            g.row(v).setZero();
        }
    if (ncov > 0 && !unreached.isZero(0.0))
        for (int v = 0; v < nv; ++v)
            if (cov.covered[v])
                g.row(v) += unreached / ncov;
    for (int s = static_cast<int>(history.size()) - 2; s >= 0; --s) {
        const std::vector<char>& known_before = history[static_cast<size_t>(s)];
        const std::vector<char>& known_after = history[static_cast<size_t>(s) + 1];
        ColorMatrix prev = ColorMatrix::Zero(nv, 4);
        for (int v = 0; v < nv; ++v) {
            if (cov.covered[v]) {
                prev.row(v) += g.row(v);
                continue;
            }
            if (!known_after[v])
                continue;
            int count = 0;
            for (int n : adjacency_[v])
                count += known_before[n] ? 1 : 0;
            if (count == 0) {
                prev.row(v) += g.row(v); // value carried over unchanged
                continue;
            }
            for (int n : adjacency_[v])
                if (known_before[n])
                    prev.row(n) += g.row(v) / count;
        }
        g = prev;
    }

    std::vector<ImageGradient> grads;
    for (size_t k = 0; k < images.size(); ++k) {
        ImageGradient grad(images[k].width(), images[k].height());
        for (int v = 0; v < nv; ++v) {
            const double w = cov.gated[k][v];
            if (w <= 0.0 || !cov.covered[v])
                continue;
            const Eigen::Vector4d value = (w / cov.total[v]) * g.row(v).transpose();
            if (!value.isZero(0.0))
                splat_bilinear(grad, sample_x_[k][v], sample_y_[k][v], value);
        }
        grads.push_back(std::move(grad));
    }
    return grads;
}

Mesh unproject(const Mesh& mesh, std::span<const PosedImage> views, const UnprojectParams& params)
{
    std::vector<Camera> cams;
    std::vector<ImageRGBA> images;
    for (const auto& v : views) {
        cams.push_back(v.camera);
        images.push_back(v.image);
    }
    const Unprojector unprojector(mesh, cams, params);
    Mesh out = mesh;
    out.colors = unprojector.colors(images);
    return out;
}

std::vector<ImageGradient> unproject_backward(const Mesh& mesh, std::span<const PosedImage> views,
                                              const ColorMatrix& upstream, const UnprojectParams& params)
{
    std::vector<Camera> cams;
    std::vector<ImageRGBA> images;
    for (const auto& v : views) {
        cams.push_back(v.camera);
        images.push_back(v.image);
    }
    return Unprojector(mesh, cams, params).backward(images, upstream);
}

} // namespace mvd
