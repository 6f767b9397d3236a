#include "mvd/raster.hpp"

#include "mvd/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace mvd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Fragments further than this many temperatures behind the front surface carry
// less than exp(-10) of the softmax mass and are dropped.
constexpr double kSoftmaxCutoff = 10.0;
// Offset used to probe either side of a silhouette edge for background.
constexpr double kExposureProbePx = 1.5;

template <typename T>
struct FragmentEval {
    T bary[3];
    T depth;
};

/// Perspective-correct barycentrics and depth of the pixel center (px, py)
/// inside the projected triangle (x, y, z).
template <typename T>
FragmentEval<T> eval_fragment(const T (&x)[3], const T (&y)[3], const T (&z)[3], double px, double py)
{
    const T area = (x[1] - x[0]) * (y[2] - y[0]) - (y[1] - y[0]) * (x[2] - x[0]);
    auto edge = [&](int a, int b) { return (x[b] - x[a]) * (py - y[a]) - (y[b] - y[a]) * (px - x[a]); };
    const T l[3] = {edge(1, 2) / area, edge(2, 0) / area, edge(0, 1) / area};
    const T w[3] = {l[0] / z[0], l[1] / z[1], l[2] / z[2]};
    const T sum = w[0] + w[1] + w[2];
    FragmentEval<T> out;
    for (int i = 0; i < 3; ++i)
        out.bary[i] = w[i] / sum;
    out.depth = 1.0 / sum;
    return out;
}

template <typename T>
struct EdgeEval {
    T t;     // clamped segment parameter of the closest point
    T dist2; // squared screen distance
};

template <typename T>
EdgeEval<T> eval_edge(const T& ax, const T& ay, const T& bx, const T& by, double px, double py)
{
    const T dx = bx - ax, dy = by - ay;
    const T len2 = dx * dx + dy * dy;
    T t = ((px - ax) * dx + (py - ay) * dy) / len2;
    if (value_of(t) < 0.0)
        t = T(0.0);
    else if (value_of(t) > 1.0)
        t = T(1.0);
    const T cx = ax + t * dx - px, cy = ay + t * dy - py;
    return {t, cx * cx + cy * cy};
}

/// Weight of the second endpoint after perspective correction of a screen-space parameter.
template <typename T>
T perspective_edge_weight(const T& t, const T& za, const T& zb)
{
    const T wa = (1.0 - t) / za, wb = t / zb;
    return wb / (wa + wb);
}

double sigmoid(double x)
{
    return 1.0 / (1.0 + std::exp(-x));
}

void require_same_size(const ImageGradient& upstream, const Camera& camera)
{
    if (upstream.width() != camera.width || upstream.height() != camera.height)
        throw Error("upstream gradient is " + std::to_string(upstream.width()) + "x" +
                    std::to_string(upstream.height()) + ", render is " + std::to_string(camera.width) + "x" +
                    std::to_string(camera.height));
}

} // namespace

RenderPass::RenderPass(const Mesh& mesh, const Camera& camera, RenderMode mode, Shading shading,
                       const SoftRasterParams& params)
    : mesh_(mesh), camera_(camera), mode_(mode), shading_(shading), params_(params)
{
    camera_.validate();
    if (shading_ == Shading::vertex_color && !mesh_.has_colors() && mesh_.face_count() > 0)
        throw Error("color render requested for a mesh without vertex colors");
    if (!(params_.sigma > 0.0) || !(params_.gamma_rel > 0.0) || !(params_.band_px > 0.0))
        throw Error("soft raster parameters must be positive");

    screen_.resize(static_cast<size_t>(mesh_.vertex_count()));
    double zmin = kInf, zmax = -kInf;
    for (int v = 0; v < mesh_.vertex_count(); ++v) {
        screen_[v] = project(mesh_.vertex(v), camera_);
        if (screen_[v].in_front) {
            zmin = std::min(zmin, screen_[v].depth);
            zmax = std::max(zmax, screen_[v].depth);
        }
    }
    gamma_ = params_.gamma_rel * (zmax > zmin ? zmax - zmin : 1.0);

    if (shading_ == Shading::face_normal) {
        normal_rgb_.resize(static_cast<size_t>(mesh_.face_count()));
        for (int f = 0; f < mesh_.face_count(); ++f)
            normal_rgb_[f] = (0.5 * to_camera_axes(face_normal(mesh_, f), camera_)).array() + 0.5;
    }

    rasterize();
    if (mode_ == RenderMode::soft)
        build_band();

    const int npix = camera_.width * camera_.height;
    output_.image = ImageRGBA(camera_.width, camera_.height);
    output_.depth.assign(static_cast<size_t>(npix), kInf);
    output_.face_id.assign(static_cast<size_t>(npix), -1);
    for (int p = 0; p < npix; ++p)
        if (pixel_begin_[p] < pixel_begin_[p + 1]) {
            output_.depth[p] = fragments_[pixel_begin_[p]].depth;
            output_.face_id[p] = fragments_[pixel_begin_[p]].face;
        }
    shade_into(shading_ == Shading::vertex_color ? &mesh_.colors : nullptr, output_.image);
}

void RenderPass::rasterize()
{
    const int w = camera_.width, h = camera_.height;
    const int npix = w * h;
    struct Raw {
        int pixel;
        Fragment frag;
    };
    std::vector<Raw> raw;
    std::vector<double> zbuf;
    std::vector<int> zface;
    const bool hard = mode_ == RenderMode::hard;
    if (hard) {
        zbuf.assign(static_cast<size_t>(npix), kInf);
        zface.assign(static_cast<size_t>(npix), -1);
    }
    std::vector<Fragment> hard_frag(hard ? static_cast<size_t>(npix) : 0);

    for (int f = 0; f < mesh_.face_count(); ++f) {
        double x[3], y[3], z[3];
        bool ok = true;
        for (int k = 0; k < 3; ++k) {
            const Projection& p = screen_[mesh_.faces(f, k)];
            ok &= p.in_front;
            x[k] = p.x;
            y[k] = p.y;
            z[k] = p.depth;
        }
        if (!ok)
            continue; // no near-plane clipping; meshes are expected in front of the camera
        const double area = (x[1] - x[0]) * (y[2] - y[0]) - (y[1] - y[0]) * (x[2] - x[0]);
        if (std::abs(area) < 1e-12)
            continue;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({x[0], x[1], x[2]}) - 0.5)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({x[0], x[1], x[2]}) - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({y[0], y[1], y[2]}) - 0.5)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({y[0], y[1], y[2]}) - 0.5)));
        for (int py = y0; py <= y1; ++py)
            for (int px = x0; px <= x1; ++px) {
                const double cx = px + 0.5, cy = py + 0.5;
                const double e0 = ((x[2] - x[1]) * (cy - y[1]) - (y[2] - y[1]) * (cx - x[1])) / area;
                const double e1 = ((x[0] - x[2]) * (cy - y[2]) - (y[0] - y[2]) * (cx - x[2])) / area;
                const double e2 = ((x[1] - x[0]) * (cy - y[0]) - (y[1] - y[0]) * (cx - x[0])) / area;
                if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0)
                    continue;
                const auto ev = eval_fragment(x, y, z, cx, cy);
                const int pix = py * w + px;
                Fragment frag{f, {ev.bary[0], ev.bary[1], ev.bary[2]}, ev.depth, 1.0};
                if (hard) {
                    if (ev.depth < zbuf[pix]) {
                        zbuf[pix] = ev.depth;
                        zface[pix] = f;
                        hard_frag[pix] = frag;
                    }
                } else {
                    raw.push_back({pix, frag});
                }
            }
    }

    pixel_begin_.assign(static_cast<size_t>(npix) + 1, 0);
    fragments_.clear();
    if (hard) {
        for (int p = 0; p < npix; ++p) {
            pixel_begin_[p] = static_cast<int>(fragments_.size());
            if (zface[p] >= 0)
                fragments_.push_back(hard_frag[p]);
        }
        pixel_begin_[npix] = static_cast<int>(fragments_.size());
        return;
    }

    std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
        if (a.pixel != b.pixel)
            return a.pixel < b.pixel;
        if (a.frag.depth != b.frag.depth)
            return a.frag.depth < b.frag.depth;
        return a.frag.face < b.frag.face;
    });
    size_t i = 0;
    for (int p = 0; p < npix; ++p) {
        pixel_begin_[p] = static_cast<int>(fragments_.size());
        if (i < raw.size() && raw[i].pixel == p) {
            const double front = raw[i].frag.depth;
            const size_t start = fragments_.size();
            double total = 0.0;
            for (; i < raw.size() && raw[i].pixel == p; ++i) {
                if (raw[i].frag.depth - front > kSoftmaxCutoff * gamma_)
                    continue;
                Fragment frag = raw[i].frag;
                frag.weight = std::exp(-(frag.depth - front) / gamma_);
                total += frag.weight;
                fragments_.push_back(frag);
            }
            for (size_t k = start; k < fragments_.size(); ++k)
                fragments_[k].weight /= total;
        }
    }
    pixel_begin_[npix] = static_cast<int>(fragments_.size());
}

void RenderPass::build_band()
{
    const int w = camera_.width, h = camera_.height;
    const int npix = w * h;
    band_edge_.assign(static_cast<size_t>(npix), -1);
    band_t_.assign(static_cast<size_t>(npix), 0.0);
    band_dist_.assign(static_cast<size_t>(npix), kInf);
    edges_.clear();

    const Vec3 eye = camera_.position();
    std::vector<int> facing(static_cast<size_t>(mesh_.face_count()));
    for (int f = 0; f < mesh_.face_count(); ++f) {
        const Vec3 a = mesh_.vertex(mesh_.faces(f, 0));
        const Vec3 n = (mesh_.vertex(mesh_.faces(f, 1)) - a).cross(mesh_.vertex(mesh_.faces(f, 2)) - a);
        facing[f] = n.dot(eye - a) > 0.0 ? 1 : -1;
    }

    struct HalfEdge {
        int a, b, face;
    };
    std::vector<HalfEdge> half;
    half.reserve(static_cast<size_t>(mesh_.face_count()) * 3);
    for (int f = 0; f < mesh_.face_count(); ++f)
        for (int k = 0; k < 3; ++k) {
            const int a = mesh_.faces(f, k), b = mesh_.faces(f, (k + 1) % 3);
            half.push_back({std::min(a, b), std::max(a, b), f});
        }
    std::sort(half.begin(), half.end(), [](const HalfEdge& l, const HalfEdge& r) {
        return std::tie(l.a, l.b, l.face) < std::tie(r.a, r.b, r.face);
    });

    auto covered = [&](double sx, double sy) {
        const int px = static_cast<int>(std::floor(sx)), py = static_cast<int>(std::floor(sy));
        if (px < 0 || py < 0 || px >= w || py >= h)
            return false;
        const int p = py * w + px;
        return pixel_begin_[p] < pixel_begin_[p + 1];
    };

    for (size_t i = 0; i < half.size();) {
        size_t j = i;
        while (j < half.size() && half[j].a == half[i].a && half[j].b == half[i].b)
            ++j;
        int face = -1;
        if (j - i == 1) {
            face = half[i].face;
        } else {
            bool front = false, back = false;
            for (size_t k = i; k < j; ++k) {
                if (facing[half[k].face] > 0) {
                    front = true;
                    if (face < 0)
                        face = half[k].face;
                } else {
                    back = true;
                }
            }
            if (!(front && back))
                face = -1;
        }
        const int va = half[i].a, vb = half[i].b;
        i = j;
        if (face < 0 || !screen_[va].in_front || !screen_[vb].in_front)
            continue;
        const double ax = screen_[va].x, ay = screen_[va].y, bx = screen_[vb].x, by = screen_[vb].y;
        const double len = std::hypot(bx - ax, by - ay);
        if (len < 1e-9)
            continue;
        const double mx = 0.5 * (ax + bx), my = 0.5 * (ay + by);
        const double nx = -(by - ay) / len * kExposureProbePx, ny = (bx - ax) / len * kExposureProbePx;
        if (covered(mx + nx, my + ny) && covered(mx - nx, my - ny))
            continue;
        edges_.push_back({va, vb, face});
    }

    const double band = params_.band_px;
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
        const Projection& a = screen_[edges_[e].v0];
        const Projection& b = screen_[edges_[e].v1];
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - band - 0.5)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + band - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - band - 0.5)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + band - 0.5)));
        for (int py = y0; py <= y1; ++py)
            for (int px = x0; px <= x1; ++px) {
                const auto ev = eval_edge(a.x, a.y, b.x, b.y, px + 0.5, py + 0.5);
                const double d = std::sqrt(ev.dist2);
                const int p = py * w + px;
                if (d < band && d < band_dist_[p]) {
                    band_dist_[p] = d;
                    band_edge_[p] = e;
                    band_t_[p] = ev.t;
                }
            }
    }
}

Eigen::Vector3d RenderPass::face_shade(int face) const
{
    return normal_rgb_[face];
}

void RenderPass::shade_into(const ColorMatrix* colors, ImageRGBA& image) const
{
    const int w = camera_.width, h = camera_.height;
    const bool soft = mode_ == RenderMode::soft;
    for (int p = 0; p < w * h; ++p) {
        double* out = image.data().data() + 4 * static_cast<size_t>(p);
        out[0] = out[1] = out[2] = out[3] = 0.0;
        const bool is_covered = pixel_begin_[p] < pixel_begin_[p + 1];
        if (is_covered) {
            for (int k = pixel_begin_[p]; k < pixel_begin_[p + 1]; ++k) {
                const Fragment& fr = fragments_[k];
                Eigen::Vector3d c = Eigen::Vector3d::Zero();
                if (shading_ == Shading::face_normal) {
                    c = face_shade(fr.face);
                } else if (colors) {
                    // Written relative to the first corner so constant colors reproduce exactly.
                    const Eigen::Vector3d c0 = colors->row(mesh_.faces(fr.face, 0)).head<3>().transpose();
                    c = c0;
                    for (int i = 1; i < 3; ++i)
                        c += fr.bary[i] * (colors->row(mesh_.faces(fr.face, i)).head<3>().transpose() - c0);
                }
                for (int ch = 0; ch < 3; ++ch)
                    out[ch] += fr.weight * c[ch];
            }
            out[3] = 1.0;
        }
        if (!soft || band_edge_[p] < 0)
            continue;
        const double d2 = band_dist_[p] * band_dist_[p];
        out[3] = sigmoid((is_covered ? d2 : -d2) / params_.sigma);
        if (is_covered)
            continue;
        const SilhouetteEdge& e = edges_[band_edge_[p]];
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        if (shading_ == Shading::face_normal) {
            c = face_shade(e.face);
        } else if (colors) {
            const double wb = perspective_edge_weight(band_t_[p], screen_[e.v0].depth, screen_[e.v1].depth);
            c = (1.0 - wb) * colors->row(e.v0).head<3>().transpose() + wb * colors->row(e.v1).head<3>().transpose();
        }
        for (int ch = 0; ch < 3; ++ch)
            out[ch] = c[ch];
    }
}

ImageRGBA RenderPass::shade(const ColorMatrix& colors) const
{
    if (colors.rows() != mesh_.vertex_count())
        throw Error("color count does not match the rendered mesh");
    ImageRGBA image(camera_.width, camera_.height);
    shade_into(&colors, image);
    return image;
}

void RenderPass::check_upstream(const ImageGradient& upstream) const
{
    require_same_size(upstream, camera_);
}

ColorMatrix RenderPass::backward_colors(const ImageGradient& upstream) const
{
    check_upstream(upstream);
    ColorMatrix grad = ColorMatrix::Zero(mesh_.vertex_count(), 4);
    if (shading_ != Shading::vertex_color)
        return grad;
    const int npix = camera_.width * camera_.height;
    for (int p = 0; p < npix; ++p) {
        const double* g = upstream.data().data() + 4 * static_cast<size_t>(p);
        if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0)
            continue;
        const bool is_covered = pixel_begin_[p] < pixel_begin_[p + 1];
        for (int k = pixel_begin_[p]; k < pixel_begin_[p + 1]; ++k) {
            const Fragment& fr = fragments_[k];
            for (int i = 0; i < 3; ++i) {
                const double s = fr.weight * fr.bary[i];
                const int v = mesh_.faces(fr.face, i);
                for (int ch = 0; ch < 3; ++ch)
                    grad(v, ch) += s * g[ch];
            }
        }
        if (mode_ == RenderMode::soft && !is_covered && band_edge_[p] >= 0) {
            const SilhouetteEdge& e = edges_[band_edge_[p]];
            const double wb = perspective_edge_weight(band_t_[p], screen_[e.v0].depth, screen_[e.v1].depth);
            for (int ch = 0; ch < 3; ++ch) {
                grad(e.v0, ch) += (1.0 - wb) * g[ch];
                grad(e.v1, ch) += wb * g[ch];
            }
        }
    }
    return grad;
}

VertexMatrix RenderPass::backward_positions(const ImageGradient& upstream) const
{
    if (mode_ != RenderMode::soft)
        throw Error("position gradients are only defined for soft rendering");
    check_upstream(upstream);
    const int nv = mesh_.vertex_count();
    const int w = camera_.width, npix = camera_.width * camera_.height;
    // Accumulate with respect to screen (x, y, depth) first, then chain to world once per vertex.
    std::vector<Eigen::Vector3d> screen_grad(static_cast<size_t>(nv), Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> face_rgb_grad;
    if (shading_ == Shading::face_normal)
        face_rgb_grad.assign(static_cast<size_t>(mesh_.face_count()), Eigen::Vector3d::Zero());

    using D9 = Dual<9>;
    using D6 = Dual<6>;
    for (int p = 0; p < npix; ++p) {
        const double* g = upstream.data().data() + 4 * static_cast<size_t>(p);
        const bool rgb_active = g[0] != 0.0 || g[1] != 0.0 || g[2] != 0.0;
        if (!rgb_active && g[3] == 0.0)
            continue;
        const double cx = (p % w) + 0.5, cy = (p / w) + 0.5;
        const bool is_covered = pixel_begin_[p] < pixel_begin_[p + 1];
        const int edge_id = band_edge_[p];

        if (edge_id >= 0 && (g[3] != 0.0 || (!is_covered && rgb_active))) {
            const SilhouetteEdge& e = edges_[edge_id];
            const Projection& a = screen_[e.v0];
            const Projection& b = screen_[e.v1];
            const D6 ax = D6::variable(a.x, 0), ay = D6::variable(a.y, 1), az = D6::variable(a.depth, 2);
            const D6 bx = D6::variable(b.x, 3), by = D6::variable(b.y, 4), bz = D6::variable(b.depth, 5);
            const auto ev = eval_edge(ax, ay, bx, by, cx, cy);
            std::array<double, 6> acc{};
            if (g[3] != 0.0) {
                const double sign = is_covered ? 1.0 : -1.0;
                const double alpha = sigmoid(sign * ev.dist2.v / params_.sigma);
                const double k = g[3] * alpha * (1.0 - alpha) * sign / params_.sigma;
                for (int i = 0; i < 6; ++i)
                    acc[i] += k * ev.dist2.d[i];
            }
            if (!is_covered && rgb_active) {
                if (shading_ == Shading::vertex_color) {
                    const D6 wb = perspective_edge_weight(ev.t, az, bz);
                    for (int ch = 0; ch < 3; ++ch) {
                        const double dc = mesh_.colors(e.v1, ch) - mesh_.colors(e.v0, ch);
                        for (int i = 0; i < 6; ++i)
                            acc[i] += g[ch] * dc * wb.d[i];
                    }
                } else if (shading_ == Shading::face_normal) {
                    face_rgb_grad[e.face] += Eigen::Vector3d(g[0], g[1], g[2]);
                }
            }
            for (int i = 0; i < 3; ++i) {
                screen_grad[e.v0][i] += acc[i];
                screen_grad[e.v1][i] += acc[3 + i];
            }
        }

        if (!is_covered || !rgb_active)
            continue;
        const int begin = pixel_begin_[p], end = pixel_begin_[p + 1];
        // Pixel color = sum_f weight_f * color_f with softmax weights over fragment depth.
        Eigen::Vector3d out = Eigen::Vector3d::Zero();
        for (int k = begin; k < end; ++k) {
            const Fragment& fr = fragments_[k];
            Eigen::Vector3d c = Eigen::Vector3d::Zero();
            if (shading_ == Shading::face_normal)
                c = face_shade(fr.face);
            else if (shading_ == Shading::vertex_color)
                for (int i = 0; i < 3; ++i)
                    c += fr.bary[i] * mesh_.colors.row(mesh_.faces(fr.face, i)).head<3>().transpose();
            out += fr.weight * c;
        }
        const Eigen::Vector3d gv(g[0], g[1], g[2]);
        for (int k = begin; k < end; ++k) {
            const Fragment& fr = fragments_[k];
            D9 x[3], y[3], z[3];
            for (int i = 0; i < 3; ++i) {
                const Projection& s = screen_[mesh_.faces(fr.face, i)];
                x[i] = D9::variable(s.x, 3 * i);
                y[i] = D9::variable(s.y, 3 * i + 1);
                z[i] = D9::variable(s.depth, 3 * i + 2);
            }
            const auto ev = eval_fragment(x, y, z, cx, cy);
            // d weight_f = -weight_f * (d depth_f - sum_j weight_j d depth_j) / gamma; the second
            // term is accounted for below through (c_f - out).
            std::array<double, 9> acc{};
            Eigen::Vector3d c = Eigen::Vector3d::Zero();
            if (shading_ == Shading::face_normal) {
                c = face_shade(fr.face);
                face_rgb_grad[fr.face] += fr.weight * gv;
            } else if (shading_ == Shading::vertex_color) {
                for (int i = 0; i < 3; ++i) {
                    const int v = mesh_.faces(fr.face, i);
                    const double gc = gv.dot(mesh_.colors.row(v).head<3>().transpose());
                    c += ev.bary[i].v * mesh_.colors.row(v).head<3>().transpose();
                    for (int j = 0; j < 9; ++j)
                        acc[j] += fr.weight * gc * ev.bary[i].d[j];
                }
            }
            if (end - begin > 1) {
                const double k_depth = -fr.weight * gv.dot(c - out) / gamma_;
                for (int j = 0; j < 9; ++j)
                    acc[j] += k_depth * ev.depth.d[j];
            }
            for (int i = 0; i < 3; ++i) {
                const int v = mesh_.faces(fr.face, i);
                for (int d = 0; d < 3; ++d)
                    screen_grad[v][d] += acc[3 * i + d];
            }
        }
    }

    VertexMatrix grad = VertexMatrix::Zero(nv, 3);
    for (int v = 0; v < nv; ++v)
        if (screen_[v].in_front && !screen_grad[v].isZero(0.0))
            grad.row(v) = (projection_jacobian(mesh_.vertex(v), camera_).transpose() * screen_grad[v]).transpose();

    if (shading_ == Shading::face_normal) {
        const Vec3 r = camera_.right(), u = camera_.up(), fw = camera_.forward();
        for (int f = 0; f < mesh_.face_count(); ++f) {
            const Eigen::Vector3d& gc = face_rgb_grad[f];
            if (gc.isZero(0.0))
                continue;
            // rgb = 0.5 + 0.5 * (n.r, n.u, -n.f)
            const Vec3 gn = 0.5 * (gc[0] * r + gc[1] * u - gc[2] * fw);
            const Vec3 a = mesh_.vertex(mesh_.faces(f, 0));
            const Vec3 e1 = mesh_.vertex(mesh_.faces(f, 1)) - a, e2 = mesh_.vertex(mesh_.faces(f, 2)) - a;
            const Vec3 m = e1.cross(e2);
            const double len = m.norm();
            const Vec3 n = m / len;
            const Vec3 gm = (gn - n * n.dot(gn)) / len;
            const Vec3 gb = e2.cross(gm), gcv = gm.cross(e1);
            grad.row(mesh_.faces(f, 1)) += gb.transpose();
            grad.row(mesh_.faces(f, 2)) += gcv.transpose();
            grad.row(mesh_.faces(f, 0)) -= (gb + gcv).transpose();
        }
    }
    return grad;
}

RenderOutput render(const Mesh& mesh, const Camera& camera, RenderMode mode, const SoftRasterParams& params)
{
    return RenderPass(mesh, camera, mode, Shading::vertex_color, params).output();
}

RenderGradients render_backward(const Mesh& mesh, const Camera& camera, RenderMode mode,
                                const ImageGradient& upstream, const SoftRasterParams& params, bool want_positions)
{
    if (want_positions && mode != RenderMode::soft)
        throw Error("position gradients are only defined for soft rendering");
    const RenderPass pass(mesh, camera, mode, Shading::vertex_color, params);
    RenderGradients out;
    out.colors = pass.backward_colors(upstream);
    if (want_positions)
        out.positions = pass.backward_positions(upstream);
    return out;
}

ImageRGBA render_normal_map(const Mesh& mesh, const Camera& camera, RenderMode mode, const SoftRasterParams& params)
{
    return RenderPass(mesh, camera, mode, Shading::face_normal, params).output().image;
}

} // namespace mvd
