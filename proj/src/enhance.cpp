#include "mvd/enhance.hpp"

#include "mvd/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mvd {

void LossWeights::validate() const
{
    for (double w : {w1, w2, w3, w4, w5, w6})
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error("loss weights must be finite and nonnegative");
}

ImageLoss image_loss(const ImageRGBA& render, const ImageRGBA& target, double w_mse, double w_mask,
                     bool want_target_gradient)
{
    if (!render.same_size(target))
        throw Error("image loss needs equal sizes");
    const auto& k = kernels::active();
    const int n = render.pixel_count();
    const double* r = render.data().data();
    const double* t = target.data().data();
    const kernels::MaskedSse sse = k.masked_rgb_sse(r, t, n);
    ImageLoss out;
    const double rgb_count = 3.0 * static_cast<double>(sse.count);
    out.mse = sse.count > 0 ? sse.sum / rgb_count : 0.0;
    out.mask = n > 0 ? k.alpha_sse(r, t, n) / n : 0.0;

    out.d_render = ImageGradient(render.width(), render.height());
    double* g = out.d_render.data().data();
    const double s_rgb = sse.count > 0 ? 2.0 * w_mse / rgb_count : 0.0;
    const double s_alpha = n > 0 ? 2.0 * w_mask / n : 0.0;
    for (int p = 0; p < n; ++p) {
        const double* rp = r + 4 * p;
        const double* tp = t + 4 * p;
        double* gp = g + 4 * p;
        if (rp[3] > 0.5 && tp[3] > 0.5)
            for (int c = 0; c < 3; ++c)
                gp[c] = s_rgb * (rp[c] - tp[c]);
        gp[3] = s_alpha * (rp[3] - tp[3]);
    }
    if (want_target_gradient) {
        out.d_target = out.d_render;
        for (double& v : out.d_target.data())
            v = -v;
    }
    return out;
}

LaplacianTerm::LaplacianTerm(const Mesh& topology)
{
    // Row-normalized uniform Laplacian: (LV)_i = v_i - mean of the neighbors.
    const SparseMatrix lu = build_laplacian(topology, LaplacianKind::uniform).matrix();
    Eigen::VectorXd inv_deg = lu.diagonal();
    for (Eigen::Index i = 0; i < inv_deg.size(); ++i)
        inv_deg[i] = inv_deg[i] > 0.0 ? 1.0 / inv_deg[i] : 0.0;
    l_ = inv_deg.asDiagonal() * lu;
    lt_ = l_.transpose();
    scale_ = topology.vertex_count() > 0 ? 1.0 / topology.vertex_count() : 0.0;
}

double LaplacianTerm::value(const VertexMatrix& v) const { return scale_ * (l_ * v).squaredNorm(); }

VertexMatrix LaplacianTerm::gradient(const VertexMatrix& v) const
{
    const VertexMatrix lv = l_ * v;
    return 2.0 * scale_ * (lt_ * lv);
}

namespace {

void check_views(std::span<const PosedImage> views)
{
    if (views.empty())
        throw Error("at least one view is required");
    for (const auto& v : views) {
        v.camera.validate();
        if (v.image.width() != v.camera.width || v.image.height() != v.camera.height)
            throw Error("view image does not match its camera resolution");
        if (v.image.width() != views[0].image.width() || v.image.height() != views[0].image.height())
            throw Error("views must share one resolution");
    }
}

Mesh with_placeholder_colors(const Mesh& mesh)
{
    Mesh m = mesh;
    if (!m.has_colors())
        m.colors = ColorMatrix::Constant(m.vertex_count(), 4, 1.0);
    return m;
}

} // namespace

AppearanceResult enhance_appearance(const Mesh& mesh, std::span<const PosedImage> views, const LossWeights& weights,
                                    const OptimConfig& config, const AppearanceOptions& options)
{
    weights.validate();
    config.validate();
    check_views(views);
    if (options.grid_size < 2)
        throw Error("deformation grid needs at least 2 vertices per side");
    const int nviews = static_cast<int>(views.size());
    const int w = views[0].image.width(), h = views[0].image.height();

    std::vector<Camera> cams;
    for (const auto& v : views)
        cams.push_back(v.camera);
    const Unprojector unprojector(mesh, cams, options.unproject);
    const Mesh shaded = with_placeholder_colors(mesh);
    std::vector<RenderPass> passes;
    for (const auto& cam : cams)
        passes.emplace_back(shaded, cam, RenderMode::hard);

    // The optimizer works in normalized image coordinates (the image spans
    // [-1, 1] on each axis); fields are stored in pixels.
    const Eigen::RowVector2d to_norm(2.0 / w, 2.0 / h);
    auto normalized = [&](const DeformationField2D& f) {
        DeformationField2D n = f;
        n.offsets = f.offsets.array().rowwise() * to_norm.array();
        n.max_offset = std::numeric_limits<double>::infinity();
        return n;
    };

    const double bound = options.max_offset_frac * std::min(w, h);
    std::vector<DeformationField2D> fields(static_cast<size_t>(nviews),
                                           DeformationField2D::zero(options.grid_size, bound));
    const Eigen::Index rows = fields[0].offsets.rows();
    const Eigen::Index per_field = fields[0].offsets.size();
    Eigen::VectorXd params = Eigen::VectorXd::Zero(per_field * nviews);
    Adam adam(params.size(), config);

    AppearanceResult best;
    best.log.best_iteration = -1;
    double best_total = std::numeric_limits<double>::infinity();
    std::vector<ImageRGBA> deformed(static_cast<size_t>(nviews));
    for (int it = 0; it <= config.iterations; ++it) {
        for (int k = 0; k < nviews; ++k)
            deformed[k] = deform_image(views[k].image, fields[k]);
        const ColorMatrix colors = unprojector.colors(deformed);

        LossTerms loss;
        double mse = 0.0, mask = 0.0, smooth = 0.0;
        ColorMatrix d_colors = ColorMatrix::Zero(mesh.vertex_count(), 4);
        std::vector<ImageGradient> d_images;
        for (int k = 0; k < nviews; ++k) {
            const ImageRGBA rendered = passes[k].shade(colors);
            ImageLoss il = image_loss(rendered, deformed[k], weights.w1, weights.w2, true);
            mse += il.mse;
            mask += il.mask;
            d_colors += passes[k].backward_colors(il.d_render);
            d_images.push_back(std::move(il.d_target));
            smooth += smoothness_loss(normalized(fields[k]));
        }
        loss.add("mse", weights.w1, mse);
        loss.add("mask", weights.w2, mask);
        loss.add("smooth2d", weights.w3, smooth);
        check_finite_loss(loss.total, "appearance enhancement", it);
        best.log.records.push_back({it, loss});
        if (loss.total < best_total) {
            best_total = loss.total;
            best.log.best_iteration = it;
            best.fields = fields;
            best.deformed = deformed;
            best.colored = mesh;
            best.colored.colors = colors;
        }
        if (it == config.iterations)
            break;

        const std::vector<ImageGradient> via_colors = unprojector.backward(deformed, d_colors);
        Eigen::VectorXd grad(params.size());
        for (int k = 0; k < nviews; ++k) {
            ImageGradient& gi = d_images[k];
            auto dst = gi.data();
            const auto src = via_colors[k].data();
            for (size_t i = 0; i < dst.size(); ++i)
                dst[i] += src[i];
            const OffsetMatrix g_px = deform_backward(views[k].image, fields[k], gi);
            const OffsetMatrix gf = (g_px.array().rowwise() / to_norm.array()).matrix() +
                                    weights.w3 * smoothness_gradient(normalized(fields[k]));
            grad.segment(k * per_field, per_field) = Eigen::Map<const Eigen::VectorXd>(gf.data(), per_field);
        }
        if (!grad.allFinite())
            throw Error("appearance enhancement diverged at iteration " + std::to_string(it) +
                        " (gradient not finite)");
        adam.step(params, grad);
        for (int k = 0; k < nviews; ++k) {
            Eigen::Map<OffsetMatrix> theta(params.data() + k * per_field, rows, 2);
            fields[k].offsets = theta.array().rowwise() / to_norm.array();
            fields[k].clamp_to_bound();
            theta = fields[k].offsets.array().rowwise() * to_norm.array();
        }
    }
    return best;
}

double multiscale_mse(const ImageRGBA& a, const ImageRGBA& b, int levels)
{
    if (!a.same_size(b))
        throw Error("multi-scale distance needs equal sizes");
    if (levels < 1)
        throw Error("pyramid needs at least one level");
    ImageRGBA x = a, y = b;
    double total = 0.0;
    for (int l = 0; l < levels; ++l) {
        double sse = 0.0;
        const auto dx = x.data(), dy = y.data();
        for (size_t i = 0; i < dx.size(); ++i)
            sse += (dx[i] - dy[i]) * (dx[i] - dy[i]);
        total += dx.empty() ? 0.0 : sse / static_cast<double>(dx.size());
        if (l + 1 < levels) {
            x = downsample2(x);
            y = downsample2(y);
        }
    }
    return total / levels;
}

VertexMatrix elevation_velocity(const VertexMatrix& v, const Camera& camera)
{
    // Raising the camera by d(elev) matches rotating the world about the
    // camera's right axis by the same angle.
    const Eigen::RowVector3d r = camera.right().transpose();
    VertexMatrix out(v.rows(), 3);
    constexpr double deg = std::numbers::pi / 180.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        out.row(i) = deg * r.cross(v.row(i));
    return out;
}

VertexMatrix distance_velocity(const VertexMatrix& v, const Camera& camera)
{
    VertexMatrix out(v.rows(), 3);
    out.rowwise() = camera.forward().transpose();
    return out;
}

bool better_elevation(double elevation, double score, double best_elevation, double best_score)
{
    return score < best_score || (score == best_score && std::abs(elevation) < std::abs(best_elevation));
}

CameraEstimate estimate_camera(const Mesh& mesh, const ImageRGBA& input, double distance, double fov_deg,
                               const LossWeights& weights, const CameraSearchOptions& options)
{
    if (!mesh.has_colors())
        throw Error("camera estimation needs a colored mesh");
    if (!(options.coarse_step > 0.0) || !(options.fine_step > 0.0))
        throw Error("camera search steps must be positive");
    Camera cam;
    cam.fov_deg = fov_deg;
    cam.distance = distance;
    cam.azimuth_deg = 0.0;
    cam.width = input.width();
    cam.height = input.height();
    cam.validate();

    auto score = [&](double elev) {
        Camera c = cam;
        c.elevation_deg = elev;
        return multiscale_mse(render(mesh, c, RenderMode::hard).image, input, options.pyramid_levels);
    };
    auto scan = [&](double lo, double hi, double step, double& best_e, double& best_s) {
        const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (int i = 0; i < n; ++i) {
            const double e = lo + i * step;
            const double s = score(e);
            if (better_elevation(e, s, best_e, best_s)) {
                best_s = s;
                best_e = e;
            }
        }
    };

    CameraEstimate est;
    double best_e = 0.0, best_s = std::numeric_limits<double>::infinity();
    scan(options.coarse_min, options.coarse_max, options.coarse_step, best_e, best_s);
    est.coarse_elevation = best_e;
    const double lo = std::max(options.coarse_min, best_e - options.fine_radius);
    const double hi = std::min(options.coarse_max, best_e + options.fine_radius);
    scan(lo, hi, options.fine_step, best_e, best_s);
    est.grid_elevation = best_e;
    est.grid_score = best_s;

    // Continuous refinement of (elevation, distance) with the soft renderer.
    const OptimConfig& rc = options.refine;
    rc.validate();
    const double dscale = options.distance_step_scale;
    Eigen::VectorXd params(2);
    params << best_e, distance / dscale;
    Adam adam(2, rc);
    Eigen::VectorXd best_params = params;
    double best_total = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= rc.iterations; ++it) {
        Camera c = cam;
        c.elevation_deg = params[0];
        c.distance = params[1] * dscale;
        const RenderPass pass(mesh, c, RenderMode::soft, Shading::vertex_color, options.soft);
        const ImageLoss il = image_loss(pass.output().image, input, weights.w4, weights.w5);
        LossTerms loss;
        loss.add("mse", weights.w4, il.mse);
        loss.add("mask", weights.w5, il.mask);
        loss.terms.emplace_back("elevation", c.elevation_deg);
        loss.terms.emplace_back("distance", c.distance);
        check_finite_loss(loss.total, "camera refinement", it);
        est.log.records.push_back({it, loss});
        if (loss.total < best_total) {
            best_total = loss.total;
            best_params = params;
            est.log.best_iteration = it;
        }
        if (it == rc.iterations)
            break;
        const VertexMatrix dv = pass.backward_positions(il.d_render);
        Eigen::VectorXd grad(2);
        grad[0] = dv.cwiseProduct(elevation_velocity(mesh.vertices, c)).sum();
        grad[1] = dv.cwiseProduct(distance_velocity(mesh.vertices, c)).sum() * dscale;
        adam.step(params, grad);
        params[0] = std::clamp(params[0], -90.0, 90.0);
    }
    est.camera = cam;
    est.camera.elevation_deg = best_params[0];
    est.camera.distance = best_params[1] * dscale;
    return est;
}

FidelityObjective::FidelityObjective(const Mesh& colored, const ImageRGBA& input, const Camera& camera,
                                     const LossWeights& weights, const SoftRasterParams& soft)
    : mesh_(colored), input_(input), camera_(camera), weights_(weights), soft_(soft), lap_(colored)
{
    if (!mesh_.has_colors())
        throw Error("fidelity enhancement needs a colored mesh");
    camera_.validate();
    weights_.validate();
    if (input_.width() != camera_.width || input_.height() != camera_.height)
        throw Error("input image does not match the camera resolution");
}

LossTerms FidelityObjective::evaluate(const VertexMatrix& positions, VertexMatrix& gradient)
{
    mesh_.vertices = positions;
    const RenderPass pass(mesh_, camera_, RenderMode::soft, Shading::vertex_color, soft_);
    const ImageLoss il = image_loss(pass.output().image, input_, weights_.w4, weights_.w5);
    const double lap = lap_.value(positions);
    LossTerms loss;
    loss.add("mse", weights_.w4, il.mse);
    loss.add("mask", weights_.w5, il.mask);
    loss.add("laplacian", weights_.w6, lap);
    gradient = pass.backward_positions(il.d_render) + weights_.w6 * lap_.gradient(positions);
    return loss;
}

Mesh unproject_input(const Mesh& mesh, const PosedImage& input, std::span<const PosedImage> views,
                     double input_scale, const UnprojectParams& params)
{
    if (!(input_scale > 0.0))
        throw Error("input view scale must be positive");
    if (!views.empty()) {
        std::vector<PosedImage> all(views.begin(), views.end());
        all.push_back(input);
        UnprojectParams p = params;
        p.view_scale.assign(all.size(), 1.0);
        p.view_scale.back() = input_scale;
        return unproject(mesh, all, p);
    }
    if (!mesh.has_colors())
        throw Error("input unprojection without views needs existing vertex colors");
    const std::vector<Camera> cams{input.camera};
    const std::vector<ImageRGBA> images{input.image};
    const Unprojector unp(mesh, cams, params);
    const ColorMatrix from_input = unp.colors(images);
    const std::vector<char> covered = unp.covered(images);
    Mesh out = mesh;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (!covered[v])
            continue;
        const double w = input_scale * unp.weight(0, v);
        out.colors.row(v) = (mesh.colors.row(v) + w * from_input.row(v)) / (1.0 + w);
    }
    out.colors.col(3).setOnes();
    return out;
}

FidelityResult enhance_fidelity(const Mesh& mesh, const ImageRGBA& input, const Camera& camera,
                                const LossWeights& weights, const OptimConfig& config,
                                const FidelityOptions& options)
{
    FidelityObjective objective(mesh, input, camera, weights, options.soft);
    FidelityResult out;
    switch (options.deformer) {
    case DeformerKind::jacobian:
        out.deformed = deform_jacobian(mesh, objective, config, &out.log);
        break;
    case DeformerKind::vertex:
        out.deformed = deform_vertex_replacement(mesh, objective, config, &out.log);
        break;
    case DeformerKind::grid3d:
        out.deformed = deform_grid3d(mesh, objective, config, options.grid_resolution, &out.log);
        break;
    }
    out.output = unproject_input(out.deformed, PosedImage{input, camera}, options.views, options.input_view_scale,
                                 options.unproject);
    return out;
}

namespace {

class RefineObjective final : public PositionObjective {
public:
    RefineObjective(const Mesh& mesh, std::span<const PosedImage> views, const RefineOptions& options)
        : mesh_(mesh), views_(views.begin(), views.end()), options_(options), lap_(mesh)
    {
        const auto normals = vertex_normal_matrix(mesh);
        anchor_ = mesh.vertices + options.expansion_delta * normals;
    }

    LossTerms evaluate(const VertexMatrix& positions, VertexMatrix& gradient) override
    {
        const RefineWeights& w = options_.weights;
        mesh_.vertices = positions;
        gradient = VertexMatrix::Zero(positions.rows(), 3);
        double mse = 0.0, mask = 0.0;
        for (const auto& view : views_) {
            const RenderPass pass(mesh_, view.camera, RenderMode::soft, Shading::face_normal, options_.soft);
            const ImageLoss il = image_loss(pass.output().image, view.image, w.mse, w.mask);
            mse += il.mse;
            mask += il.mask;
            gradient += pass.backward_positions(il.d_render);
        }
        const double nv = std::max<Eigen::Index>(positions.rows(), 1);
        const VertexMatrix diff = positions - anchor_;
        const double expansion = diff.squaredNorm() / nv;
        gradient += (2.0 * w.expansion / nv) * diff;
        const double lap = lap_.value(positions);
        gradient += w.laplacian * lap_.gradient(positions);
        LossTerms loss;
        loss.add("mse", w.mse, mse);
        loss.add("mask", w.mask, mask);
        loss.add("expansion", w.expansion, expansion);
        loss.add("laplacian", w.laplacian, lap);
        return loss;
    }

private:
    Mesh mesh_;
    std::vector<PosedImage> views_;
    RefineOptions options_;
    LaplacianTerm lap_;
    VertexMatrix anchor_;
};

} // namespace

RefineResult refine_geometry(const Mesh& mesh, std::span<const PosedImage> normal_views, const OptimConfig& config,
                             const RefineOptions& options)
{
    mesh.validate();
    check_views(normal_views);
    RefineObjective objective(mesh, normal_views, options);
    RefineResult out;
    out.mesh = deform_vertex_replacement(mesh, objective, config, &out.log);
    return out;
}

} // namespace mvd
