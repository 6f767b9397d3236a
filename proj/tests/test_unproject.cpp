#include "helpers.hpp"

#include "mvd/raster.hpp"
#include "mvd/unproject.hpp"

#include <doctest.h>

using namespace mvd;

namespace {

constexpr double kPi = 3.14159265358979323846;

Camera frontal(int res)
{
    Camera c;
    c.width = c.height = res;
    return c; // elevation 0, azimuth 0: looks down -x
}

// Quad in the plane x = depth_offset facing +x.
Mesh facing_quad(double half, double x)
{
    Mesh q = test::flat_quad(half);
    q.vertices = (q.vertices * Eigen::AngleAxisd(kPi / 2, Vec3::UnitY()).toRotationMatrix().transpose()).eval();
    q.vertices.col(0).array() += x;
    if (face_normal(q, 0).x() < 0)
        q.faces.col(1).swap(q.faces.col(2));
    return q;
}

Mesh cube()
{
    Mesh m;
    m.vertices.resize(8, 3);
    for (int i = 0; i < 8; ++i)
        m.vertices.row(i) << (i & 1 ? 0.5 : -0.5), (i & 2 ? 0.5 : -0.5), (i & 4 ? 0.5 : -0.5);
    m.faces.resize(12, 3);
    m.faces << 0, 2, 1, 1, 2, 3, 4, 5, 6, 5, 7, 6, 0, 1, 4, 1, 5, 4, 2, 6, 3, 3, 6, 7, 0, 4, 2, 2, 4, 6, 1, 3, 5, 3, 7, 5;
    // Rotate so no face is exactly edge-on to the test camera.
    m.vertices = (m.vertices * (Eigen::AngleAxisd(0.4, Vec3::UnitZ()) * Eigen::AngleAxisd(0.3, Vec3::UnitY()))
                                   .toRotationMatrix()
                                   .transpose())
                     .eval();
    return m;
}

ImageRGBA constant_image(int res, const Eigen::Vector4d& c)
{
    ImageRGBA img(res, res);
    for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x)
            img.set_rgba(x, y, c);
    return img;
}

} // namespace

TEST_SUITE("unproject") {

TEST_CASE("constant image colors every vertex")
{
    const Mesh q = facing_quad(0.5, 0.0);
    const std::vector<PosedImage> views{{constant_image(32, {1, 0, 0, 1}), frontal(32)}};
    const Mesh out = unproject(q, views);
    REQUIRE(out.has_colors());
    for (int v = 0; v < 4; ++v)
        CHECK((out.colors.row(v) - Eigen::RowVector4d(1, 0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("duplicated views change nothing")
{
    const Mesh gt = make_gt_mesh(Shape::sphere, 3, ColorPattern::checker, 1);
    const auto views = render_views(gt, 96);
    const std::vector<PosedImage> one{views[0]};
    const std::vector<PosedImage> two{views[0], views[0]};
    const Mesh a = unproject(gt, one), b = unproject(gt, two);
    CHECK((a.colors - b.colors).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("render then unproject round trip")
{
    Mesh gt = make_icosphere(4);
    gt.colors = make_gt_mesh(Shape::sphere, 4, ColorPattern::checker, 1).colors;
    const auto views = render_views(gt, 256);
    std::vector<Camera> cams;
    for (const auto& v : views)
        cams.push_back(v.camera);
    const Unprojector un(gt, cams);
    std::vector<ImageRGBA> images;
    for (const auto& v : views)
        images.push_back(v.image);
    const ColorMatrix c = un.colors(images);
    double err = 0;
    int n = 0;
    for (int v = 0; v < gt.vertex_count(); ++v) {
        if (un.max_cosine(v) < 0.3)
            continue;
        err += (c.row(v).head<3>() - gt.colors.row(v).head<3>()).cwiseAbs().sum() / 3.0;
        ++n;
    }
    CHECK(n > gt.vertex_count() / 2);
    CHECK(err / n <= 2.0 / 255);
}

TEST_CASE("colors are convex combinations of their samples")
{
    const Mesh gt = make_gt_mesh(Shape::blob, 3, ColorPattern::spots, 2);
    const auto views = render_views(gt, 128);
    std::vector<Camera> cams;
    std::vector<ImageRGBA> images;
    for (const auto& v : views) {
        cams.push_back(v.camera);
        images.push_back(v.image);
    }
    const Unprojector un(gt, cams);
    const ColorMatrix c = un.colors(images);
    const auto covered = un.covered(images);
    for (int v = 0; v < gt.vertex_count(); ++v) {
        CHECK(c.row(v).allFinite());
        if (!covered[v])
            continue;
        Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e9), hi = -lo;
        for (int k = 0; k < 6; ++k) {
            if (un.weight(k, v) <= 0.0)
                continue;
            const Projection p = project(gt.vertex(v), cams[k]);
            const Eigen::Vector3d s = sample_bilinear(images[k], p.x - 0.5, p.y - 0.5).head<3>();
            if (sample_bilinear(images[k], p.x - 0.5, p.y - 0.5)[3] <= 0.5)
                continue;
            lo = lo.cwiseMin(s);
            hi = hi.cwiseMax(s);
        }
        for (int ch = 0; ch < 3; ++ch) {
            CHECK(c(v, ch) >= lo[ch] - 1e-12);
            CHECK(c(v, ch) <= hi[ch] + 1e-12);
        }
    }
}

TEST_CASE("occluded vertices get no weight")
{
    // Small front plane at x = 1 hides the center of a larger plane at x = 0.
    Mesh back = facing_quad(0.8, 0.0);
    const Mesh front = facing_quad(0.4, 1.0);
    Mesh scene = back;
    // Add an occluded probe vertex at the center of the back plane.
    scene.vertices.conservativeResize(9, 3);
    scene.vertices.row(4) << 0, 0, 0;
    scene.vertices.bottomRows(4) = front.vertices;
    scene.faces.resize(6, 3);
    scene.faces << 0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0, 4, 5, 6, 7, 5, 7, 8;
    for (int f = 0; f < 4; ++f)
        if (face_normal(scene, f).x() < 0)
            std::swap(scene.faces(f, 1), scene.faces(f, 2));
    for (int f = 4; f < 6; ++f)
        scene.faces.row(f) = front.faces.row(f - 4).array() + 5;

    const std::vector<Camera> cams{frontal(64)};
    const Unprojector un(scene, cams);
    CHECK(un.weight(0, 4) == 0.0);
    CHECK(un.max_cosine(4) == 0.0);
    for (int v = 5; v < 9; ++v)
        CHECK(un.weight(0, v) > 0.9);
    CHECK(un.weight(0, 0) > 0.9); // back corners stick out past the front plane

    // Without the occluder the probe vertex is seen head-on.
    Mesh alone = scene;
    alone.vertices.conservativeResize(5, 3);
    alone.faces.conservativeResize(4, 3);
    CHECK(Unprojector(alone, cams).weight(0, 4) > 0.9);
}

TEST_CASE("uncovered vertices are filled and an unseen mesh is an error")
{
    const Mesh gt = make_gt_mesh(Shape::sphere, 3, ColorPattern::gradient, 1);
    const auto views = render_views(gt, 64);
    const std::vector<PosedImage> one{views[0]};
    const Mesh out = unproject(gt, one);
    std::vector<Camera> cams{views[0].camera};
    const Unprojector un(gt, cams);
    std::vector<ImageRGBA> imgs{views[0].image};
    const auto cov = un.covered(imgs);
    int uncovered = 0;
    for (int v = 0; v < gt.vertex_count(); ++v) {
        CHECK(out.colors.row(v).allFinite());
        CHECK(out.colors(v, 3) == 1.0);
        uncovered += !cov[v];
    }
    CHECK(uncovered > 0);

    const std::vector<PosedImage> empty{{ImageRGBA(64, 64, 0.0), views[0].camera}};
    CHECK_THROWS_AS(unproject(gt, empty), Error);
}

TEST_CASE("backward: zero, bilinear mass and finite differences")
{
    const Mesh q = facing_quad(0.5, 0.0);
    std::vector<PosedImage> views{{constant_image(32, {0.2, 0.3, 0.4, 1}), frontal(32)}};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c)
                views[0].image.at(x, y, c) = u(rng);

    const auto zero = unproject_backward(q, views, ColorMatrix::Zero(4, 4));
    CHECK(*std::max_element(zero[0].data().begin(), zero[0].data().end()) == 0.0);
    CHECK(*std::min_element(zero[0].data().begin(), zero[0].data().end()) == 0.0);

    ColorMatrix up = ColorMatrix::Zero(4, 4);
    up(2, 1) = 1.0;
    const auto g = unproject_backward(q, views, up);
    double mass = 0;
    int taps = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (g[0].at(x, y, 1) != 0.0) {
                mass += g[0].at(x, y, 1);
                ++taps;
            }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(taps <= 4);

    // Finite differences on an 8-vertex mesh with one view.
    Mesh c = cube();
    c.colors = test::random_colors(8, 3);
    Camera cam = frontal(32);
    cam.elevation_deg = 25;
    cam.azimuth_deg = 10;
    std::vector<PosedImage> cv{{render(c, cam, RenderMode::hard).image, cam}};
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (cv[0].image.at(x, y, 3) > 0.5)
                for (int ch = 0; ch < 3; ++ch)
                    cv[0].image.at(x, y, ch) = u(rng);
    const ColorMatrix upc = test::random_colors(8, 4) - ColorMatrix::Constant(8, 4, 0.5);
    const auto an = unproject_backward(c, cv, upc);
    auto objective = [&](const std::vector<PosedImage>& v) {
        const Mesh m = unproject(c, v);
        return (m.colors.leftCols<3>().cwiseProduct(upc.leftCols<3>())).sum();
    };
    int checked = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                if (an[0].at(x, y, ch) == 0.0 && (x + y + ch) % 11 != 0)
                    continue;
                auto a = cv, b = cv;
                a[0].image.at(x, y, ch) += 1e-4;
                b[0].image.at(x, y, ch) -= 1e-4;
                const double fd = (objective(a) - objective(b)) / 2e-4;
                CHECK(std::abs(fd - an[0].at(x, y, ch)) <= 1e-4 * std::max(1.0, std::abs(fd)));
                ++checked;
            }
    CHECK(checked > 20);
}

} // TEST_SUITE
