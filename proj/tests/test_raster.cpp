#include "helpers.hpp"

#include "mvd/camera.hpp"
#include "mvd/image_io.hpp"
#include "mvd/kernels/kernels.hpp"
#include "mvd/raster.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvd;

namespace {

constexpr double kPi = 3.14159265358979323846;

Camera cam_at(double elev, double azim, int res)
{
    Camera c;
    c.elevation_deg = elev;
    c.azimuth_deg = azim;
    c.width = c.height = res;
    return c;
}

// World point that projects to screen (sx, sy) at depth `depth`.
Vec3 screen_to_world(const Camera& c, double sx, double sy, double depth)
{
    const double f = c.focal_px();
    const Vec3 centre = c.position() + c.forward() * depth;
    return centre + c.right() * ((sx - c.width / 2.0) * depth / f) - c.up() * ((sy - c.height / 2.0) * depth / f);
}

Mesh screen_triangle(const Camera& c, const std::array<Eigen::Vector2d, 3>& pts, double depth)
{
    Mesh m;
    m.vertices.resize(3, 3);
    for (int i = 0; i < 3; ++i)
        m.vertices.row(i) = screen_to_world(c, pts[i].x(), pts[i].y(), depth).transpose();
    m.faces.resize(1, 3);
    m.faces << 0, 1, 2;
    // Keep the front side toward the camera.
    if (face_normal(m, 0).dot(c.forward()) > 0)
        m.faces << 0, 2, 1;
    return m;
}

} // namespace

TEST_SUITE("raster") {

TEST_CASE("projection conventions")
{
    const Camera c = cam_at(20, 30, 256);
    const Projection o = project(Vec3::Zero(), c);
    CHECK(o.x == doctest::Approx(128.0));
    CHECK(o.y == doctest::Approx(128.0));
    CHECK(o.depth == doctest::Approx(4.0));
    CHECK(o.in_front);

    // Pinhole oracle: x = W/2 + d / (4 tan 15deg) * W/2.
    const double d = 0.3;
    const Projection p = project(c.right() * d, c);
    CHECK(p.x == doctest::Approx(128.0 + d / (4.0 * std::tan(15.0 * kPi / 180.0)) * 128.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(128.0));
    const Projection q = project(c.up() * d, c);
    CHECK(q.y < 128.0); // image y grows downward

    const Camera top = cam_at(90, 0, 64);
    CHECK((top.position() - Vec3(0, 0, 4)).norm() < 1e-12);
    CHECK((top.forward() - Vec3(0, 0, -1)).norm() < 1e-12);
    top.validate();

    Camera bad = c;
    bad.fov_deg = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("projection jacobian matches finite differences")
{
    const Camera c = cam_at(-10, 75, 128);
    const Vec3 x(0.3, -0.2, 0.5);
    const Mat3 j = projection_jacobian(x, c);
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
        Vec3 a = x, b = x;
        a[k] += h;
        b[k] -= h;
        const Projection pa = project(a, c), pb = project(b, c);
        const Vec3 fd((pa.x - pb.x) / (2 * h), (pa.y - pb.y) / (2 * h), (pa.depth - pb.depth) / (2 * h));
        CHECK((fd - j.col(k)).norm() < 1e-6 * std::max(1.0, fd.norm()));
    }
}

TEST_CASE("default view table")
{
    const auto cams = default_view_cameras(256);
    REQUIRE(cams.size() == 6);
    CHECK(cams[0].elevation_deg == 20.0);
    CHECK(cams[0].azimuth_deg == 30.0);
    CHECK(cams[1].elevation_deg == -10.0);
    CHECK(cams[5].azimuth_deg == 330.0);
}

TEST_CASE("hard rendering basics")
{
    const Camera c = cam_at(0, 0, 64);
    Mesh empty;
    empty.vertices.resize(0, 3);
    empty.faces.resize(0, 3);
    const RenderOutput e = render(empty, c, RenderMode::hard);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            CHECK(e.image.at(x, y, 3) == 0.0);

    // Triangle far larger than the screen, constant color.
    Mesh big = screen_triangle(c, {Eigen::Vector2d(-200, -200), Eigen::Vector2d(300, -200), Eigen::Vector2d(32, 400)}, 4);
    big.colors = ColorMatrix(3, 4);
    big.colors.rowwise() = Eigen::RowVector4d(0.2, 0.4, 0.6, 1.0);
    const RenderOutput r = render(big, c, RenderMode::hard);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            CHECK(r.image.at(x, y, 0) == 0.2);
            CHECK(r.image.at(x, y, 1) == 0.4);
            CHECK(r.image.at(x, y, 2) == 0.6);
            CHECK(r.image.at(x, y, 3) == 1.0);
            CHECK(r.face_id[y * 64 + x] == 0);
        }
    CHECK(render(big, c, RenderMode::hard).image == r.image);
}

TEST_CASE("soft alpha is one half on a silhouette edge")
{
    const Camera c = cam_at(0, 0, 64);
    // Vertical edge through the center of pixel column 32; the triangle lies to its left.
    Mesh m = screen_triangle(c, {Eigen::Vector2d(32.5, -100), Eigen::Vector2d(32.5, 164), Eigen::Vector2d(-150, 32)}, 4);
    m.colors = ColorMatrix::Ones(3, 4);
    const RenderOutput r = render(m, c, RenderMode::soft);
    CHECK(r.image.at(32, 32, 3) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(r.image.at(20, 32, 3) > 0.99);
    CHECK(r.image.at(45, 32, 3) < 0.01);
}

TEST_CASE("color gradients are exact")
{
    const Camera c = cam_at(20, 30, 48);
    Mesh m = make_gt_mesh(Shape::sphere, 2, ColorPattern::checker, 1);
    const RenderPass pass(m, c, RenderMode::hard);

    // Uniform upstream on one channel: vertex gradients sum to the covered pixel count.
    ImageGradient ones(48, 48, 0.0);
    int covered = 0;
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            ones.at(x, y, 1) = 1.0;
            covered += pass.output().image.at(x, y, 3) > 0.0;
        }
    const ColorMatrix g1 = pass.backward_colors(ones);
    CHECK(g1.col(1).sum() == doctest::Approx(covered).epsilon(1e-10));
    CHECK(g1.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g1.col(3).cwiseAbs().maxCoeff() == 0.0);

    CHECK(pass.backward_colors(ImageGradient(48, 48, 0.0)).cwiseAbs().maxCoeff() == 0.0);

    // Random upstream against central differences of <u, shade(colors)>.
    ImageGradient u(48, 48);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (double& v : u.data())
        v = dist(rng);
    const ColorMatrix g = pass.backward_colors(u);
    auto dot = [&](const ImageRGBA& img) {
        double s = 0;
        for (size_t i = 0; i < img.data().size(); ++i)
            if (i % 4 != 3)
                s += img.data()[i] * u.data()[i];
        return s;
    };
    for (int v : {0, 5, 17, 40, 100, 150}) {
        for (int ch = 0; ch < 3; ++ch) {
            ColorMatrix a = m.colors, b = m.colors;
            a(v, ch) += 1e-3;
            b(v, ch) -= 1e-3;
            const double fd = (dot(pass.shade(a)) - dot(pass.shade(b))) / 2e-3;
            CHECK(std::abs(fd - g(v, ch)) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("soft position gradients match finite differences")
{
    const Camera c = cam_at(15, 20, 64);
    Mesh m = test::flat_quad(0.6);
    m.vertices.col(2) = 0.3 * m.vertices.col(0);
    m.vertices.row(2) += Eigen::RowVector3d(0.1, 0.05, -0.2);
    // Face the default camera side.
    m.vertices = (m.vertices * Eigen::AngleAxisd(kPi / 2, Vec3::UnitY()).toRotationMatrix().transpose()).eval();
    m.colors = test::random_colors(4, 2);
    if (face_normal(m, 0).dot(c.forward()) > 0)
        m.faces.col(1).swap(m.faces.col(2));

    const RenderPass pass(m, c, RenderMode::soft);
    const double h = 1e-3;
    for (int ch : {3, 0}) {
        int probes = 0, bad = 0;
        for (int p = 0; p < 64 * 64 && probes < 40; p += 7) {
            const int x = p % 64, y = p / 64;
            ImageGradient u(64, 64, 0.0);
            u.at(x, y, ch) = 1.0;
            const VertexMatrix g = pass.backward_positions(u);
            for (int v = 0; v < 4; ++v)
                for (int k = 0; k < 3; ++k) {
                    if (std::abs(g(v, k)) <= 1e-4)
                        continue;
                    Mesh a = m, b = m;
                    a.vertices(v, k) += h;
                    b.vertices(v, k) -= h;
                    const double fd = (render(a, c, RenderMode::soft).image.at(x, y, ch) -
                                       render(b, c, RenderMode::soft).image.at(x, y, ch)) / (2 * h);
                    ++probes;
                    if (std::abs(fd - g(v, k)) > 5e-2 * std::abs(g(v, k)))
                        ++bad;
                }
        }
        INFO("channel " << ch);
        CHECK(probes >= 20);
        CHECK(bad == 0);
    }
}

TEST_CASE("hard and soft agree away from the silhouette")
{
    const Camera c = cam_at(20, 90, 128);
    const Mesh m = make_gt_mesh(Shape::blob, 3, ColorPattern::spots, 4);
    const ImageRGBA hard = render(m, c, RenderMode::hard).image;
    const ImageRGBA soft = render(m, c, RenderMode::soft).image;
    int checked = 0;
    for (int y = 3; y < 125; ++y)
        for (int x = 3; x < 125; ++x) {
            bool interior = true;
            for (int dy = -3; dy <= 3 && interior; ++dy)
                for (int dx = -3; dx <= 3 && interior; ++dx)
                    interior = hard.at(x + dx, y + dy, 3) > 0.5;
            if (!interior)
                continue;
            ++checked;
            for (int ch = 0; ch < 4; ++ch)
                CHECK(std::abs(hard.at(x, y, ch) - soft.at(x, y, ch)) <= 1.0 / 255);
        }
    CHECK(checked > 1000);
}

TEST_CASE("normal maps")
{
    // Quad facing the camera.
    const Camera c = cam_at(0, 0, 32);
    Mesh q = test::flat_quad(0.5);
    q.vertices = (q.vertices * Eigen::AngleAxisd(kPi / 2, Vec3::UnitY()).toRotationMatrix().transpose()).eval();
    if (face_normal(q, 0).dot(c.forward()) > 0)
        q.faces.col(1).swap(q.faces.col(2));
    const ImageRGBA n = render_normal_map(q, c);
    CHECK(n.at(16, 16, 3) == 1.0);
    CHECK(n.at(16, 16, 0) == doctest::Approx(0.5));
    CHECK(n.at(16, 16, 1) == doctest::Approx(0.5));
    CHECK(n.at(16, 16, 2) == doctest::Approx(1.0));

    // Tilted 60 degrees about the camera up axis.
    Mesh t = q;
    const Mat3 rot = Eigen::AngleAxisd(kPi / 3, c.up()).toRotationMatrix();
    t.vertices = (t.vertices * rot.transpose()).eval();
    const Vec3 expect = to_camera_axes(face_normal(t, 0), c);
    const ImageRGBA nt = render_normal_map(t, c);
    REQUIRE(nt.at(16, 16, 3) == 1.0);
    for (int k = 0; k < 3; ++k)
        CHECK(nt.at(16, 16, k) == doctest::Approx(0.5 + 0.5 * expect[k]));
    CHECK(std::abs(expect[2] - 0.5) < 1e-9);

    // Sphere: decoded normals within 5 degrees of the analytic normal at the ray hit.
    const Camera sc = cam_at(20, 30, 96);
    const Mesh s = make_icosphere(4);
    const ImageRGBA ns = render_normal_map(s, sc);
    const double f = sc.focal_px();
    int count = 0;
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            if (ns.at(x, y, 3) < 0.5)
                continue;
            const Vec3 dir = (sc.forward() + sc.right() * ((x + 0.5 - 48) / f) - sc.up() * ((y + 0.5 - 48) / f)).normalized();
            const Vec3 o = sc.position();
            const double b = o.dot(dir), disc = b * b - (o.squaredNorm() - 1.0);
            if (disc < 0.02) // the polyhedron pokes past the sphere near grazing rays
                continue;
            const Vec3 hit = o + dir * (-b - std::sqrt(disc));
            const Vec3 analytic = to_camera_axes(hit.normalized(), sc);
            const Vec3 decoded = Vec3(ns.at(x, y, 0), ns.at(x, y, 1), ns.at(x, y, 2)) * 2.0 - Vec3::Ones();
            CHECK(decoded.normalized().dot(analytic) > std::cos(5.0 * kPi / 180));
            ++count;
        }
    CHECK(count > 500);
}

TEST_CASE("image io and sampling")
{
    ImageRGBA img(7, 5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (double& v : img.data())
        v = u(rng);
    const auto dir = test::temp_dir("imageio");
    write_png(dir / "a.png", img);
    const ImageRGBA back = read_png(dir / "a.png");
    REQUIRE(back.same_size(img));
    for (size_t i = 0; i < img.data().size(); ++i)
        CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.5 / 255 + 1e-12);
    CHECK_THROWS_AS(read_png(dir / "missing.png"), Error);

    std::vector<double> depth(35);
    for (int i = 0; i < 35; ++i)
        depth[i] = i % 4 == 0 ? std::numeric_limits<double>::infinity() : 0.25 * i;
    write_depth(dir / "d.bin", 7, 5, depth);
    int w = 0, h = 0;
    const auto dback = read_depth(dir / "d.bin", &w, &h);
    CHECK(w == 7);
    CHECK(h == 5);
    CHECK(dback == depth);

    // Bilinear sampling at integer coordinates reads the pixel; splat is its adjoint.
    CHECK((sample_bilinear(img, 3, 2) - img.rgba(3, 2)).norm() < 1e-15);
    CHECK(sample_bilinear(img, -5, 2).norm() == 0.0);
    ImageGradient g(7, 5, 0.0);
    const Eigen::Vector4d val(1, 2, 3, 4);
    splat_bilinear(g, 2.3, 1.6, val);
    double lhs = 0;
    for (size_t i = 0; i < img.data().size(); ++i)
        lhs += g.data()[i] * img.data()[i];
    CHECK(lhs == doctest::Approx(sample_bilinear(img, 2.3, 1.6).dot(val)).epsilon(1e-12));

    const ImageRGBA half = downsample2(img);
    CHECK(half.width() == 3);
    CHECK(half.height() == 2);
    CHECK(half.at(1, 1, 2) ==
          doctest::Approx((img.at(2, 2, 2) + img.at(3, 2, 2) + img.at(2, 3, 2) + img.at(3, 3, 2)) / 4));
}

TEST_CASE("simd kernels match the scalar reference")
{
    using namespace mvd::kernels;
    const KernelTable& ref = scalar_table();
    if (!isa_available(Isa::avx2)) {
        MESSAGE("AVX2 unavailable on this CPU; only the scalar table is exercised");
        return;
    }
    const KernelTable& simd = table(Isa::avx2);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    const int w = 37, h = 23;
    for (int n : {0, 1, 3, 4, 5, 17, 256, 1001}) {
        std::vector<double> img(4 * w * h), xs(n), ys(n), grads(4 * n);
        for (double& v : img)
            v = u(rng);
        for (int i = 0; i < n; ++i) {
            xs[i] = -2.0 + (w + 3.0) * u(rng); // includes taps outside the image
            ys[i] = -2.0 + (h + 3.0) * u(rng);
        }
        if (n > 2) {
            xs[0] = 3.0; // exact integer tap
            ys[0] = 4.0;
            xs[1] = w - 1;
            ys[1] = h - 1;
        }
        for (double& v : grads)
            v = u(rng) - 0.5;

        std::vector<double> o1(4 * n), o2(4 * n);
        ref.sample_bilinear_rgba(img.data(), w, h, xs.data(), ys.data(), n, o1.data());
        simd.sample_bilinear_rgba(img.data(), w, h, xs.data(), ys.data(), n, o2.data());
        for (int i = 0; i < 4 * n; ++i)
            CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-14).scale(1.0));

        std::vector<double> s1(4 * w * h, 0.0), s2(4 * w * h, 0.0);
        ref.scatter_bilinear_rgba(s1.data(), w, h, xs.data(), ys.data(), grads.data(), n);
        simd.scatter_bilinear_rgba(s2.data(), w, h, xs.data(), ys.data(), grads.data(), n);
        for (size_t i = 0; i < s1.size(); ++i)
            CHECK(std::abs(s1[i] - s2[i]) <= 1e-13);

        std::vector<double> gx1(n), gy1(n), gx2(n), gy2(n);
        ref.bilinear_spatial_dot(img.data(), w, h, xs.data(), ys.data(), grads.data(), n, gx1.data(), gy1.data());
        simd.bilinear_spatial_dot(img.data(), w, h, xs.data(), ys.data(), grads.data(), n, gx2.data(), gy2.data());
        for (int i = 0; i < n; ++i) {
            CHECK(std::abs(gx1[i] - gx2[i]) <= 1e-13);
            CHECK(std::abs(gy1[i] - gy2[i]) <= 1e-13);
        }

        const int npix = w * h;
        std::vector<double> b(img);
        for (int i = 0; i < npix; i += 3)
            b[4 * i + 3] = 0.2; // some pixels fail the alpha test
        for (int i = 0; i < npix; ++i)
            b[4 * i] += 0.1;
        const MaskedSse m1 = ref.masked_rgb_sse(img.data(), b.data(), npix);
        const MaskedSse m2 = simd.masked_rgb_sse(img.data(), b.data(), npix);
        CHECK(m1.count == m2.count);
        CHECK(m1.sum == doctest::Approx(m2.sum).epsilon(1e-12));
        CHECK(ref.alpha_sse(img.data(), b.data(), npix) ==
              doctest::Approx(simd.alpha_sse(img.data(), b.data(), npix)).epsilon(1e-12));
    }
}

} // TEST_SUITE
