#include "helpers.hpp"

#include "mvd/deform3d.hpp"
#include "mvd/operators.hpp"

#include <Eigen/Dense>
#include <doctest.h>

using namespace mvd;

namespace {

VertexMatrix centered(const VertexMatrix& v)
{
    return v.rowwise() - v.colwise().mean();
}

// Minimum-norm least-squares solution of sqrt(A) G V = sqrt(A) J by a dense
// complete orthogonal decomposition, shifted to `target`.
VertexMatrix dense_poisson(const Mesh& m, const JacobianField& j, const Vec3& target)
{
    const Eigen::MatrixXd g = Eigen::MatrixXd(build_gradient_operator(m).matrix());
    const Eigen::VectorXd a = build_mass_matrix(m).matrix().diagonal().cwiseSqrt();
    const Eigen::MatrixXd lhs = a.asDiagonal() * g;
    const Eigen::MatrixXd rhs = a.asDiagonal() * j.stacked;
    Eigen::MatrixXd v = lhs.completeOrthogonalDecomposition().solve(rhs);
    VertexMatrix out = v;
    out.rowwise() += (target - centroid(out)).transpose();
    return out;
}

} // namespace

TEST_SUITE("deform3d") {

TEST_CASE("identity Jacobians reproduce the mesh")
{
    for (const Mesh& m : {test::noisy_sphere(2, 0.15, 1), make_gt_mesh(Shape::torus, 1, ColorPattern::checker, 0),
                          test::planar_grid(7)}) {
        const PoissonSystem sys(m);
        const VertexMatrix v = sys.solve(init_jacobians(m));
        CHECK((centered(v) - centered(m.vertices)).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((centroid(v) - centroid(m.vertices)).norm() < 1e-9);
    }
}

TEST_CASE("Jacobians of planar and rotated meshes")
{
    const Mesh grid = test::planar_grid(4);
    const JacobianField j = init_jacobians(grid);
    for (int t = 0; t < grid.face_count(); ++t) {
        const Mat3 jt = j.face(t);
        CHECK(jt.row(2).norm() < 1e-12); // z never changes on a flat mesh
        CHECK(jt.col(2).norm() < 1e-12); // and no gradient leaves the plane
        CHECK((jt.topLeftCorner<2, 2>() - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    }

    const Mesh m = test::noisy_sphere(1, 0.1, 4);
    const Mat3 r = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    Mesh rot = m;
    rot.vertices = (m.vertices * r.transpose()).eval();
    const JacobianField a = init_jacobians(m), b = init_jacobians(rot);
    for (int t = 0; t < m.face_count(); ++t)
        CHECK((b.face(t) - r * a.face(t) * r.transpose()).norm() < 1e-10);
}

TEST_CASE("Poisson solve is linear and matches a dense oracle")
{
    const Mesh m = test::noisy_sphere(1, 0.15, 2); // 42 vertices
    const PoissonSystem sys(m);
    JacobianField j2 = init_jacobians(m);
    j2.stacked *= 2.0;
    const Vec3 c = centroid(m.vertices);
    VertexMatrix expect = (m.vertices.rowwise() - c.transpose()) * 2.0;
    expect.rowwise() += c.transpose();
    CHECK((sys.solve(j2) - expect).cwiseAbs().maxCoeff() <= 1e-6);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    for (const Mesh& mesh : {m, make_icosphere(0)}) {
        const PoissonSystem s(mesh);
        JacobianField j = init_jacobians(mesh);
        for (int i = 0; i < j.stacked.size(); ++i)
            j.stacked.data()[i] += 0.5 * n01(rng);
        const VertexMatrix got = s.solve(j);
        const VertexMatrix ref = dense_poisson(mesh, j, centroid(mesh.vertices));
        CHECK((got - ref).norm() <= 1e-6 * ref.norm());
    }
}

TEST_CASE("Poisson adjoint")
{
    const Mesh m = make_icosphere(0); // 12 vertices
    const PoissonSystem sys(m);
    CHECK(sys.adjoint(VertexMatrix::Zero(12, 3)).stacked.cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    VertexMatrix g1(12, 3), g2(12, 3);
    for (int i = 0; i < 36; ++i) {
        g1.data()[i] = n01(rng);
        g2.data()[i] = n01(rng);
    }
    const Eigen::MatrixXd sum = sys.adjoint(g1 + g2).stacked;
    CHECK((sum - sys.adjoint(g1).stacked - sys.adjoint(g2).stacked).cwiseAbs().maxCoeff() < 1e-10);

    JacobianField j = init_jacobians(m);
    for (int i = 0; i < j.stacked.size(); ++i)
        j.stacked.data()[i] += 0.2 * n01(rng);
    const JacobianField an = sys.adjoint(g1);
    const double h = 1e-5;
    for (int probe : {0, 7, 19, 33, 58}) {
        JacobianField a = j, b = j;
        a.stacked.data()[probe] += h;
        b.stacked.data()[probe] -= h;
        const double fd = (sys.solve(a).cwiseProduct(g1).sum() - sys.solve(b).cwiseProduct(g1).sum()) / (2 * h);
        CHECK(std::abs(fd - an.stacked.data()[probe]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("Poisson rejects disconnected meshes")
{
    Mesh two = test::right_triangle();
    two.vertices.conservativeResize(6, 3);
    two.vertices.bottomRows(3) = two.vertices.topRows(3).array() + 2.0;
    two.faces.conservativeResize(2, 3);
    two.faces.row(1) << 3, 4, 5;
    CHECK_THROWS_WITH_AS(PoissonSystem{two}, doctest::Contains("2 components"), Error);
}

TEST_CASE("Laplacian smoothness loss")
{
    const Mesh grid = test::planar_grid(6);
    const SparseMatrix l = build_laplacian(grid, LaplacianKind::uniform).matrix();
    const VertexMatrix lv = l * grid.vertices;
    for (int j = 1; j < 5; ++j)
        for (int i = 1; i < 5; ++i)
            CHECK(lv.row(j * 6 + i).norm() < 1e-12);

    // Six-neighbor fan with the center raised by h: (6h)^2 + 6 (4 + h^2).
    const double h = 0.5;
    const Mesh spike = test::fan(6, h);
    CHECK(laplacian_smooth_loss(spike) == doctest::Approx(42 * h * h + 24).epsilon(1e-12));

    const Mesh s = test::noisy_sphere(2, 0.1, 6);
    Mesh shifted = s;
    shifted.vertices.rowwise() += Eigen::RowVector3d(0.3, -1.0, 2.0);
    CHECK(laplacian_smooth_loss(shifted) == doctest::Approx(laplacian_smooth_loss(s)).epsilon(1e-12));

    const LaplacianSmoothLoss loss(s);
    const VertexMatrix g = loss.gradient(s.vertices);
    for (int probe : {0, 10, 50, 100}) {
        VertexMatrix a = s.vertices, b = s.vertices;
        a.data()[probe] += 1e-6;
        b.data()[probe] -= 1e-6;
        CHECK(g.data()[probe] == doctest::Approx((loss.value(a) - loss.value(b)) / 2e-6).epsilon(1e-6));
    }
}

TEST_CASE("deformer parameterizations")
{
    const Mesh m = test::noisy_sphere(2, 0.1, 7);
    const VertexDeformer vd(m);
    CHECK(vd.positions(vd.initial_parameters()) == m.vertices);

    const GridDeformer gd(m, 5);
    const Eigen::VectorXd p0 = gd.initial_parameters();
    CHECK((gd.positions(p0) - m.vertices).cwiseAbs().maxCoeff() < 1e-15);

    Eigen::VectorXd shift = p0;
    for (int n = 0; n < 125; ++n)
        shift.segment<3>(3 * n) = Vec3(0.1, -0.2, 0.05);
    const VertexMatrix moved = gd.positions(shift);
    for (int v = 0; v < m.vertex_count(); ++v)
        CHECK((moved.row(v) - m.vertices.row(v) - Eigen::RowVector3d(0.1, -0.2, 0.05)).norm() < 1e-12);

    // One lattice node: only vertices inside its incident cells move.
    Vec3 lo = m.vertices.colwise().minCoeff().transpose(), hi = m.vertices.colwise().maxCoeff().transpose();
    const double pad = 0.01 * (hi - lo).norm();
    lo.array() -= pad;
    hi.array() += pad;
    const int ni = 2, nj = 1, nk = 3;
    Eigen::VectorXd one = p0;
    one.segment<3>(3 * gd.node_index(ni, nj, nk)) = Vec3(0.3, 0.3, 0.3);
    const VertexMatrix single = gd.positions(one);
    int inside = 0;
    for (int v = 0; v < m.vertex_count(); ++v) {
        const Vec3 u = ((m.vertex(v) - lo).array() / (hi - lo).array() * 4.0).matrix();
        const Vec3 d = (u - Vec3(ni, nj, nk)).cwiseAbs();
        if (std::abs(d.maxCoeff() - 1.0) < 1e-9)
            continue;
        const bool expect = d.maxCoeff() < 1.0;
        inside += expect;
        CHECK(((single.row(v) - m.vertices.row(v)).norm() > 0.0) == expect);
    }
    CHECK(inside > 0);

    // Pullback is the transpose of the (affine) parameterization.
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n01;
    VertexMatrix g(m.vertex_count(), 3);
    for (int i = 0; i < g.size(); ++i)
        g.data()[i] = n01(rng);
    Eigen::VectorXd dp(p0.size());
    for (int i = 0; i < dp.size(); ++i)
        dp[i] = n01(rng);
    const double lhs = gd.pullback(g).dot(dp);
    const double rhs = (gd.positions(p0 + dp) - gd.positions(p0)).cwiseProduct(g).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    const JacobianDeformer jd(m);
    const Eigen::VectorXd j0 = jd.initial_parameters();
    Eigen::VectorXd dj(j0.size());
    for (int i = 0; i < dj.size(); ++i)
        dj[i] = 0.01 * n01(rng);
    const double jl = jd.pullback(g).dot(dj);
    const double jr = (jd.positions(j0 + dj) - jd.positions(j0)).cwiseProduct(g).sum();
    CHECK(jl == doctest::Approx(jr).epsilon(1e-8));
}

namespace {

// 0.5 |V - target|^2
struct TargetObjective final : PositionObjective {
    VertexMatrix target;
    LossTerms evaluate(const VertexMatrix& v, VertexMatrix& g) override
    {
        g = v - target;
        LossTerms t;
        t.add("fit", 1.0, 0.5 * g.squaredNorm());
        return t;
    }
};

} // namespace

TEST_CASE("optimization loop")
{
    const Mesh m = test::noisy_sphere(2, 0.1, 9);
    TargetObjective obj;
    obj.target = m.vertices * 1.1;
    OptimConfig cfg;
    cfg.iterations = 0;
    for (auto* name : {"jacobian", "vertex", "grid"}) {
        INFO(name);
        const std::string n = name;
        const Mesh zero = n == "jacobian" ? deform_jacobian(m, obj, cfg)
                          : n == "vertex" ? deform_vertex_replacement(m, obj, cfg)
                                          : deform_grid3d(m, obj, cfg);
        CHECK(zero.vertices == m.vertices);
        CHECK(zero.faces == m.faces);
    }

    cfg.iterations = 60;
    cfg.step_size = 1e-2;
    LossLog log;
    const Mesh out = deform_vertex_replacement(m, obj, cfg, &log);
    CHECK(log.records.size() == 61);
    CHECK(log.best_total() < log.records.front().loss.total);
    for (const auto& r : log.records)
        CHECK(r.loss.total >= log.best_total());
    CHECK(0.5 * (out.vertices - obj.target).squaredNorm() == doctest::Approx(log.best_total()));

    LossLog log2;
    const Mesh again = deform_vertex_replacement(m, obj, cfg, &log2);
    CHECK(again.vertices == out.vertices);

    LossLog jl;
    const Mesh scaled = deform_jacobian(m, obj, cfg, &jl);
    CHECK(jl.best_total() < jl.records.front().loss.total);
    CHECK(scaled.faces == m.faces);
}

} // TEST_SUITE
