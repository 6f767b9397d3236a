#include "helpers.hpp"

#include "mvd/mesh_io.hpp"
#include "mvd/operators.hpp"

#include <doctest.h>

using namespace mvd;

namespace {

double max_abs(const SparseMatrix& m)
{
    double r = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            r = std::max(r, std::abs(it.value()));
    return r;
}

std::vector<Mesh> random_meshes()
{
    std::vector<Mesh> out;
    for (int s = 0; s < 4; ++s)
        out.push_back(test::noisy_sphere(1 + s % 3, 0.1, 11 + s));
    out.push_back(make_gt_mesh(Shape::torus, 2, ColorPattern::checker, 3));
    return out;
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("gradient of the x coordinate on one triangle")
{
    const Mesh m = test::right_triangle();
    const SparseMatrix g = build_gradient_operator(m).matrix();
    CHECK(g.rows() == 3);
    const Eigen::Vector3d f(0, 1, 0);
    const Eigen::Vector3d grad = g * f;
    CHECK(grad.isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));
}

TEST_CASE("gradient annihilates constants and reproduces linear functions")
{
    for (const Mesh& m : random_meshes()) {
        const SparseMatrix g = build_gradient_operator(m).matrix();
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.vertex_count());
        CHECK((g * ones).cwiseAbs().maxCoeff() < 1e-10);
    }
    const Mesh grid = test::planar_grid(6);
    const Eigen::VectorXd gx = build_gradient_operator(grid).matrix() * grid.vertices.col(0);
    for (int t = 0; t < grid.face_count(); ++t) {
        CHECK(gx[3 * t] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(gx[3 * t + 1]) < 1e-12);
        CHECK(std::abs(gx[3 * t + 2]) < 1e-12);
    }
}

TEST_CASE("cotangent Laplacian equals G^T A G and is symmetric")
{
    for (const Mesh& m : random_meshes()) {
        const SparseMatrix l = build_laplacian(m, LaplacianKind::cotangent).matrix();
        const SparseMatrix g = build_gradient_operator(m).matrix();
        const SparseMatrix a = build_mass_matrix(m).matrix();
        const SparseMatrix prod = SparseMatrix(g.transpose()) * a * g;
        CHECK(max_abs(l - prod) < 1e-8);
        CHECK(max_abs(l - SparseMatrix(l.transpose())) < 1e-10);
        const Eigen::VectorXd rows = l * Eigen::VectorXd::Ones(m.vertex_count());
        CHECK(rows.cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("uniform Laplacian on a closed fan")
{
    const Mesh m = test::fan(6);
    const SparseMatrix l = build_laplacian(m, LaplacianKind::uniform).matrix();
    CHECK(l.coeff(0, 0) == 6.0);
    for (int i = 1; i <= 6; ++i)
        CHECK(l.coeff(i, i) == 3.0);
    const Eigen::VectorXd rows = l * Eigen::VectorXd::Ones(7);
    CHECK(rows.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mass matrix")
{
    const Mesh tri = test::right_triangle();
    const SparseMatrix a = build_mass_matrix(tri).matrix();
    REQUIRE(a.rows() == 3);
    REQUIRE(a.cols() == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(a.coeff(i, i) == doctest::Approx(0.5));

    Mesh m = test::noisy_sphere(1, 0.1, 5);
    const Eigen::VectorXd d1 = build_mass_matrix(m).matrix().diagonal();
    m.vertices *= 2.0;
    const Eigen::VectorXd d2 = build_mass_matrix(m).matrix().diagonal();
    CHECK((d2 - 4.0 * d1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vertex normals")
{
    for (const Vec3& n : vertex_normals(test::flat_quad()))
        CHECK((n - Vec3(0, 0, 1)).norm() < 1e-12);

    const Mesh s = make_icosphere(3);
    const auto normals = vertex_normals(s);
    const double cos5 = std::cos(5.0 * 3.14159265358979323846 / 180.0);
    for (int v = 0; v < s.vertex_count(); ++v)
        CHECK(normals[v].dot(s.vertex(v).normalized()) > cos5);

    Mesh flipped = s;
    flipped.faces.col(1).swap(flipped.faces.col(2));
    const auto fn = vertex_normals(flipped);
    for (int v = 0; v < s.vertex_count(); ++v)
        CHECK((fn[v] + normals[v]).norm() < 1e-12);
}

TEST_CASE("operators are deterministic")
{
    const Mesh m = test::noisy_sphere(2, 0.1, 9);
    CHECK(build_laplacian(m, LaplacianKind::cotangent).triplets() ==
          build_laplacian(m, LaplacianKind::cotangent).triplets());
    CHECK(build_gradient_operator(m).triplets() == build_gradient_operator(m).triplets());
}

TEST_CASE("validation rejects bad meshes")
{
    Mesh m = test::right_triangle();
    m.vertices.row(2) = m.vertices.row(1);
    CHECK_THROWS_AS(m.validate(), DegenerateFaceError);
    CHECK_THROWS_AS(build_laplacian(m, LaplacianKind::cotangent), DegenerateFaceError);

    Mesh out_of_range = test::right_triangle();
    out_of_range.faces(0, 2) = 7;
    CHECK_THROWS_AS(out_of_range.validate(), Error);

    Mesh unreferenced = test::right_triangle();
    unreferenced.vertices.conservativeResize(4, 3);
    unreferenced.vertices.row(3) << 5, 5, 5;
    CHECK_THROWS_AS(unreferenced.validate(), Error);
}

TEST_CASE("edges, adjacency and components")
{
    const Mesh m = test::fan(5);
    CHECK(unique_edges(m.faces).size() == 10);
    const auto adj = vertex_adjacency(m.vertex_count(), m.faces);
    CHECK(adj[0].size() == 5);
    CHECK(adj[1] == std::vector<int>{0, 2, 5});

    Mesh two = test::right_triangle();
    two.vertices.conservativeResize(6, 3);
    two.vertices.bottomRows(3) = two.vertices.topRows(3).array() + 3.0;
    two.faces.conservativeResize(2, 3);
    two.faces.row(1) << 3, 4, 5;
    int count = 0;
    const auto comp = connected_components(6, two.faces, &count);
    CHECK(count == 2);
    CHECK(comp[0] != comp[3]);
}

TEST_CASE("mesh file round trips")
{
    Mesh m = make_gt_mesh(Shape::sphere, 2, ColorPattern::checker, 1);
    const auto dir = test::temp_dir("meshio");

    for (auto enc : {PlyEncoding::ascii, PlyEncoding::binary_little_endian}) {
        write_ply(dir / "m.ply", m, enc);
        const Mesh r = read_ply(dir / "m.ply");
        CHECK(r.vertices == m.vertices);
        CHECK(r.faces == m.faces);
        REQUIRE(r.has_colors());
        // Colors are stored as 8-bit.
        CHECK((r.colors - m.colors).cwiseAbs().maxCoeff() <= 0.5 / 255 + 1e-12);
    }

    write_obj(dir / "m.obj", m);
    const Mesh o = read_mesh(dir / "m.obj");
    CHECK(o.faces == m.faces);
    CHECK((o.vertices - m.vertices).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(read_mesh(dir / "missing.ply"), Error);
}

} // TEST_SUITE
