#include "mvd/operators.hpp"

#include <cmath>

namespace mvd {

SparseOperator::SparseOperator(int rows, int cols, const std::vector<Eigen::Triplet<double>>& triplets)
    : matrix_(rows, cols)
{
    for (const auto& t : triplets)
        if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= cols)
            throw Error("sparse entry (" + std::to_string(t.row()) + "," + std::to_string(t.col()) +
                        ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    matrix_.setFromTriplets(triplets.begin(), triplets.end());
    matrix_.makeCompressed();
}

SparseOperator::SparseOperator(SparseMatrix matrix) : matrix_(std::move(matrix))
{
    matrix_.makeCompressed();
}

std::vector<SparseOperator::Entry> SparseOperator::triplets() const
{
    std::vector<Entry> out;
    out.reserve(static_cast<size_t>(matrix_.nonZeros()));
    const SparseMatrix rowmajor_order = matrix_.transpose(); // columns of the transpose are rows
    for (int k = 0; k < rowmajor_order.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(rowmajor_order, k); it; ++it)
            out.push_back({static_cast<int>(it.col()), static_cast<int>(it.row()), it.value()});
    return out;
}

std::array<Vec3, 3> barycentric_gradients(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 n2 = (b - a).cross(c - a); // |n2| = 2 * area
    const double twice_area_sq = n2.squaredNorm();
    // grad phi_i = n x e_i / (2A), with e_i the edge opposite vertex i traversed along the winding.
    return {n2.cross(c - b) / twice_area_sq, n2.cross(a - c) / twice_area_sq, n2.cross(b - a) / twice_area_sq};
}

SparseOperator build_gradient_operator(const Mesh& mesh)
{
    const int nf = mesh.face_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(nf) * 9);
    for (int f = 0; f < nf; ++f) {
        if (!(face_area(mesh, f) >= kMinFaceArea))
            throw DegenerateFaceError(f);
        const auto g = barycentric_gradients(mesh.vertex(mesh.faces(f, 0)), mesh.vertex(mesh.faces(f, 1)),
                                             mesh.vertex(mesh.faces(f, 2)));
        for (int k = 0; k < 3; ++k)
            for (int d = 0; d < 3; ++d)
                trip.emplace_back(3 * f + d, mesh.faces(f, k), g[k][d]);
    }
    return SparseOperator(3 * nf, mesh.vertex_count(), trip);
}

SparseOperator build_mass_matrix(const Mesh& mesh)
{
    const int nf = mesh.face_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(nf) * 3);
    for (int f = 0; f < nf; ++f) {
        const double area = face_area(mesh, f);
        if (!(area >= kMinFaceArea))
            throw DegenerateFaceError(f);
        for (int d = 0; d < 3; ++d)
            trip.emplace_back(3 * f + d, 3 * f + d, area);
    }
    return SparseOperator(3 * nf, 3 * nf, trip);
}

SparseOperator build_laplacian(const Mesh& mesh, LaplacianKind kind)
{
    const int n = mesh.vertex_count();
    std::vector<Eigen::Triplet<double>> trip;
    if (kind == LaplacianKind::uniform) {
        for (const auto& e : unique_edges(mesh.faces)) {
            trip.emplace_back(e[0], e[1], -1.0);
            trip.emplace_back(e[1], e[0], -1.0);
            trip.emplace_back(e[0], e[0], 1.0);
            trip.emplace_back(e[1], e[1], 1.0);
        }
        return SparseOperator(n, n, trip);
    }
    trip.reserve(static_cast<size_t>(mesh.face_count()) * 12);
    for (int f = 0; f < mesh.face_count(); ++f) {
        const double area = face_area(mesh, f);
        if (!(area >= kMinFaceArea))
            throw DegenerateFaceError(f);
        for (int k = 0; k < 3; ++k) {
            // Angle at corner k is opposite the edge (k+1, k+2).
            const int i = mesh.faces(f, (k + 1) % 3), j = mesh.faces(f, (k + 2) % 3);
            const Vec3 u = mesh.vertex(i) - mesh.vertex(mesh.faces(f, k));
            const Vec3 v = mesh.vertex(j) - mesh.vertex(mesh.faces(f, k));
            const double half_cot = 0.5 * u.dot(v) / u.cross(v).norm();
            trip.emplace_back(i, j, -half_cot);
            trip.emplace_back(j, i, -half_cot);
            trip.emplace_back(i, i, half_cot);
            trip.emplace_back(j, j, half_cot);
        }
    }
    return SparseOperator(n, n, trip);
}

std::vector<Vec3> vertex_normals(const Mesh& mesh, std::vector<int>* isolated)
{
    std::vector<Vec3> normals(static_cast<size_t>(mesh.vertex_count()), Vec3::Zero());
    for (int f = 0; f < mesh.face_count(); ++f) {
        const Vec3 a = mesh.vertex(mesh.faces(f, 0));
        const Vec3 weighted = (mesh.vertex(mesh.faces(f, 1)) - a).cross(mesh.vertex(mesh.faces(f, 2)) - a);
        for (int k = 0; k < 3; ++k)
            normals[static_cast<size_t>(mesh.faces(f, k))] += weighted;
    }
    if (isolated)
        isolated->clear();
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        auto& n = normals[static_cast<size_t>(v)];
        const double len = n.norm();
        if (len > 0.0 && std::isfinite(len)) {
            n /= len;
        } else {
            n.setZero();
            if (isolated)
                isolated->push_back(v);
        }
    }
    return normals;
}

VertexMatrix vertex_normal_matrix(const Mesh& mesh)
{
    const auto normals = vertex_normals(mesh);
    VertexMatrix out(mesh.vertex_count(), 3);
    for (int v = 0; v < mesh.vertex_count(); ++v)
        out.row(v) = normals[static_cast<size_t>(v)].transpose();
    return out;
}

} // namespace mvd
