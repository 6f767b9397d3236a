#include "mvd/mesh.hpp"

#include <algorithm>
#include <numeric>

namespace mvd {

DegenerateFaceError::DegenerateFaceError(int face)
    : Error("degenerate face " + std::to_string(face) + " (area below 1e-12)"), face_(face)
{
}

double face_area(const Mesh& mesh, int f)
{
    const Vec3 a = mesh.vertex(mesh.faces(f, 0));
    const Vec3 b = mesh.vertex(mesh.faces(f, 1));
    const Vec3 c = mesh.vertex(mesh.faces(f, 2));
    return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 face_normal(const Mesh& mesh, int f)
{
    const Vec3 a = mesh.vertex(mesh.faces(f, 0));
    const Vec3 b = mesh.vertex(mesh.faces(f, 1));
    const Vec3 c = mesh.vertex(mesh.faces(f, 2));
    return (b - a).cross(c - a).normalized();
}

void Mesh::validate() const
{
    const int n = vertex_count();
    if (colors.rows() != 0 && colors.rows() != n)
        throw Error("color count " + std::to_string(colors.rows()) + " does not match vertex count " +
                    std::to_string(n));
    std::vector<char> used(static_cast<size_t>(n), 0);
    for (int f = 0; f < face_count(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const int v = faces(f, k);
            if (v < 0 || v >= n)
                throw Error("face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                            " out of range");
            used[static_cast<size_t>(v)] = 1;
        }
        if (!(face_area(*this, f) >= kMinFaceArea))
            throw DegenerateFaceError(f);
    }
    for (int v = 0; v < n; ++v)
        if (!used[static_cast<size_t>(v)])
            throw Error("vertex " + std::to_string(v) + " belongs to no face");
}

Vec3 centroid(const VertexMatrix& vertices)
{
    if (vertices.rows() == 0)
        return Vec3::Zero();
    return vertices.colwise().mean().transpose();
}

double bbox_diagonal(const VertexMatrix& vertices)
{
    if (vertices.rows() == 0)
        return 0.0;
    return (vertices.colwise().maxCoeff() - vertices.colwise().minCoeff()).norm();
}

std::vector<std::array<int, 2>> unique_edges(const FaceMatrix& faces)
{
    std::vector<std::array<int, 2>> edges;
    edges.reserve(static_cast<size_t>(faces.rows()) * 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int k = 0; k < 3; ++k) {
            int a = faces(f, k), b = faces(f, (k + 1) % 3);
            if (a > b)
                std::swap(a, b);
            edges.push_back({a, b});
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

std::vector<std::vector<int>> vertex_adjacency(int vertex_count, const FaceMatrix& faces)
{
    std::vector<std::vector<int>> adj(static_cast<size_t>(vertex_count));
    for (const auto& e : unique_edges(faces)) {
        adj[static_cast<size_t>(e[0])].push_back(e[1]);
        adj[static_cast<size_t>(e[1])].push_back(e[0]);
    }
    for (auto& a : adj)
        std::sort(a.begin(), a.end());
    return adj;
}

std::vector<int> connected_components(int vertex_count, const FaceMatrix& faces, int* count)
{
    std::vector<int> parent(static_cast<size_t>(vertex_count));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        for (int k = 1; k < 3; ++k) {
            const int a = find(faces(f, 0)), b = find(faces(f, k));
            if (a != b)
                parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
        }
    std::vector<int> label(static_cast<size_t>(vertex_count), -1);
    int next = 0;
    std::vector<int> root_label(static_cast<size_t>(vertex_count), -1);
    for (int v = 0; v < vertex_count; ++v) {
        const int r = find(v);
        if (root_label[static_cast<size_t>(r)] < 0)
            root_label[static_cast<size_t>(r)] = next++;
        label[static_cast<size_t>(v)] = root_label[static_cast<size_t>(r)];
    }
    if (count)
        *count = next;
    return label;
}

} // namespace mvd
