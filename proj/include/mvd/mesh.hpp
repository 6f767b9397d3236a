#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvd {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FaceMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
using ColorMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateFaceError : public Error {
public:
    explicit DegenerateFaceError(int face);
    int face() const { return face_; }

private:
    int face_;
};

/// Minimum triangle area accepted by validation and operator assembly.
inline constexpr double kMinFaceArea = 1e-12;

/// Triangle mesh with optional per-vertex RGBA colors in [0,1].
struct Mesh {
    VertexMatrix vertices;
    FaceMatrix faces;
    ColorMatrix colors; // empty or vertex_count x 4

    int vertex_count() const { return static_cast<int>(vertices.rows()); }
    int face_count() const { return static_cast<int>(faces.rows()); }
    bool has_colors() const { return colors.rows() == vertices.rows() && colors.rows() > 0; }

    Vec3 vertex(int i) const { return vertices.row(i).transpose(); }

    /// Throws on out-of-range indices, degenerate faces or unreferenced vertices.
    void validate() const;
};

double face_area(const Mesh& mesh, int face);
Vec3 face_normal(const Mesh& mesh, int face); // unit, follows winding

Vec3 centroid(const VertexMatrix& vertices);
double bbox_diagonal(const VertexMatrix& vertices);

/// Unique undirected edges (i < j), sorted lexicographically.
std::vector<std::array<int, 2>> unique_edges(const FaceMatrix& faces);

/// Sorted neighbor lists per vertex.
std::vector<std::vector<int>> vertex_adjacency(int vertex_count, const FaceMatrix& faces);

/// Connected components of the vertex graph; returns component id per vertex.
std::vector<int> connected_components(int vertex_count, const FaceMatrix& faces, int* count = nullptr);

} // namespace mvd
