#pragma once

#include "mvd/mesh.hpp"

#include <Eigen/SparseCore>

#include <tuple>
#include <vector>

namespace mvd {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Assembled sparse operator. Duplicate triplets are summed at construction.
class SparseOperator {
public:
    struct Entry {
        int row;
        int col;
        double value;
        bool operator==(const Entry&) const = default;
    };

    SparseOperator() = default;
    SparseOperator(int rows, int cols, const std::vector<Eigen::Triplet<double>>& triplets);
    explicit SparseOperator(SparseMatrix matrix);

    int rows() const { return static_cast<int>(matrix_.rows()); }
    int cols() const { return static_cast<int>(matrix_.cols()); }
    const SparseMatrix& matrix() const { return matrix_; }

    /// Entries in (row, col) order; explicit zeros are kept.
    std::vector<Entry> triplets() const;

private:
    SparseMatrix matrix_;
};

enum class LaplacianKind { cotangent, uniform };

/// Stacked per-face gradient operator, 3T x V. Row 3t+d holds the d-th component
/// of the gradient on face t of the piecewise-linear interpolant.
SparseOperator build_gradient_operator(const Mesh& mesh);

/// V x V positive semi-definite Laplacian (diagonal >= 0, rows sum to zero).
/// The cotangent variant equals G^T A G for G the gradient and A the mass matrix.
SparseOperator build_laplacian(const Mesh& mesh, LaplacianKind kind);

/// Diagonal 3T x 3T matrix; entries 3t..3t+2 hold the area of face t.
SparseOperator build_mass_matrix(const Mesh& mesh);

/// Area-weighted, normalized vertex normals. Vertices without incident area
/// get a zero normal and are listed in `isolated` when given.
std::vector<Vec3> vertex_normals(const Mesh& mesh, std::vector<int>* isolated = nullptr);
VertexMatrix vertex_normal_matrix(const Mesh& mesh);

/// Gradients of the three barycentric basis functions on one triangle.
std::array<Vec3, 3> barycentric_gradients(const Vec3& a, const Vec3& b, const Vec3& c);

} // namespace mvd
