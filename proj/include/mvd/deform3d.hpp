#pragma once

#include "mvd/mesh.hpp"
#include "mvd/operators.hpp"
#include "mvd/optim.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace mvd {

/// Per-face 3x3 Jacobians stored in the layout of G V: row 3t+d, column c holds
/// d x_c / d e_d on face t.
struct JacobianField {
    Eigen::MatrixXd stacked; // 3T x 3

    int face_count() const { return static_cast<int>(stacked.rows() / 3); }
    /// Jacobian of face t with (J)_{c,d} = d x_c / d e_d.
    Mat3 face(int t) const { return stacked.block<3, 3>(3 * t, 0).transpose(); }
    void set_face(int t, const Mat3& j) { stacked.block<3, 3>(3 * t, 0) = j.transpose(); }
    void validate(int expected_faces) const;

    Eigen::VectorXd flatten() const;
    static JacobianField unflatten(const Eigen::VectorXd& params, int faces);
};

JacobianField init_jacobians(const Mesh& mesh);

/// Factorized anchored cotangent system for one mesh topology and rest shape.
class PoissonSystem {
public:
    explicit PoissonSystem(const Mesh& mesh);

    int vertex_count() const { return vertex_count_; }
    int face_count() const { return face_count_; }
    const SparseOperator& gradient() const { return gradient_; }
    const SparseOperator& mass() const { return mass_; }
    const SparseOperator& laplacian() const { return laplacian_; }
    int anchor() const { return 0; }
    const Vec3& rest_centroid() const { return centroid_; }

    /// Vertices solving L V = G^T A J, centered on the rest centroid.
    VertexMatrix solve(const JacobianField& j) const;
    /// Gradient with respect to J of <upstream, solve(J)>.
    JacobianField adjoint(const VertexMatrix& upstream) const;

private:
    Eigen::MatrixXd solve_reduced(const Eigen::MatrixXd& rhs) const;

    int vertex_count_ = 0;
    int face_count_ = 0;
    SparseOperator gradient_;
    SparseOperator mass_;
    SparseOperator laplacian_;
    SparseMatrix gt_a_; // G^T A, V x 3T
    Vec3 centroid_;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
};

VertexMatrix poisson_solve(const PoissonSystem& system, const JacobianField& j);
JacobianField poisson_adjoint(const PoissonSystem& system, const VertexMatrix& upstream);

/// Squared Frobenius norm of L V with the uniform (graph) Laplacian.
class LaplacianSmoothLoss {
public:
    explicit LaplacianSmoothLoss(const Mesh& topology);
    double value(const VertexMatrix& v) const;
    VertexMatrix gradient(const VertexMatrix& v) const;

private:
    SparseMatrix l_;
};

double laplacian_smooth_loss(const Mesh& mesh);

/// Scalar objective over vertex positions.
class PositionObjective {
public:
    virtual ~PositionObjective() = default;
    /// Returns the loss terms at `positions` and writes dL/dV into `gradient`.
    virtual LossTerms evaluate(const VertexMatrix& positions, VertexMatrix& gradient) = 0;
};

/// Linear parameterization of vertex positions.
class Deformer {
public:
    virtual ~Deformer() = default;
    virtual Eigen::VectorXd initial_parameters() const = 0;
    virtual VertexMatrix positions(const Eigen::VectorXd& params) const = 0;
    virtual Eigen::VectorXd pullback(const VertexMatrix& position_gradient) const = 0;
    /// Exact positions for the initial parameters.
    virtual const VertexMatrix& rest_positions() const = 0;
};

class JacobianDeformer final : public Deformer {
public:
    explicit JacobianDeformer(const Mesh& mesh);
    Eigen::VectorXd initial_parameters() const override { return j0_.flatten(); }
    VertexMatrix positions(const Eigen::VectorXd& params) const override;
    Eigen::VectorXd pullback(const VertexMatrix& position_gradient) const override;
    const VertexMatrix& rest_positions() const override { return rest_; }
    const PoissonSystem& system() const { return system_; }

private:
    VertexMatrix rest_;
    PoissonSystem system_;
    JacobianField j0_;
};

class VertexDeformer final : public Deformer {
public:
    explicit VertexDeformer(const Mesh& mesh) : rest_(mesh.vertices) {}
    Eigen::VectorXd initial_parameters() const override;
    VertexMatrix positions(const Eigen::VectorXd& params) const override;
    Eigen::VectorXd pullback(const VertexMatrix& position_gradient) const override;
    const VertexMatrix& rest_positions() const override { return rest_; }

private:
    VertexMatrix rest_;
};

/// Offsets on a regular lattice over the (slightly padded) bounding box, applied
/// to each vertex by trilinear interpolation.
class GridDeformer final : public Deformer {
public:
    GridDeformer(const Mesh& mesh, int resolution = 8);
    int resolution() const { return resolution_; }
    int node_index(int i, int j, int k) const { return (k * resolution_ + j) * resolution_ + i; }
    Eigen::VectorXd initial_parameters() const override;
    VertexMatrix positions(const Eigen::VectorXd& params) const override;
    Eigen::VectorXd pullback(const VertexMatrix& position_gradient) const override;
    const VertexMatrix& rest_positions() const override { return rest_; }

private:
    struct Tap {
        int node;
        double weight;
    };
    VertexMatrix rest_;
    int resolution_;
    std::vector<std::array<Tap, 8>> taps_;
};

struct DeformResult {
    VertexMatrix positions;
    Eigen::VectorXd parameters;
    LossLog log;
};

/// Adam on the deformer parameters; returns the best-loss iterate. Runs
/// `iterations` steps and evaluates iterations + 1 parameter sets.
DeformResult optimize_deformation(const Deformer& deformer, PositionObjective& objective, const OptimConfig& config,
                                  const char* loop_name = "deformation");

Mesh deform_jacobian(const Mesh& mesh, PositionObjective& objective, const OptimConfig& config,
                     LossLog* log = nullptr);
Mesh deform_vertex_replacement(const Mesh& mesh, PositionObjective& objective, const OptimConfig& config,
                               LossLog* log = nullptr);
Mesh deform_grid3d(const Mesh& mesh, PositionObjective& objective, const OptimConfig& config, int resolution = 8,
                   LossLog* log = nullptr);

} // namespace mvd
