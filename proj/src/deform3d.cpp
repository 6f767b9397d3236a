#include "mvd/deform3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mvd {

void JacobianField::validate(int expected_faces) const
{
    if (stacked.cols() != 3 || stacked.rows() != 3 * static_cast<Eigen::Index>(expected_faces))
        throw Error("Jacobian field size does not match the face count");
    if (!stacked.allFinite())
        throw Error("Jacobian field has non-finite entries");
}

Eigen::VectorXd JacobianField::flatten() const
{
    Eigen::VectorXd out(stacked.size());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < stacked.rows(); ++r)
        for (int c = 0; c < 3; ++c)
            out[k++] = stacked(r, c);
    return out;
}

JacobianField JacobianField::unflatten(const Eigen::VectorXd& params, int faces)
{
    if (params.size() != 9 * static_cast<Eigen::Index>(faces))
        throw Error("Jacobian parameter vector has the wrong length");
    JacobianField j;
    j.stacked.resize(3 * faces, 3);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < j.stacked.rows(); ++r)
        for (int c = 0; c < 3; ++c)
            j.stacked(r, c) = params[k++];
    return j;
}

JacobianField init_jacobians(const Mesh& mesh)
{
    mesh.validate();
    const SparseOperator g = build_gradient_operator(mesh);
    JacobianField j;
    j.stacked = g.matrix() * Eigen::MatrixXd(mesh.vertices);
    return j;
}

PoissonSystem::PoissonSystem(const Mesh& mesh)
{
    mesh.validate();
    vertex_count_ = mesh.vertex_count();
    face_count_ = mesh.face_count();
    int ncomp = 0;
    const auto comp = connected_components(vertex_count_, mesh.faces, &ncomp);
    if (ncomp != 1) {
        std::vector<int> sizes(static_cast<size_t>(ncomp), 0);
        for (int c : comp)
            ++sizes[c];
        std::ostringstream msg;
        msg << "Poisson solve needs a connected mesh; found " << ncomp << " components with vertex counts";
        for (int s : sizes)
            msg << ' ' << s;
        throw Error(msg.str());
    }
    gradient_ = build_gradient_operator(mesh);
    mass_ = build_mass_matrix(mesh);
    laplacian_ = build_laplacian(mesh, LaplacianKind::cotangent);
    gt_a_ = SparseMatrix(gradient_.matrix().transpose()) * mass_.matrix();
    centroid_ = centroid(mesh.vertices);

    // Drop the anchor row and column; vertex 0 is pinned at the origin.
    const int n = vertex_count_ - 1;
    std::vector<Eigen::Triplet<double>> trips;
    const SparseMatrix& l = laplacian_.matrix();
    for (int col = 0; col < l.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(l, col); it; ++it)
            if (it.row() > 0 && it.col() > 0)
                trips.emplace_back(static_cast<int>(it.row()) - 1, static_cast<int>(it.col()) - 1, it.value());
    SparseMatrix reduced(n, n);
    reduced.setFromTriplets(trips.begin(), trips.end());
    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
    if (n > 0) {
        ldlt_->compute(reduced);
        if (ldlt_->info() != Eigen::Success)
            throw Error("Poisson factorization failed");
    }
}

Eigen::MatrixXd PoissonSystem::solve_reduced(const Eigen::MatrixXd& rhs) const
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(vertex_count_, rhs.cols());
    if (vertex_count_ > 1) {
        out.bottomRows(vertex_count_ - 1) = ldlt_->solve(rhs.bottomRows(vertex_count_ - 1));
        if (ldlt_->info() != Eigen::Success)
            throw Error("Poisson solve failed");
    }
    return out;
}

VertexMatrix PoissonSystem::solve(const JacobianField& j) const
{
    j.validate(face_count_);
    const Eigen::MatrixXd rhs = gt_a_ * j.stacked;
    Eigen::MatrixXd v = solve_reduced(rhs);
    const Eigen::RowVector3d shift = centroid_.transpose() - v.colwise().mean();
    v.rowwise() += shift;
    return v;
}

JacobianField PoissonSystem::adjoint(const VertexMatrix& upstream) const
{
    if (upstream.rows() != vertex_count_)
        throw Error("upstream gradient has the wrong vertex count");
    // The centering step is a projection; its adjoint removes the column means.
    Eigen::MatrixXd g = upstream;
    g.rowwise() -= g.colwise().mean();
    const Eigen::MatrixXd h = solve_reduced(g); // reduced L is symmetric
    JacobianField out;
    out.stacked = gt_a_.transpose() * h;
    return out;
}

VertexMatrix poisson_solve(const PoissonSystem& system, const JacobianField& j) { return system.solve(j); }

JacobianField poisson_adjoint(const PoissonSystem& system, const VertexMatrix& upstream)
{
    return system.adjoint(upstream);
}

LaplacianSmoothLoss::LaplacianSmoothLoss(const Mesh& topology)
    : l_(build_laplacian(topology, LaplacianKind::uniform).matrix())
{
}

double LaplacianSmoothLoss::value(const VertexMatrix& v) const
{
    return (l_ * v).squaredNorm();
}

VertexMatrix LaplacianSmoothLoss::gradient(const VertexMatrix& v) const
{
    // L is symmetric, so d/dV |LV|^2 = 2 L L V.
    const VertexMatrix lv = l_ * v;
    return 2.0 * (l_ * lv);
}

double laplacian_smooth_loss(const Mesh& mesh) { return LaplacianSmoothLoss(mesh).value(mesh.vertices); }

JacobianDeformer::JacobianDeformer(const Mesh& mesh)
    : rest_(mesh.vertices), system_(mesh), j0_(init_jacobians(mesh))
{
}

VertexMatrix JacobianDeformer::positions(const Eigen::VectorXd& params) const
{
    return system_.solve(JacobianField::unflatten(params, system_.face_count()));
}

Eigen::VectorXd JacobianDeformer::pullback(const VertexMatrix& position_gradient) const
{
    return system_.adjoint(position_gradient).flatten();
}

Eigen::VectorXd VertexDeformer::initial_parameters() const
{
    return Eigen::Map<const Eigen::VectorXd>(rest_.data(), rest_.size());
}

VertexMatrix VertexDeformer::positions(const Eigen::VectorXd& params) const
{
    if (params.size() != rest_.size())
        throw Error("vertex parameter vector has the wrong length");
    return Eigen::Map<const VertexMatrix>(params.data(), rest_.rows(), 3);
}

Eigen::VectorXd VertexDeformer::pullback(const VertexMatrix& position_gradient) const
{
    return Eigen::Map<const Eigen::VectorXd>(position_gradient.data(), position_gradient.size());
}

GridDeformer::GridDeformer(const Mesh& mesh, int resolution) : rest_(mesh.vertices), resolution_(resolution)
{
    if (resolution < 2)
        throw Error("grid resolution must be >= 2");
    if (rest_.rows() == 0)
        throw Error("grid deformer needs vertices");
    Vec3 lo = rest_.colwise().minCoeff().transpose();
    Vec3 hi = rest_.colwise().maxCoeff().transpose();
    const double pad = 0.01 * std::max((hi - lo).norm(), 1e-9);
    lo.array() -= pad;
    hi.array() += pad;
    const int cells = resolution - 1;
    taps_.resize(static_cast<size_t>(rest_.rows()));
    for (Eigen::Index v = 0; v < rest_.rows(); ++v) {
        int base[3];
        double t[3];
        for (int a = 0; a < 3; ++a) {
            const double u = (rest_(v, a) - lo[a]) / (hi[a] - lo[a]) * cells;
            base[a] = std::clamp(static_cast<int>(std::floor(u)), 0, cells - 1);
            t[a] = u - base[a];
        }
        int n = 0;
        for (int dk = 0; dk < 2; ++dk)
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    const double w = (di ? t[0] : 1 - t[0]) * (dj ? t[1] : 1 - t[1]) * (dk ? t[2] : 1 - t[2]);
                    taps_[v][n++] = {node_index(base[0] + di, base[1] + dj, base[2] + dk), w};
                }
    }
}

Eigen::VectorXd GridDeformer::initial_parameters() const
{
    return Eigen::VectorXd::Zero(3 * resolution_ * resolution_ * resolution_);
}

VertexMatrix GridDeformer::positions(const Eigen::VectorXd& params) const
{
    if (params.size() != 3 * resolution_ * resolution_ * resolution_)
        throw Error("grid parameter vector has the wrong length");
    VertexMatrix out = rest_;
    for (Eigen::Index v = 0; v < rest_.rows(); ++v)
        for (const Tap& tap : taps_[v])
            out.row(v) += tap.weight * params.segment<3>(3 * tap.node).transpose();
    return out;
}

Eigen::VectorXd GridDeformer::pullback(const VertexMatrix& position_gradient) const
{
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * resolution_ * resolution_ * resolution_);
    for (Eigen::Index v = 0; v < rest_.rows(); ++v)
        for (const Tap& tap : taps_[v])
            g.segment<3>(3 * tap.node) += tap.weight * position_gradient.row(v).transpose();
    return g;
}

DeformResult optimize_deformation(const Deformer& deformer, PositionObjective& objective, const OptimConfig& config,
                                  const char* loop_name)
{
    config.validate();
    Eigen::VectorXd params = deformer.initial_parameters();
    Adam adam(params.size(), config);
    DeformResult result;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_params = params;
    VertexMatrix grad;
    for (int it = 0; it <= config.iterations; ++it) {
        const VertexMatrix pos = it == 0 ? deformer.rest_positions() : deformer.positions(params);
        grad.setZero(pos.rows(), 3);
        LossTerms loss = objective.evaluate(pos, grad);
        check_finite_loss(loss.total, loop_name, it);
        result.log.records.push_back({it, loss});
        if (loss.total < best) {
            best = loss.total;
            best_params = params;
            result.log.best_iteration = it;
        }
        if (it == config.iterations)
            break;
        if (!grad.allFinite())
            throw Error(std::string(loop_name) + " diverged at iteration " + std::to_string(it) +
                        " (gradient not finite)");
        adam.step(params, deformer.pullback(grad));
    }
    result.parameters = best_params;
    result.positions =
        result.log.best_iteration == 0 ? deformer.rest_positions() : deformer.positions(best_params);
    return result;
}

namespace {

Mesh run(const Mesh& mesh, const Deformer& deformer, PositionObjective& objective, const OptimConfig& config,
         const char* name, LossLog* log)
{
    DeformResult r = optimize_deformation(deformer, objective, config, name);
    Mesh out = mesh;
    out.vertices = std::move(r.positions);
    if (log)
        *log = std::move(r.log);
    return out;
}

} // namespace

Mesh deform_jacobian(const Mesh& mesh, PositionObjective& objective, const OptimConfig& config, LossLog* log)
{
    return run(mesh, JacobianDeformer(mesh), objective, config, "jacobian deformation", log);
}

Mesh deform_vertex_replacement(const Mesh& mesh, PositionObjective& objective, const OptimConfig& config,
                               LossLog* log)
{
    return run(mesh, VertexDeformer(mesh), objective, config, "vertex deformation", log);
}

Mesh deform_grid3d(const Mesh& mesh, PositionObjective& objective, const OptimConfig& config, int resolution,
                   LossLog* log)
{
    return run(mesh, GridDeformer(mesh, resolution), objective, config, "grid deformation", log);
}

} // namespace mvd
