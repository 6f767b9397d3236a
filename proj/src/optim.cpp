#include "mvd/optim.hpp"

#include "mvd/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace mvd {

void OptimConfig::validate() const
{
    if (iterations < 0)
        throw Error("iterations must be >= 0");
    if (!(step_size > 0.0) || !std::isfinite(step_size))
        throw Error("step_size must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw Error("moment decay rates must lie in [0, 1)");
    if (!(epsilon > 0.0))
        throw Error("epsilon must be positive");
}

Adam::Adam(Eigen::Index size, const OptimConfig& config)
    : config_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size))
{
    config_.validate();
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad)
{
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw Error("Adam parameter size mismatch");
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    m_ = b1 * m_ + (1.0 - b1) * grad;
    v_ = b2 * v_ + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, t_);
    const double c2 = 1.0 - std::pow(b2, t_);
    for (Eigen::Index i = 0; i < params.size(); ++i)
        params[i] -= config_.step_size * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
}

void LossTerms::add(const std::string& name, double weight, double value)
{
    terms.emplace_back(name, value);
    total += weight * value;
}

double LossLog::best_total() const
{
    if (best_iteration < 0)
        return std::numeric_limits<double>::infinity();
    for (const auto& r : records)
        if (r.iteration == best_iteration)
            return r.loss.total;
    return std::numeric_limits<double>::infinity();
}

void LossLog::write_csv(const std::string& path) const
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path);
    out << "iteration,total";
    if (!records.empty())
        for (const auto& [name, value] : records.front().loss.terms)
            out << ',' << name;
    out << '\n' << std::setprecision(10);
    for (const auto& r : records) {
        out << r.iteration << ',' << r.loss.total;
        for (const auto& [name, value] : r.loss.terms)
            out << ',' << value;
        out << '\n';
    }
}

void check_finite_loss(double value, const char* loop, int iteration)
{
    if (!std::isfinite(value))
        throw Error(std::string(loop) + " diverged at iteration " + std::to_string(iteration) + " (loss not finite)");
}

} // namespace mvd
