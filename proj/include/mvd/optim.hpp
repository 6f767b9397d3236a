#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mvd {

struct OptimConfig {
    int iterations = 100;
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0; // recorded with the run; the loops themselves are deterministic

    void validate() const;
};

/// Adaptive-moment gradient descent over a flat parameter vector.
class Adam {
public:
    Adam(Eigen::Index size, const OptimConfig& config);

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
    int steps() const { return t_; }

private:
    OptimConfig config_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    int t_ = 0;
};

/// Named loss terms of one evaluation; `total` is their weighted sum.
struct LossTerms {
    double total = 0.0;
    std::vector<std::pair<std::string, double>> terms;

    void add(const std::string& name, double weight, double value);
};

struct LossRecord {
    int iteration = 0;
    LossTerms loss;
};

struct LossLog {
    std::vector<LossRecord> records;
    int best_iteration = -1;

    double best_total() const;
    void write_csv(const std::string& path) const;
};

/// Throws when `value` is not finite, naming the loop and iteration.
void check_finite_loss(double value, const char* loop, int iteration);

} // namespace mvd
