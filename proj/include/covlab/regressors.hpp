#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "covlab/dataset.hpp"
#include "covlab/rng.hpp"

namespace covlab {

enum class RegressorKind { constant_mean, least_squares_linear, k_nearest_neighbor };

std::string to_string(RegressorKind kind);
/// Accepts "constant-mean", "least-squares-linear", "k-nearest-neighbor". Throws ConfigError.
RegressorKind parse_regressor_kind(const std::string& name);

struct RegressorOptions {
    RegressorKind kind = RegressorKind::least_squares_linear;
    /// Neighbor count for k-NN; ceil(n0^(2/3)) when unset.
    std::optional<std::size_t> k;
};

/// Fitted mean estimate. Immutable after fit; predict is safe to call concurrently.
class RegressionModel {
public:
    RegressorKind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return dim_; }

    /// Throws InputError on dimension mismatch.
    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    // constant-mean and least squares
    double intercept() const noexcept { return intercept_; }
    const Eigen::VectorXd& coefficients() const noexcept { return coef_; }
    /// Least squares only: the design was rank deficient and the minimum-norm solution was used.
    bool rank_deficient() const noexcept { return rank_deficient_; }

    std::size_t neighbors() const noexcept { return k_; }

    static RegressionModel constant(double value, std::size_t dim);
    static RegressionModel linear(Eigen::VectorXd coefficients, double intercept);

private:
    friend RegressionModel fit_regressor(const RegressorOptions&, const Dataset&);

    RegressorKind kind_ = RegressorKind::constant_mean;
    std::size_t dim_ = 0;
    double intercept_ = 0.0;
    Eigen::VectorXd coef_;
    bool rank_deficient_ = false;
    std::size_t k_ = 0;
    Eigen::MatrixXd train_x_;
    Eigen::VectorXd train_y_;
};

RegressionModel fit_regressor(const RegressorOptions& options, const Dataset& train);

inline double predict_mean(const RegressionModel& model, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return model.predict(x);
}

struct McEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};

using MeanFn = std::function<double(const Eigen::VectorXd&)>;
using FeatureSampler = std::function<Eigen::VectorXd(Engine&)>;

/// Monte Carlo estimate of E[(model(X) - truth(X))^2] over X drawn by `sampler`.
McEstimate estimate_consistency(const RegressionModel& model, const MeanFn& truth, const FeatureSampler& sampler,
                                std::size_t trials, std::uint64_t seed);

}  // namespace covlab
