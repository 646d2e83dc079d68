#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "covlab/dataset.hpp"
#include "covlab/interval.hpp"
#include "covlab/regressors.hpp"

namespace covlab {

/// Absolute calibration residuals |Y_i - mu(X_i)| in calibration order, with a sorted copy.
class ResidualSet {
public:
    ResidualSet() = default;
    /// Throws InputError for negative or non-finite values.
    explicit ResidualSet(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& sorted() const noexcept { return sorted_; }

private:
    std::vector<double> values_;
    std::vector<double> sorted_;
};

/// ceil(x), treating values within 1e-9 above an integer as that integer so
/// that products like 0.9 * 10 land on the intended rank.
std::size_t ceil_rank(double x);

/// 1-based k-th smallest of an ascending list; +inf when k exceeds its size.
double kth_smallest(std::span<const double> ascending, std::size_t k);

ResidualSet calib_residuals(const RegressionModel& model, const Dataset& calib);

/// Rank ceil((1 - alpha)(n1 + 1)) used by split conformal.
std::size_t marginal_rank(std::size_t n1, double alpha);

/// The marginal_rank-th smallest residual, +inf if the rank exceeds n1.
/// alpha = 0 is accepted and always yields +inf.
double marginal_quantile(const ResidualSet& residuals, double alpha);

PredictionInterval predict_marginal(const RegressionModel& model, double q, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Miscoverage alpha * delta at which to run split conformal so that the
/// output has (1 - alpha, delta) approximate conditional coverage.
double naive_approx_cc_level(const CoverageSpec& spec);

/// Randomized thinning of a level 1 - c*alpha*delta predictor.
struct ThinningRule {
    double c = 1.0;
    double alpha = 0.1;
    std::uint64_t seed = 0;

    /// Throws ConfigError unless c in [0, 1] and alpha in (0, 1).
    void validate() const;
    /// (1 - alpha) / (1 - c alpha)
    double keep_probability() const;
};

/// Miscoverage of the base predictor a thinning rule wraps: c * alpha * delta.
double thinning_base_miscoverage(const CoverageSpec& spec, double c);

/// Bernoulli keep decision for one query; depends only on (seed, query_index).
bool thinning_keeps(const ThinningRule& rule, std::uint64_t query_index);

/// `base` with probability keep_probability(), otherwise the empty set.
PredictionInterval thinned_predict(const PredictionInterval& base, const ThinningRule& rule,
                                   std::uint64_t query_index);

}  // namespace covlab
