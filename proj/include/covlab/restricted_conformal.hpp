#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "covlab/dataset.hpp"
#include "covlab/interval.hpp"
#include "covlab/marginal_conformal.hpp"
#include "covlab/regressors.hpp"
#include "covlab/set_classes.hpp"

namespace covlab {

/// Minimum calibration count delta*n1*(1 - sqrt(2 ln(n1) / (delta*n1))) for a set to
/// take part in the local width supremum.
struct EligibilityThreshold {
    std::size_t n1 = 0;
    double delta = 1.0;
    double value = 0.0;

    bool eligible(std::size_t count) const noexcept { return static_cast<double>(count) >= value; }
};

EligibilityThreshold eligibility_threshold(std::size_t n1, double delta);

/// Number of calibration points in a subset given by calibration indices.
inline std::size_t subset_count(const std::vector<std::size_t>& calib_indices) noexcept
{
    return calib_indices.size();
}

/// Rank ceil((1 - alpha + 1/n1)(count + 1)); may exceed count.
std::size_t restricted_rank(std::size_t count, std::size_t n1, double alpha);

/// Rank-th smallest of the residuals of one subset (any order), +inf when the rank exceeds the subset size.
double subset_quantile(std::span<const double> subset_residuals, std::size_t n1, double alpha);

/// Local half-width at one query point and the set that attains it.
struct LocalWidthTable {
    Eigen::VectorXd x;
    double width = kInf;
    /// Calibration indices of the achieving set (x itself excluded) and its witness.
    InducedSubset achieving;
    /// Number of distinct eligible sets containing x (as subsets of calibration points plus x).
    std::size_t eligible_sets = 0;
    double threshold = 0.0;
    /// False when the class enumeration was candidate-based; the width is then a lower bound.
    bool exact = true;
};

/// Supremum of subset_quantile over eligible class members containing x.
LocalWidthTable local_width(const Eigen::Ref<const Eigen::VectorXd>& x, const Dataset& calib,
                            const ResidualSet& residuals, const SetClass& set_class, const CoverageSpec& spec);

PredictionInterval predict_restricted(const RegressionModel& model, const LocalWidthTable& width,
                                      const Eigen::Ref<const Eigen::VectorXd>& x);

namespace detail {

/// Rank rule ceil(factor * (count + shift)), at least 1.
struct RankRule {
    double factor = 1.0;
    double shift = 0.0;

    std::size_t rank(std::size_t count) const;
};

struct SupremumResult {
    double value = kInf;
    std::vector<std::size_t> indices;
    SetDescriptor witness = FullSpace{};
    std::size_t eligible_sets = 0;
    bool exact = true;
};

/// max over class members S containing x with |S cap points| >= min_count of the
/// rule-ranked order statistic of scores in S. `points` rows pair with `scores`.
/// Uses closed-form or linear-time paths for full-space, partition and
/// interval classes unless `force_enumeration` is set.
SupremumResult supremum_quantile(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd& points,
                                 std::span<const double> scores, const SetClass& set_class, double min_count,
                                 RankRule rule, bool force_enumeration = false);

}  // namespace detail

}  // namespace covlab
