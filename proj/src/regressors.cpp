#include "covlab/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "covlab/error.hpp"

namespace covlab {

std::string to_string(RegressorKind kind)
{
    switch (kind) {
    case RegressorKind::constant_mean: return "constant-mean";
    case RegressorKind::least_squares_linear: return "least-squares-linear";
    case RegressorKind::k_nearest_neighbor: return "k-nearest-neighbor";
    }
    return "unknown";
}

RegressorKind parse_regressor_kind(const std::string& name)
{
    if (name == "constant-mean") return RegressorKind::constant_mean;
    if (name == "least-squares-linear") return RegressorKind::least_squares_linear;
    if (name == "k-nearest-neighbor") return RegressorKind::k_nearest_neighbor;
    throw ConfigError("unknown regressor kind '" + name + "'");
}

RegressionModel RegressionModel::constant(double value, std::size_t dim)
{
    RegressionModel m;
    m.kind_ = RegressorKind::constant_mean;
    m.dim_ = dim;
    m.intercept_ = value;
    m.coef_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    return m;
}

RegressionModel RegressionModel::linear(Eigen::VectorXd coefficients, double intercept)
{
    RegressionModel m;
    m.kind_ = RegressorKind::least_squares_linear;
    m.dim_ = static_cast<std::size_t>(coefficients.size());
    m.coef_ = std::move(coefficients);
    m.intercept_ = intercept;
    return m;
}

double RegressionModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    if (static_cast<std::size_t>(x.size()) != dim_) {
        throw InputError("query has dimension " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(dim_));
    }
    if (kind_ != RegressorKind::k_nearest_neighbor) {
        return intercept_ + coef_.dot(x);
    }

    const auto n = static_cast<std::size_t>(train_y_.size());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = {(train_x_.row(static_cast<Eigen::Index>(i)).transpose() - x).squaredNorm(), i};
    }
    // pair ordering breaks distance ties by training index
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < k_; ++j) sum += train_y_(static_cast<Eigen::Index>(dist[j].second));
    return sum / static_cast<double>(k_);
}

RegressionModel fit_regressor(const RegressorOptions& options, const Dataset& train)
{
    const std::size_t n = train.size();
    const std::size_t d = train.dimension();
    if (n == 0) throw InputError("cannot fit on an empty dataset");

    switch (options.kind) {
    case RegressorKind::constant_mean:
        return RegressionModel::constant(train.responses().mean(), d);

    case RegressorKind::least_squares_linear: {
        Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
        design.col(0).setOnes();
        design.rightCols(static_cast<Eigen::Index>(d)) = train.features();
        // COD yields the minimum-norm least squares solution when the design is singular
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
        const Eigen::VectorXd beta = cod.solve(train.responses());
        auto model = RegressionModel::linear(beta.tail(static_cast<Eigen::Index>(d)), beta(0));
        model.rank_deficient_ = cod.rank() < design.cols();
        return model;
    }

    case RegressorKind::k_nearest_neighbor: {
        const std::size_t k =
            options.k.value_or(static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0))));
        if (k < 1 || k > n) {
            throw ConfigError("k-NN needs 1 <= k <= n0 (k=" + std::to_string(k) + ", n0=" + std::to_string(n) + ")");
        }
        RegressionModel m;
        m.kind_ = RegressorKind::k_nearest_neighbor;
        m.dim_ = d;
        m.k_ = k;
        m.train_x_ = train.features();
        m.train_y_ = train.responses();
        return m;
    }
    }
    throw ConfigError("unsupported regressor kind");
}

McEstimate estimate_consistency(const RegressionModel& model, const MeanFn& truth, const FeatureSampler& sampler,
                                std::size_t trials, std::uint64_t seed)
{
    if (trials < 1) throw ConfigError("consistency estimate needs at least one trial");
    auto eng = make_engine(seed, {tag(StreamTag::consistency)});
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Eigen::VectorXd x = sampler(eng);
        const double e = model.predict(x) - truth(x);
        sum += e * e;
        sum_sq += e * e * e * e;
    }
    const double m = static_cast<double>(trials);
    const double mean = sum / m;
    const double var = trials > 1 ? std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0)) : 0.0;
    return {mean, std::sqrt(var / m)};
}

}  // namespace covlab
