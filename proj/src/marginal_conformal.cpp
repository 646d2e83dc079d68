#include "covlab/marginal_conformal.hpp"

#include <algorithm>
#include <cmath>

#include "covlab/error.hpp"
#include "covlab/rng.hpp"

namespace covlab {

ResidualSet::ResidualSet(std::vector<double> values)
    : values_(std::move(values))
{
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) throw InputError("residuals must be finite and nonnegative");
    }
    sorted_ = values_;
    std::sort(sorted_.begin(), sorted_.end());
}

std::size_t ceil_rank(double x)
{
    if (!(x > 0.0)) return 0;
    return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

double kth_smallest(std::span<const double> ascending, std::size_t k)
{
    if (k == 0) throw InputError("ranks are 1-based");
    if (k > ascending.size()) return kInf;
    return ascending[k - 1];
}

ResidualSet calib_residuals(const RegressionModel& model, const Dataset& calib)
{
    std::vector<double> r(calib.size());
    for (std::size_t i = 0; i < calib.size(); ++i) {
        r[i] = std::abs(calib.response(i) - model.predict(calib.row(i)));
    }
    return ResidualSet(std::move(r));
}

std::size_t marginal_rank(std::size_t n1, double alpha)
{
    return std::max<std::size_t>(1, ceil_rank((1.0 - alpha) * static_cast<double>(n1 + 1)));
}

double marginal_quantile(const ResidualSet& residuals, double alpha)
{
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
    return kth_smallest(residuals.sorted(), marginal_rank(residuals.size(), alpha));
}

PredictionInterval predict_marginal(const RegressionModel& model, double q, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return PredictionInterval::symmetric(model.predict(x), q);
}

double naive_approx_cc_level(const CoverageSpec& spec)
{
    spec.validate();
    return spec.alpha * spec.delta;
}

void ThinningRule::validate() const
{
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("thinning constant c must lie in [0, 1]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

double ThinningRule::keep_probability() const
{
    validate();
    return (1.0 - alpha) / (1.0 - c * alpha);
}

double thinning_base_miscoverage(const CoverageSpec& spec, double c)
{
    spec.validate();
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("thinning constant c must lie in [0, 1]");
    return c * spec.alpha * spec.delta;
}

bool thinning_keeps(const ThinningRule& rule, std::uint64_t query_index)
{
    const double p = rule.keep_probability();
    auto eng = make_engine(rule.seed, {tag(StreamTag::thinning), query_index});
    return uniform01(eng) < p;
}

PredictionInterval thinned_predict(const PredictionInterval& base, const ThinningRule& rule,
                                   std::uint64_t query_index)
{
    return thinning_keeps(rule, query_index) ? base : PredictionInterval::empty();
}

}  // namespace covlab
