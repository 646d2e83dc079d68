#include "covlab/oracle_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "covlab/error.hpp"
#include "covlab/marginal_conformal.hpp"
#include "covlab/restricted_conformal.hpp"

namespace covlab {

std::string to_string(MeanKind kind)
{
    switch (kind) {
    case MeanKind::linear: return "linear";
    case MeanKind::sinusoidal: return "sinusoidal";
    case MeanKind::constant: return "constant";
    }
    return "unknown";
}

std::string to_string(NoiseKind kind)
{
    switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::laplace: return "laplace";
    case NoiseKind::uniform: return "uniform";
    }
    return "unknown";
}

std::string to_string(FeatureLaw law)
{
    switch (law) {
    case FeatureLaw::uniform_box: return "uniform-box";
    case FeatureLaw::standard_normal: return "standard-normal";
    }
    return "unknown";
}

MeanKind parse_mean_kind(const std::string& name)
{
    for (auto k : {MeanKind::linear, MeanKind::sinusoidal, MeanKind::constant}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown mean kind '" + name + "'");
}

NoiseKind parse_noise_kind(const std::string& name)
{
    for (auto k : {NoiseKind::gaussian, NoiseKind::laplace, NoiseKind::uniform}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown noise kind '" + name + "'");
}

FeatureLaw parse_feature_law(const std::string& name)
{
    for (auto k : {FeatureLaw::uniform_box, FeatureLaw::standard_normal}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown feature law '" + name + "'");
}

void LocationFamily::validate() const
{
    if (features.dimension < 1) throw ConfigError("feature dimension must be >= 1");
    if (features.law == FeatureLaw::uniform_box && !(features.low < features.high)) {
        throw ConfigError("uniform-box needs low < high");
    }
    if (mean.kind == MeanKind::linear && static_cast<std::size_t>(mean.coefficients.size()) != features.dimension) {
        throw ConfigError("linear mean needs one coefficient per feature dimension");
    }
    if (!(noise.scale >= 0.0) || !std::isfinite(noise.scale)) throw ConfigError("noise scale must be finite and >= 0");
    if (noise.kind != NoiseKind::uniform && noise.scale == 0.0) {
        throw ConfigError("zero-width noise is only supported as a degenerate uniform");
    }
}

double LocationFamily::mean_at(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    if (static_cast<std::size_t>(x.size()) != features.dimension) throw InputError("feature dimension mismatch");
    switch (mean.kind) {
    case MeanKind::linear: return mean.intercept + mean.coefficients.dot(x);
    case MeanKind::sinusoidal: return mean.intercept + mean.amplitude * std::sin(mean.frequency * x(0));
    case MeanKind::constant: return mean.intercept;
    }
    return 0.0;
}

Eigen::VectorXd LocationFamily::draw_features(Engine& eng) const
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(features.dimension));
    if (features.law == FeatureLaw::uniform_box) {
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = features.low + (features.high - features.low) * uniform01(eng);
    } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = normal(eng);
    }
    return x;
}

double LocationFamily::draw_noise(Engine& eng) const
{
    switch (noise.kind) {
    case NoiseKind::gaussian: return std::normal_distribution<double>(0.0, noise.scale)(eng);
    case NoiseKind::laplace: {
        const double u = uniform01(eng);
        const double e = -noise.scale * std::log1p(-uniform01(eng));
        return u < 0.5 ? -e : e;
    }
    case NoiseKind::uniform: return noise.scale * (2.0 * uniform01(eng) - 1.0);
    }
    return 0.0;
}

Dataset sample_location_family(const LocationFamily& family, std::size_t n, std::uint64_t seed)
{
    family.validate();
    if (n < 1) throw ConfigError("sample size must be >= 1");
    auto eng = make_engine(seed, {tag(StreamTag::sample)});
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(family.features.dimension));
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::VectorXd xi = family.draw_features(eng);
        x.row(i) = xi.transpose();
        y(i) = family.mean_at(xi) + family.draw_noise(eng);
    }
    return Dataset(std::move(x), std::move(y));
}

double noise_cdf(const NoiseSpec& noise, double t)
{
    switch (noise.kind) {
    case NoiseKind::gaussian: return 0.5 * std::erfc(-t / (noise.scale * std::numbers::sqrt2));
    case NoiseKind::laplace:
        return t < 0.0 ? 0.5 * std::exp(t / noise.scale) : 1.0 - 0.5 * std::exp(-t / noise.scale);
    case NoiseKind::uniform:
        if (noise.scale == 0.0) return t < 0.0 ? 0.0 : 1.0;
        return std::clamp((t + noise.scale) / (2.0 * noise.scale), 0.0, 1.0);
    }
    return 0.0;
}

double normal_upper_quantile(double tail)
{
    if (!(tail > 0.0 && tail < 1.0)) throw ConfigError("normal tail probability must lie in (0, 1)");
    // P(Z > z) = erfc(z / sqrt 2) / 2 is decreasing in z
    double lo = -40.0;
    double hi = 40.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(mid / std::numbers::sqrt2) > tail) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double oracle_noise_quantile(const NoiseSpec& noise, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (alpha == 1.0) return 0.0;
    switch (noise.kind) {
    case NoiseKind::gaussian:
        return alpha == 0.0 ? kInf : noise.scale * normal_upper_quantile(0.5 * alpha);
    case NoiseKind::laplace: return alpha == 0.0 ? kInf : -noise.scale * std::log(alpha);
    case NoiseKind::uniform: return noise.scale * (1.0 - alpha);
    }
    return kInf;
}

PredictionInterval oracle_interval(const LocationFamily& family, double alpha, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return PredictionInterval::symmetric(family.mean_at(x), oracle_noise_quantile(family.noise, alpha));
}

namespace {

double optimal_length_at_miscoverage(const LocationFamily& family, double miscoverage)
{
    return 2.0 * oracle_noise_quantile(family.noise, miscoverage);
}

}  // namespace

double optimal_length(const LocationFamily& family, double level)
{
    if (!(level > 0.0 && level <= 1.0)) throw ConfigError("coverage level must lie in (0, 1]");
    return optimal_length_at_miscoverage(family, 1.0 - level);
}

double hardness_objective(const LocationFamily& family, const CoverageSpec& spec, double c)
{
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("c must lie in [0, 1]");
    const double scale = (1.0 - spec.alpha) / (1.0 - c * spec.alpha);
    const double length = optimal_length_at_miscoverage(family, c * spec.alpha * spec.delta);
    return std::isinf(length) ? kInf : scale * length;
}

HardnessBound hardness_lower_bound(const LocationFamily& family, const CoverageSpec& spec)
{
    spec.validate();
    constexpr std::size_t steps = 10'000;
    constexpr double step = 1.0 / static_cast<double>(steps);

    HardnessBound best;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double c = static_cast<double>(i) * step;
        const double v = hardness_objective(family, spec, c);
        if (v < best.grid_value) {
            best.grid_value = v;
            best.argmin_c = c;
        }
    }
    best.value = best.grid_value;
    if (std::isinf(best.grid_value)) return best;

    // golden section on the bracket around the grid minimizer
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::max(0.0, best.argmin_c - step);
    double b = std::min(1.0, best.argmin_c + step);
    double c1 = b - inv_phi * (b - a);
    double c2 = a + inv_phi * (b - a);
    double f1 = hardness_objective(family, spec, c1);
    double f2 = hardness_objective(family, spec, c2);
    while (b - a > 1e-6) {
        if (f1 <= f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = hardness_objective(family, spec, c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = hardness_objective(family, spec, c2);
        }
    }
    const double c_mid = 0.5 * (a + b);
    const double f_mid = hardness_objective(family, spec, c_mid);
    if (f_mid < best.value) {
        best.value = f_mid;
        best.argmin_c = c_mid;
    }
    return best;
}

MeanFunction MeanFunction::truth(const LocationFamily& family)
{
    return {[family](const Eigen::VectorXd& x) { return family.mean_at(x); }, true};
}

MeanFunction MeanFunction::of_model(const RegressionModel& model)
{
    return {[model](const Eigen::VectorXd& x) { return model.predict(x); }, false};
}

McEstimate oracle_restricted_quantile(const LocationFamily& family, const MeanFunction& mu, double alpha,
                                      const SetDescriptor& set, std::size_t mc_trials, std::uint64_t seed,
                                      std::uint64_t draw_cap)
{
    family.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (mu.is_truth) return {oracle_noise_quantile(family.noise, alpha), 0.0};
    if (mc_trials < 1) throw ConfigError("need at least one Monte Carlo draw");

    // Fixed-size chunks on their own streams keep the estimate independent of scheduling.
    constexpr std::size_t chunk = 4096;
    std::vector<double> residuals;
    residuals.reserve(mc_trials);
    std::uint64_t draws = 0;
    for (std::size_t start = 0, block = 0; start < mc_trials; start += chunk, ++block) {
        auto eng = make_engine(seed, {tag(StreamTag::oracle), block});
        const std::size_t want = std::min(chunk, mc_trials - start);
        for (std::size_t got = 0; got < want;) {
            if (++draws > draw_cap) {
                throw MassTooSmallError("set mass too small: " + std::to_string(draw_cap) + " draws yielded " +
                                        std::to_string(residuals.size()) + " points");
            }
            const Eigen::VectorXd x = family.draw_features(eng);
            if (!contains(set, x)) continue;
            const double y = family.mean_at(x) + family.draw_noise(eng);
            residuals.push_back(std::abs(y - mu(x)));
            ++got;
        }
    }
    std::sort(residuals.begin(), residuals.end());
    const double m = static_cast<double>(mc_trials);
    const std::size_t k = std::max<std::size_t>(1, ceil_rank((1.0 - alpha) * m));
    // order-statistic band of one binomial standard deviation
    const double spread = std::sqrt(m * alpha * (1.0 - alpha));
    const auto lo_rank = static_cast<std::size_t>(std::max(1.0, std::floor(static_cast<double>(k) - spread)));
    const auto hi_rank = static_cast<std::size_t>(std::min(m, std::ceil(static_cast<double>(k) + spread)));
    return {residuals[k - 1], 0.5 * (residuals[hi_rank - 1] - residuals[lo_rank - 1])};
}

OracleInterval oracle_restricted_interval(const LocationFamily& family, const MeanFunction& mu,
                                          const CoverageSpec& spec, const SetClass& set_class,
                                          const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t mc_trials,
                                          std::uint64_t seed)
{
    family.validate();
    if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    // clipped sandwich levels may reach delta = 0
    if (!(spec.delta >= 0.0 && spec.delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");

    OracleInterval out;
    const Eigen::VectorXd xv = x;
    if (mu.is_truth) {
        out.half_width = oracle_noise_quantile(family.noise, spec.alpha);
        out.interval = PredictionInterval::symmetric(mu(xv), out.half_width);
        out.analytic = true;
        return out;
    }
    if (mc_trials < 1) throw ConfigError("need at least one Monte Carlo draw");

    Eigen::MatrixXd pts(static_cast<Eigen::Index>(mc_trials), static_cast<Eigen::Index>(family.features.dimension));
    std::vector<double> scores(mc_trials);
    constexpr std::size_t chunk = 4096;
    for (std::size_t start = 0, block = 0; start < mc_trials; start += chunk, ++block) {
        auto eng = make_engine(seed, {tag(StreamTag::oracle), block});
        for (std::size_t i = start; i < std::min(mc_trials, start + chunk); ++i) {
            const Eigen::VectorXd xi = family.draw_features(eng);
            pts.row(static_cast<Eigen::Index>(i)) = xi.transpose();
            scores[i] = std::abs(family.mean_at(xi) + family.draw_noise(eng) - mu(xi));
        }
    }
    const detail::RankRule rule{1.0 - spec.alpha, 0.0};
    const auto sup = detail::supremum_quantile(xv, pts, scores, set_class, spec.delta * static_cast<double>(mc_trials), rule);
    out.half_width = sup.value;
    out.achieving = sup.witness;
    out.interval = PredictionInterval::symmetric(mu(xv), sup.value);
    return out;
}

SandwichLevels sandwich_levels(const CoverageSpec& spec, std::size_t n1, std::size_t vc, double c_alpha, double c_delta)
{
    spec.validate();
    if (n1 < 2) throw ConfigError("sandwich levels need n1 >= 2");
    if (vc < 1) throw ConfigError("sandwich levels need vc >= 1");
    if (!(c_alpha >= 0.0) || !(c_delta >= 0.0)) throw ConfigError("sandwich constants must be >= 0");

    const double log_n = std::log(static_cast<double>(n1));
    const double n = static_cast<double>(n1);
    const double base = static_cast<double>(vc) * log_n * log_n;
    const double da = c_alpha * std::sqrt(base / (spec.delta * n));
    const double dd = c_delta * std::sqrt(base / n);

    SandwichLevels s;
    s.c_alpha = c_alpha;
    s.c_delta = c_delta;
    const double raw[] = {spec.alpha + da, spec.alpha - da, spec.delta + dd, spec.delta - dd};
    double clipped[4];
    for (int i = 0; i < 4; ++i) {
        clipped[i] = std::clamp(raw[i], 0.0, 1.0);
        if (clipped[i] != raw[i]) s.clipped = true;
    }
    s.alpha_plus = clipped[0];
    s.alpha_minus = clipped[1];
    s.delta_plus = clipped[2];
    s.delta_minus = clipped[3];
    return s;
}

}  // namespace covlab
