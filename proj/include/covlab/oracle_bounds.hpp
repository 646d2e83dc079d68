#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "covlab/dataset.hpp"
#include "covlab/interval.hpp"
#include "covlab/regressors.hpp"
#include "covlab/rng.hpp"
#include "covlab/set_classes.hpp"

namespace covlab {

enum class MeanKind { linear, sinusoidal, constant };
enum class NoiseKind { gaussian, laplace, uniform };
enum class FeatureLaw { uniform_box, standard_normal };

std::string to_string(MeanKind kind);
std::string to_string(NoiseKind kind);
std::string to_string(FeatureLaw law);
MeanKind parse_mean_kind(const std::string& name);
NoiseKind parse_noise_kind(const std::string& name);
FeatureLaw parse_feature_law(const std::string& name);

/// mu_P(x): intercept + <coefficients, x> (linear), intercept + amplitude*sin(frequency*x_1)
/// (sinusoidal), or intercept (constant).
struct MeanSpec {
    MeanKind kind = MeanKind::linear;
    Eigen::VectorXd coefficients;
    double intercept = 0.0;
    double amplitude = 1.0;
    double frequency = 1.0;
};

/// Symmetric noise with density nonincreasing on t >= 0.
/// `scale` is sigma (gaussian), b (laplace) or the half-width w of U[-w, w].
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double scale = 1.0;
};

struct FeatureSpec {
    FeatureLaw law = FeatureLaw::uniform_box;
    std::size_t dimension = 1;
    double low = 0.0;
    double high = 1.0;
};

/// Y = mu_P(X) + eps with eps independent of X.
struct LocationFamily {
    MeanSpec mean;
    NoiseSpec noise;
    FeatureSpec features;

    /// Throws ConfigError on inconsistent parameters.
    void validate() const;
    double mean_at(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd draw_features(Engine& eng) const;
    double draw_noise(Engine& eng) const;
};

Dataset sample_location_family(const LocationFamily& family, std::size_t n, std::uint64_t seed);

/// P(eps <= t).
double noise_cdf(const NoiseSpec& noise, double t);

/// Standard normal upper quantile: z with P(Z > z) = tail, by bisection to 1e-10.
double normal_upper_quantile(double tail);

/// (1 - alpha/2)-quantile of the noise, i.e. the (1 - alpha)-quantile of |eps|.
/// alpha = 0 gives the supremum of |eps| (+inf for unbounded noise); alpha = 1 gives 0.
double oracle_noise_quantile(const NoiseSpec& noise, double alpha);

/// mu_P(x) +- oracle_noise_quantile(noise, alpha).
PredictionInterval oracle_interval(const LocationFamily& family, double alpha, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Minimum expected length over rules with marginal coverage `level` in (0, 1].
/// For the symmetric unimodal location families this is twice the noise quantile.
double optimal_length(const LocationFamily& family, double level);

/// (1 - alpha)/(1 - c alpha) * L_P(1 - c alpha delta).
double hardness_objective(const LocationFamily& family, const CoverageSpec& spec, double c);

struct HardnessBound {
    double value = kInf;
    double argmin_c = 1.0;
    /// Best value on the 1e-4 grid alone, before golden-section refinement.
    double grid_value = kInf;
};

/// Infimum over c in [0, 1] of hardness_objective: 1e-4 grid, then golden
/// section around the best grid point down to 1e-6 in c.
HardnessBound hardness_lower_bound(const LocationFamily& family, const CoverageSpec& spec);

/// A mean function plus a flag marking it as the family's true mean, which
/// enables analytic shortcuts.
struct MeanFunction {
    MeanFn fn;
    bool is_truth = false;

    static MeanFunction truth(const LocationFamily& family);
    static MeanFunction of_model(const RegressionModel& model);
    double operator()(const Eigen::VectorXd& x) const { return fn(x); }
};

inline constexpr std::uint64_t kRejectionCap = 100'000'000;

/// (1 - alpha)-quantile of |Y - mu(X)| given X in `set`, by rejection sampling.
/// Analytic (standard error 0) when mu is the true mean.
/// Throws MassTooSmallError if `draw_cap` raw draws do not yield mc_trials accepted points.
McEstimate oracle_restricted_quantile(const LocationFamily& family, const MeanFunction& mu, double alpha,
                                      const SetDescriptor& set, std::size_t mc_trials, std::uint64_t seed,
                                      std::uint64_t draw_cap = kRejectionCap);

struct OracleInterval {
    PredictionInterval interval;
    double half_width = kInf;
    SetDescriptor achieving = FullSpace{};
    bool analytic = false;
};

/// mu(x) +- sup of the conditional residual quantile over class members containing x
/// with mass >= delta. Masses and quantiles come from one reference sample of
/// mc_trials draws from P; the supremum uses the same induced-subset machinery
/// as the restricted conformal width.
OracleInterval oracle_restricted_interval(const LocationFamily& family, const MeanFunction& mu,
                                          const CoverageSpec& spec, const SetClass& set_class,
                                          const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t mc_trials,
                                          std::uint64_t seed);

struct SandwichLevels {
    double alpha_plus = 0.0;
    double alpha_minus = 0.0;
    double delta_plus = 0.0;
    double delta_minus = 0.0;
    double c_alpha = 1.0;
    double c_delta = 1.0;
    /// True when any level had to be clipped to [0, 1].
    bool clipped = false;
};

/// alpha +- c_alpha sqrt(vc ln^2(n1) / (delta n1)), delta +- c_delta sqrt(vc ln^2(n1) / n1), clipped to [0, 1].
SandwichLevels sandwich_levels(const CoverageSpec& spec, std::size_t n1, std::size_t vc, double c_alpha,
                               double c_delta);

}  // namespace covlab
