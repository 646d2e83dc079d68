#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covlab/dataset.hpp"
#include "covlab/oracle_bounds.hpp"
#include "covlab/regressors.hpp"
#include "covlab/set_classes.hpp"

namespace covlab {

enum class MethodKind { split_marginal, naive_alpha_delta, thinned, restricted, always_full, always_empty };

std::string to_string(MethodKind kind);
MethodKind parse_method_kind(const std::string& name);

struct MethodSpec {
    MethodKind kind = MethodKind::split_marginal;
    /// Thinning constant for MethodKind::thinned.
    double c = 0.5;
    /// Class for MethodKind::restricted.
    std::optional<SetClass> set_class;
};

struct ProbeSet {
    std::string id;
    SetDescriptor set;
};

struct ExperimentConfig {
    LocationFamily family;
    SplitConfig split;
    CoverageSpec spec;
    MethodSpec method;
    RegressorOptions regressor;
    std::size_t trials = 1000;
    std::vector<ProbeSet> probe_sets;
    /// When > 0, this many probe sets are generated from `probe_class`
    /// (or the restricted method's class) and appended to `probe_sets`.
    std::size_t generated_probes = 0;
    std::optional<SetClass> probe_class;
    std::size_t mass_draws = 200'000;
    std::uint64_t rejection_cap = 10'000'000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    bool keep_trial_records = false;

    /// Throws ConfigError for an unusable configuration.
    void validate() const;
};

/// Binomial proportion with standard error.
struct Proportion {
    std::size_t successes = 0;
    std::size_t trials = 0;
    double estimate = 0.0;
    double standard_error = 0.0;
};

/// Standard error uses the shrunk proportion (k + 0.5)/(n + 1) so it stays
/// positive at k = 0 and k = n.
Proportion make_proportion(std::size_t successes, std::size_t trials);

struct ProbeReport {
    std::string id;
    std::string description;
    Proportion mass;
    Proportion coverage;
    bool eligible = false;  // estimated mass >= delta
    bool flagged = false;   // rejection cap hit; excluded
    std::string note;
};

struct TrialRecord {
    std::size_t trial = 0;
    std::string probe_id;
    bool covered = false;
    double length = 0.0;
};

struct Check {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct CoverageReport {
    std::string experiment;
    Proportion marginal;
    double mean_length = 0.0;
    double median_length = 0.0;
    std::optional<Proportion> keep_rate;
    std::optional<double> keep_probability;
    std::vector<ProbeReport> probes;
    std::optional<double> min_eligible_coverage;
    std::optional<HardnessBound> hardness;
    std::optional<double> oracle_length;
    std::optional<double> median_symmetric_difference;
    std::vector<double> symmetric_differences;
    std::vector<Check> checks;
    std::vector<TrialRecord> records;

    bool all_checks_passed() const;
};

/// Each trial draws a fresh sample of n0 + n1 points and one test pair.
CoverageReport run_marginal_experiment(const ExperimentConfig& cfg);

/// Marginal test pair plus one test pair per probe set, drawn conditionally on
/// the probe set by rejection sampling; training data stay unconditioned.
CoverageReport run_conditional_experiment(const ExperimentConfig& cfg);

/// Marginal run plus hardness bound, oracle length and symmetric difference to
/// the oracle interval mu_P(x) +- q*_{eps,alpha}.
CoverageReport run_efficiency_experiment(const ExperimentConfig& cfg);

struct SandwichConstants {
    double c_alpha = 1.0;
    double c_delta = 1.0;
};

struct SandwichRow {
    SandwichConstants constants;
    SandwichLevels levels;
    Proportion sandwiched;
    bool vacuous = false;
    bool degenerate = false;
};

struct SandwichReport {
    std::size_t vc = 1;
    std::vector<Eigen::VectorXd> probe_points;
    std::vector<SandwichRow> rows;
};

/// Fraction of (trial, probe point) pairs where the restricted interval lies
/// between the oracle intervals at the perturbed levels, built around the
/// fitted mean. Reported per constant pair; never asserted.
SandwichReport run_sandwich_check(const ExperimentConfig& cfg, const std::vector<SandwichConstants>& constants,
                                  const std::vector<Eigen::VectorXd>& probe_points, std::size_t vc,
                                  std::size_t oracle_draws);

/// Probe sets for a class: partition cells, or sets with estimated mass in [delta, 2 delta].
std::vector<ProbeSet> generate_probe_sets(const LocationFamily& family, const SetClass& set_class, double delta,
                                          std::size_t count, std::uint64_t seed);

/// Monte Carlo mass of a set under the feature law.
Proportion estimate_mass(const LocationFamily& family, const SetDescriptor& set, std::size_t draws,
                         std::uint64_t seed);

/// Default VC dimension used for sandwich levels: 1 (full space), 2 (partition,
/// intervals), d + 1 (balls, half-spaces).
std::size_t nominal_vc(const SetClass& set_class);

}  // namespace covlab
