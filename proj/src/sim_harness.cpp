#include "covlab/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "covlab/error.hpp"
#include "covlab/marginal_conformal.hpp"
#include "covlab/parallel.hpp"
#include "covlab/restricted_conformal.hpp"
#include "covlab/rng.hpp"

namespace covlab {

namespace {

constexpr std::size_t kProbeReference = 20'000;
constexpr std::size_t kProbeAttemptsPerSet = 50;

const std::pair<MethodKind, const char*> kMethodNames[] = {
    {MethodKind::split_marginal, "split-marginal"}, {MethodKind::naive_alpha_delta, "naive-alpha-delta"},
    {MethodKind::thinned, "thinned"},               {MethodKind::restricted, "restricted"},
    {MethodKind::always_full, "always-full"},       {MethodKind::always_empty, "always-empty"},
};

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// A fitted method for one trial.
class TrialPredictor {
public:
    TrialPredictor(const ExperimentConfig& cfg, std::size_t trial)
        : cfg_(cfg)
    {
        const std::size_t n = cfg.split.n0 + cfg.split.n1;
        const Dataset data =
            sample_location_family(cfg.family, n, stream_seed(cfg.seed, {tag(StreamTag::trial), trial, 0}));
        std::vector<std::size_t> train_rows(cfg.split.n0);
        std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
        std::vector<std::size_t> calib_rows(cfg.split.n1);
        std::iota(calib_rows.begin(), calib_rows.end(), cfg.split.n0);
        model_ = fit_regressor(cfg.regressor, data.select(train_rows));
        calib_ = data.select(calib_rows);
        residuals_ = calib_residuals(model_, calib_);
        rule_ = {cfg.method.c, cfg.spec.alpha, stream_seed(cfg.seed, {tag(StreamTag::thinning), trial})};
        switch (cfg.method.kind) {
        case MethodKind::split_marginal: q_ = marginal_quantile(residuals_, cfg.spec.alpha); break;
        case MethodKind::naive_alpha_delta: q_ = marginal_quantile(residuals_, naive_approx_cc_level(cfg.spec)); break;
        case MethodKind::thinned:
            q_ = marginal_quantile(residuals_, thinning_base_miscoverage(cfg.spec, cfg.method.c));
            break;
        default: break;
        }
    }

    const RegressionModel& model() const { return model_; }

    PredictionInterval predict(const Eigen::VectorXd& x, std::uint64_t query_index, std::optional<bool>& kept) const
    {
        kept.reset();
        switch (cfg_.method.kind) {
        case MethodKind::split_marginal:
        case MethodKind::naive_alpha_delta: return predict_marginal(model_, q_, x);
        case MethodKind::thinned:
            kept = thinning_keeps(rule_, query_index);
            return *kept ? predict_marginal(model_, q_, x) : PredictionInterval::empty();
        case MethodKind::restricted: {
            const auto width = local_width(x, calib_, residuals_, *cfg_.method.set_class, cfg_.spec);
            return predict_restricted(model_, width, x);
        }
        case MethodKind::always_full: return PredictionInterval::whole_line();
        case MethodKind::always_empty: return PredictionInterval::empty();
        }
        return PredictionInterval::empty();
    }

    double restricted_half_width(const Eigen::VectorXd& x) const
    {
        return local_width(x, calib_, residuals_, *cfg_.method.set_class, cfg_.spec).width;
    }

private:
    const ExperimentConfig& cfg_;
    RegressionModel model_;
    Dataset calib_;
    ResidualSet residuals_;
    ThinningRule rule_;
    double q_ = kInf;
};

struct QueryOutcome {
    bool drawn = false;
    bool covered = false;
    double length = 0.0;
    double symdiff = 0.0;
    std::optional<bool> kept;
};

struct TrialOutcome {
    QueryOutcome marginal;
    std::vector<QueryOutcome> probes;
};

struct ProbeState {
    Proportion mass;
    bool flagged = false;
    std::string note;
};

QueryOutcome answer(const ExperimentConfig& cfg, const TrialPredictor& predictor, const Eigen::VectorXd& x, double y,
                    std::uint64_t query_index, bool efficiency)
{
    QueryOutcome out;
    out.drawn = true;
    const auto interval = predictor.predict(x, query_index, out.kept);
    out.covered = interval.contains(y);
    out.length = interval_length(interval);
    if (efficiency)
        out.symdiff = symmetric_difference_length(interval, oracle_interval(cfg.family, cfg.spec.alpha, x));
    return out;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t trial, const std::vector<ProbeState>& probes,
                       bool efficiency)
{
    const TrialPredictor predictor(cfg, trial);
    TrialOutcome out;
    {
        auto eng = make_engine(cfg.seed, {tag(StreamTag::trial), trial, 1});
        const Eigen::VectorXd x = cfg.family.draw_features(eng);
        const double y = cfg.family.mean_at(x) + cfg.family.draw_noise(eng);
        out.marginal = answer(cfg, predictor, x, y, 0, efficiency);
    }
    out.probes.resize(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
        if (probes[p].flagged) continue;
        auto eng = make_engine(cfg.seed, {tag(StreamTag::trial), trial, 2 + p});
        Eigen::VectorXd x;
        bool found = false;
        for (std::uint64_t draw = 0; draw < cfg.rejection_cap; ++draw) {
            x = cfg.family.draw_features(eng);
            if (contains(cfg.probe_sets[p].set, x)) {
                found = true;
                break;
            }
        }
        if (!found) continue;
        const double y = cfg.family.mean_at(x) + cfg.family.draw_noise(eng);
        out.probes[p] = answer(cfg, predictor, x, y, 1 + p, efficiency);
    }
    return out;
}

double median_of(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    if (v.size() % 2 == 1) return v[m];
    if (std::isinf(v[m - 1]) || std::isinf(v[m])) return v[m];
    return 0.5 * (v[m - 1] + v[m]);
}

bool continuous_noise(const LocationFamily& fam) { return fam.noise.scale > 0.0; }

// Marginal target for the configured method, or nullopt when nothing is asserted.
std::optional<double> marginal_target(const ExperimentConfig& cfg)
{
    switch (cfg.method.kind) {
    case MethodKind::split_marginal: return 1.0 - cfg.spec.alpha;
    case MethodKind::naive_alpha_delta: return 1.0 - naive_approx_cc_level(cfg.spec);
    case MethodKind::thinned:
    case MethodKind::restricted: return 1.0 - cfg.spec.alpha;
    case MethodKind::always_full: return 1.0;
    case MethodKind::always_empty: return std::nullopt;
    }
    return std::nullopt;
}

bool conditional_method(MethodKind kind)
{
    return kind == MethodKind::naive_alpha_delta || kind == MethodKind::thinned || kind == MethodKind::restricted ||
           kind == MethodKind::always_full;
}

CoverageReport run_experiment(const ExperimentConfig& cfg, const std::string& name, bool conditional, bool efficiency)
{
    cfg.validate();
    std::vector<ProbeState> probes;
    if (conditional) {
        if (cfg.probe_sets.empty()) throw ConfigError("conditional experiment needs at least one probe set");
        probes.resize(cfg.probe_sets.size());
        for (std::size_t p = 0; p < probes.size(); ++p) {
            probes[p].mass = estimate_mass(cfg.family, cfg.probe_sets[p].set, cfg.mass_draws,
                                           stream_seed(cfg.seed, {tag(StreamTag::mass), p}));
            if (probes[p].mass.successes == 0) {
                probes[p].flagged = true;
                probes[p].note = "no mass-estimation draw landed in the set";
            }
        }
    }

    std::vector<TrialOutcome> outcomes(cfg.trials);
    parallel_for(cfg.trials, cfg.workers,
                 [&](std::size_t t) { outcomes[t] = run_trial(cfg, t, probes, efficiency); });

    CoverageReport report;
    report.experiment = name;

    std::size_t covered = 0;
    std::size_t kept = 0;
    std::size_t decisions = 0;
    std::vector<double> lengths;
    lengths.reserve(cfg.trials);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const auto& m = outcomes[t].marginal;
        covered += m.covered ? 1 : 0;
        lengths.push_back(m.length);
        if (m.kept) {
            ++decisions;
            kept += *m.kept ? 1 : 0;
        }
        for (const auto& q : outcomes[t].probes) {
            if (q.drawn && q.kept) {
                ++decisions;
                kept += *q.kept ? 1 : 0;
            }
        }
        if (efficiency) report.symmetric_differences.push_back(m.symdiff);
        if (cfg.keep_trial_records) {
            report.records.push_back({t, "marginal", m.covered, m.length});
            for (std::size_t p = 0; p < outcomes[t].probes.size(); ++p) {
                const auto& q = outcomes[t].probes[p];
                if (q.drawn) report.records.push_back({t, cfg.probe_sets[p].id, q.covered, q.length});
            }
        }
    }
    report.marginal = make_proportion(covered, cfg.trials);

    bool infinite = false;
    double sum = 0.0;
    for (double l : lengths) {
        if (std::isinf(l)) infinite = true;
        else sum += l;
    }
    report.mean_length = infinite ? kInf : sum / static_cast<double>(lengths.size());
    report.median_length = median_of(lengths);
    if (decisions > 0) {
        report.keep_rate = make_proportion(kept, decisions);
        report.keep_probability = ThinningRule{cfg.method.c, cfg.spec.alpha, 0}.keep_probability();
    }

    const std::size_t n1 = cfg.split.n1;
    if (const auto target = marginal_target(cfg)) {
        const double se = report.marginal.standard_error;
        const double lower = *target - 3.0 * se;
        report.checks.push_back({"marginal_coverage_lower", report.marginal.estimate >= lower,
                                 fmt(report.marginal.estimate) + " >= " + fmt(lower)});
        const bool exact_level =
            cfg.method.kind == MethodKind::split_marginal || cfg.method.kind == MethodKind::naive_alpha_delta;
        // The upper companion needs ties among residuals to have probability zero
        // and a finite quantile rank.
        const double level = cfg.method.kind == MethodKind::split_marginal ? cfg.spec.alpha
                                                                           : naive_approx_cc_level(cfg.spec);
        if (exact_level && continuous_noise(cfg.family) && marginal_rank(n1, level) <= n1) {
            const double upper = *target + 1.0 / static_cast<double>(n1 + 1) + 3.0 * se;
            report.checks.push_back({"marginal_coverage_upper", report.marginal.estimate <= upper,
                                     fmt(report.marginal.estimate) + " <= " + fmt(upper)});
        }
    }
    if (report.keep_rate && report.keep_probability) {
        const double p = *report.keep_probability;
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(report.keep_rate->trials));
        const double gap = std::abs(report.keep_rate->estimate - p);
        report.checks.push_back({"keep_rate", gap <= 3.0 * se + 1e-12,
                                 "|" + fmt(report.keep_rate->estimate) + " - " + fmt(p) + "| <= " + fmt(3.0 * se)});
    }

    if (conditional) {
        for (std::size_t p = 0; p < probes.size(); ++p) {
            ProbeReport pr;
            pr.id = cfg.probe_sets[p].id;
            pr.description = describe(cfg.probe_sets[p].set);
            pr.mass = probes[p].mass;
            pr.flagged = probes[p].flagged;
            pr.note = probes[p].note;
            std::size_t hits = 0;
            std::size_t drawn = 0;
            for (std::size_t t = 0; t < cfg.trials && !pr.flagged; ++t) {
                const auto& q = outcomes[t].probes[p];
                if (!q.drawn) {
                    pr.flagged = true;
                    pr.note = "rejection cap reached";
                    break;
                }
                ++drawn;
                hits += q.covered ? 1 : 0;
            }
            if (!pr.flagged) pr.coverage = make_proportion(hits, drawn);
            pr.eligible = !pr.flagged && pr.mass.estimate >= cfg.spec.delta;
            report.probes.push_back(std::move(pr));
        }
        std::optional<std::size_t> worst;
        for (std::size_t p = 0; p < report.probes.size(); ++p) {
            if (!report.probes[p].eligible) continue;
            if (!worst || report.probes[p].coverage.estimate < report.probes[*worst].coverage.estimate) worst = p;
        }
        if (worst) report.min_eligible_coverage = report.probes[*worst].coverage.estimate;
        if (conditional_method(cfg.method.kind)) {
            const double target = 1.0 - cfg.spec.alpha;
            for (const auto& pr : report.probes) {
                if (!pr.eligible) continue;
                const double lower = target - 3.0 * pr.coverage.standard_error;
                report.checks.push_back({"conditional_coverage:" + pr.id, pr.coverage.estimate >= lower,
                                         fmt(pr.coverage.estimate) + " >= " + fmt(lower)});
            }
        }
    }

    if (efficiency) {
        report.hardness = hardness_lower_bound(cfg.family, cfg.spec);
        report.oracle_length = 2.0 * oracle_noise_quantile(cfg.family.noise, cfg.spec.alpha);
        report.median_symmetric_difference = median_of(report.symmetric_differences);
        const bool cc_targeting =
            cfg.method.kind == MethodKind::naive_alpha_delta || cfg.method.kind == MethodKind::thinned;
        if (cc_targeting && std::isfinite(report.mean_length) && lengths.size() > 1) {
            double ss = 0.0;
            for (double l : lengths) ss += (l - report.mean_length) * (l - report.mean_length);
            const double se = std::sqrt(ss / static_cast<double>(lengths.size() - 1) /
                                        static_cast<double>(lengths.size()));
            const double floor = report.hardness->value - 3.0 * se;
            report.checks.push_back({"length_vs_hardness", report.mean_length >= floor,
                                     fmt(report.mean_length) + " >= " + fmt(floor)});
        }
    }
    return report;
}

}  // namespace

std::string to_string(MethodKind kind)
{
    for (const auto& [k, n] : kMethodNames)
        if (k == kind) return n;
    return "unknown";
}

MethodKind parse_method_kind(const std::string& name)
{
    for (const auto& [k, n] : kMethodNames)
        if (name == n) return k;
    if (name == "naive-αδ") return MethodKind::naive_alpha_delta;
    throw ConfigError("unknown method: " + name);
}

void ExperimentConfig::validate() const
{
    family.validate();
    spec.validate();
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (split.n0 < 1 || split.n1 < 1) throw ConfigError("n0 and n1 must be >= 1");
    if (method.kind == MethodKind::thinned) ThinningRule{method.c, spec.alpha, 0}.validate();
    if (method.kind == MethodKind::restricted) {
        if (!method.set_class) throw ConfigError("restricted method needs a set class");
        if (method.set_class->dimension() != family.features.dimension)
            throw ConfigError("set class dimension differs from the feature dimension");
    }
    if (regressor.k && (*regressor.k < 1 || *regressor.k > split.n0))
        throw ConfigError("k must lie in [1, n0]");
    if (mass_draws < 1) throw ConfigError("mass_draws must be >= 1");
    if (rejection_cap < 1) throw ConfigError("rejection_cap must be >= 1");
}

Proportion make_proportion(std::size_t successes, std::size_t trials)
{
    Proportion p;
    p.successes = successes;
    p.trials = trials;
    if (trials == 0) return p;
    const double n = static_cast<double>(trials);
    p.estimate = static_cast<double>(successes) / n;
    const double shrunk = (static_cast<double>(successes) + 0.5) / (n + 1.0);
    p.standard_error = std::sqrt(shrunk * (1.0 - shrunk) / n);
    return p;
}

bool CoverageReport::all_checks_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

CoverageReport run_marginal_experiment(const ExperimentConfig& cfg)
{
    return run_experiment(cfg, "marginal", false, false);
}

CoverageReport run_conditional_experiment(const ExperimentConfig& cfg)
{
    if (cfg.generated_probes == 0) return run_experiment(cfg, "conditional", true, false);
    const auto& cls = cfg.probe_class ? cfg.probe_class : cfg.method.set_class;
    if (!cls) throw ConfigError("generated probes need probe_class or a restricted method class");
    ExperimentConfig full = cfg;
    auto extra = generate_probe_sets(cfg.family, *cls, cfg.spec.delta, cfg.generated_probes,
                                     stream_seed(cfg.seed, {tag(StreamTag::probe)}));
    full.probe_sets.insert(full.probe_sets.end(), extra.begin(), extra.end());
    return run_experiment(full, "conditional", true, false);
}

CoverageReport run_efficiency_experiment(const ExperimentConfig& cfg)
{
    return run_experiment(cfg, "efficiency", false, true);
}

SandwichReport run_sandwich_check(const ExperimentConfig& cfg, const std::vector<SandwichConstants>& constants,
                                  const std::vector<Eigen::VectorXd>& probe_points, std::size_t vc,
                                  std::size_t oracle_draws)
{
    cfg.validate();
    if (cfg.method.kind != MethodKind::restricted) throw ConfigError("sandwich check needs the restricted method");
    if (probe_points.empty()) throw ConfigError("sandwich check needs at least one probe point");
    if (oracle_draws < 1) throw ConfigError("oracle_draws must be >= 1");
    for (const auto& x : probe_points)
        if (static_cast<std::size_t>(x.size()) != cfg.family.features.dimension)
            throw ConfigError("probe point dimension differs from the feature dimension");

    SandwichReport report;
    report.vc = vc;
    report.probe_points = probe_points;
    std::vector<SandwichLevels> levels;
    for (const auto& c : constants) levels.push_back(sandwich_levels(cfg.spec, cfg.split.n1, vc, c.c_alpha, c.c_delta));

    const std::size_t cells = cfg.trials * probe_points.size();
    std::vector<std::vector<char>> hit(cells, std::vector<char>(constants.size(), 0));
    const SetClass& cls = *cfg.method.set_class;
    parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        const TrialPredictor predictor(cfg, t);
        const auto mu = MeanFunction::of_model(predictor.model());
        for (std::size_t p = 0; p < probe_points.size(); ++p) {
            const Eigen::VectorXd& x = probe_points[p];
            const double width = predictor.restricted_half_width(x);
            const std::uint64_t oracle_seed = stream_seed(cfg.seed, {tag(StreamTag::sandwich), t, p});
            for (std::size_t k = 0; k < constants.size(); ++k) {
                const auto& lv = levels[k];
                const auto inner = oracle_restricted_interval(cfg.family, mu, {lv.alpha_plus, lv.delta_plus}, cls, x,
                                                              oracle_draws, oracle_seed);
                const auto outer = oracle_restricted_interval(cfg.family, mu, {lv.alpha_minus, lv.delta_minus}, cls,
                                                              x, oracle_draws, oracle_seed);
                hit[t * probe_points.size() + p][k] = inner.half_width <= width && width <= outer.half_width;
            }
        }
    });

    for (std::size_t k = 0; k < constants.size(); ++k) {
        std::size_t count = 0;
        for (const auto& row : hit) count += row[k] ? 1 : 0;
        SandwichRow row;
        row.constants = constants[k];
        row.levels = levels[k];
        row.sandwiched = make_proportion(count, cells);
        row.vacuous = levels[k].clipped;
        row.degenerate = constants[k].c_alpha == 0.0 && constants[k].c_delta == 0.0;
        report.rows.push_back(row);
    }
    return report;
}

Proportion estimate_mass(const LocationFamily& family, const SetDescriptor& set, std::size_t draws,
                         std::uint64_t seed)
{
    if (draws < 1) throw ConfigError("mass estimate needs at least one draw");
    auto eng = make_engine(seed, {tag(StreamTag::mass)});
    std::size_t in = 0;
    for (std::size_t i = 0; i < draws; ++i)
        if (contains(set, family.draw_features(eng))) ++in;
    return make_proportion(in, draws);
}

std::vector<ProbeSet> generate_probe_sets(const LocationFamily& family, const SetClass& set_class, double delta,
                                          std::size_t count, std::uint64_t seed)
{
    family.validate();
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
    std::vector<ProbeSet> out;
    switch (set_class.kind()) {
    case SetClassKind::full_space_only: out.push_back({"full", FullSpace{}}); return out;
    case SetClassKind::finite_partition:
        for (int id : set_class.partition()->cell_ids())
            out.push_back({"cell-" + std::to_string(id), PartitionCell{set_class.partition(), id}});
        return out;
    default: break;
    }

    const std::size_t d = set_class.dimension();
    if (d != family.features.dimension) throw ConfigError("set class dimension differs from the feature dimension");
    auto ref_eng = make_engine(seed, {tag(StreamTag::probe), 0});
    std::vector<Eigen::VectorXd> ref(kProbeReference);
    for (auto& x : ref) x = family.draw_features(ref_eng);
    const auto m = static_cast<double>(ref.size());
    std::vector<double> xs(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) xs[i] = ref[i](0);
    std::sort(xs.begin(), xs.end());

    const std::size_t attempts = kProbeAttemptsPerSet * std::max<std::size_t>(count, 1);
    for (std::size_t a = 0; a < attempts && out.size() < count; ++a) {
        auto eng = make_engine(seed, {tag(StreamTag::probe), 1, a});
        const double target = delta * (1.0 + uniform01(eng));
        const auto take = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(target * m)), 1, ref.size());
        SetDescriptor set = FullSpace{};
        std::string prefix;
        if (set_class.kind() == SetClassKind::intervals_1d) {
            const auto start = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(ref.size() - take + 1));
            set = Interval1d{xs[start], xs[start + take - 1]};
            prefix = "interval-";
        } else if (set_class.kind() == SetClassKind::l2_balls) {
            const auto& center = ref[static_cast<std::size_t>(uniform01(eng) * m)];
            std::vector<double> dist(ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) dist[i] = (ref[i] - center).norm();
            std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take - 1), dist.end());
            set = Ball{center, dist[take - 1]};
            prefix = "ball-";
        } else {
            std::normal_distribution<double> normal;
            Eigen::VectorXd dir(static_cast<Eigen::Index>(d));
            for (Eigen::Index j = 0; j < dir.size(); ++j) dir(j) = normal(eng);
            if (dir.norm() == 0.0) continue;
            dir /= dir.norm();
            std::vector<double> proj(ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) proj[i] = dir.dot(ref[i]);
            std::nth_element(proj.begin(), proj.begin() + static_cast<std::ptrdiff_t>(take - 1), proj.end());
            set = HalfSpace{dir, proj[take - 1]};
            prefix = "halfspace-";
        }
        const auto mass = estimate_mass(family, set, kProbeReference, stream_seed(seed, {tag(StreamTag::probe), 2, a}));
        if (mass.estimate >= delta && mass.estimate <= 2.0 * delta)
            out.push_back({prefix + std::to_string(out.size()), set});
    }
    return out;
}

std::size_t nominal_vc(const SetClass& set_class)
{
    switch (set_class.kind()) {
    case SetClassKind::full_space_only: return 1;
    case SetClassKind::finite_partition: return set_class.partition()->cell_count() >= 2 ? 2 : 1;
    case SetClassKind::intervals_1d: return 2;
    case SetClassKind::l2_balls:
    case SetClassKind::half_spaces: return set_class.dimension() + 1;
    }
    return 1;
}

}  // namespace covlab
