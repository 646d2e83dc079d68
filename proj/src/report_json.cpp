#include "covlab/report_json.hpp"

#include <cmath>
#include <sstream>

#include "covlab/error.hpp"

namespace covlab {

namespace {

Json vector_json(const Eigen::VectorXd& v)
{
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(extended_real(v(i)));
    return arr;
}

Json partition_json(const Partition& p)
{
    if (p.is_grid()) return Json{{"kind", "grid"}, {"cuts", p.cuts()}};
    return Json{{"kind", "labels"}, {"dimension", p.dimension()}, {"cells", p.cell_count()}};
}

template <typename T>
Json optional_json(const std::optional<T>& v)
{
    return v ? to_json(*v) : Json(nullptr);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

Json extended_real(double v)
{
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double parse_extended_real(const Json& j)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw ConfigError("expected a number or \"inf\"/\"-inf\", got " + j.dump());
}

Json to_json(const PredictionInterval& interval)
{
    Json pieces = Json::array();
    for (const auto& p : interval.pieces()) pieces.push_back(Json::array({extended_real(p.lo), extended_real(p.hi)}));
    return Json{{"pieces", pieces}, {"length", extended_real(interval_length(interval))}};
}

Json to_json(const Proportion& p)
{
    return Json{{"estimate", p.estimate},
                {"standard_error", p.standard_error},
                {"successes", p.successes},
                {"trials", p.trials}};
}

Json to_json(const SetDescriptor& set)
{
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FullSpace>) return Json{{"type", "full-space"}};
            else if constexpr (std::is_same_v<T, EmptySet>) return Json{{"type", "empty"}};
            else if constexpr (std::is_same_v<T, PartitionCell>) return Json{{"type", "partition-cell"}, {"id", s.id}};
            else if constexpr (std::is_same_v<T, Interval1d>)
                return Json{{"type", "interval"}, {"lo", extended_real(s.lo)}, {"hi", extended_real(s.hi)}};
            else if constexpr (std::is_same_v<T, Ball>)
                return Json{{"type", "ball"}, {"center", vector_json(s.center)}, {"radius", extended_real(s.radius)}};
            else
                return Json{{"type", "half-space"}, {"normal", vector_json(s.normal)}, {"offset", extended_real(s.offset)}};
        },
        set);
}

Json to_json(const SetClass& set_class)
{
    Json j{{"kind", set_class.name()}, {"dimension", set_class.dimension()}};
    if (set_class.partition()) j["partition"] = partition_json(*set_class.partition());
    return j;
}

Json to_json(const LocationFamily& family)
{
    Json mean{{"kind", to_string(family.mean.kind)}, {"intercept", family.mean.intercept}};
    if (family.mean.kind == MeanKind::linear) mean["coefficients"] = vector_json(family.mean.coefficients);
    if (family.mean.kind == MeanKind::sinusoidal) {
        mean["amplitude"] = family.mean.amplitude;
        mean["frequency"] = family.mean.frequency;
    }
    Json features{{"law", to_string(family.features.law)}, {"dimension", family.features.dimension}};
    if (family.features.law == FeatureLaw::uniform_box) {
        features["low"] = family.features.low;
        features["high"] = family.features.high;
    }
    return Json{{"mean", mean},
                {"noise", {{"kind", to_string(family.noise.kind)}, {"scale", family.noise.scale}}},
                {"features", features}};
}

Json to_json(const HardnessBound& bound)
{
    return Json{{"value", extended_real(bound.value)},
                {"argmin_c", bound.argmin_c},
                {"grid_value", extended_real(bound.grid_value)}};
}

Json to_json(const SandwichLevels& levels)
{
    return Json{{"alpha_plus", levels.alpha_plus},   {"alpha_minus", levels.alpha_minus},
                {"delta_plus", levels.delta_plus},   {"delta_minus", levels.delta_minus},
                {"c_alpha", levels.c_alpha},         {"c_delta", levels.c_delta},
                {"clipped", levels.clipped}};
}

Json to_json(const ExperimentConfig& cfg)
{
    Json method{{"kind", to_string(cfg.method.kind)}};
    if (cfg.method.kind == MethodKind::thinned) method["c"] = cfg.method.c;
    if (cfg.method.set_class) method["set_class"] = to_json(*cfg.method.set_class);
    Json regressor{{"kind", to_string(cfg.regressor.kind)}};
    if (cfg.regressor.k) regressor["k"] = *cfg.regressor.k;
    Json probes = Json::array();
    for (const auto& p : cfg.probe_sets) {
        Json entry{{"id", p.id}};
        entry.update(to_json(p.set));
        probes.push_back(entry);
    }
    return Json{{"family", to_json(cfg.family)},
                {"n0", cfg.split.n0},
                {"n1", cfg.split.n1},
                {"alpha", cfg.spec.alpha},
                {"delta", cfg.spec.delta},
                {"method", method},
                {"regressor", regressor},
                {"trials", cfg.trials},
                {"probe_sets", probes},
                {"generated_probes", cfg.generated_probes},
                {"probe_class", optional_json(cfg.probe_class)},
                {"mass_draws", cfg.mass_draws},
                {"rejection_cap", cfg.rejection_cap},
                {"seed", cfg.seed},
                {"keep_trial_records", cfg.keep_trial_records}};
}

Json to_json(const CoverageReport& report)
{
    Json probes = Json::array();
    for (const auto& p : report.probes) {
        Json entry{{"id", p.id},           {"set", p.description}, {"mass", to_json(p.mass)},
                   {"eligible", p.eligible}, {"flagged", p.flagged}};
        entry["coverage"] = p.flagged ? Json(nullptr) : to_json(p.coverage);
        if (!p.note.empty()) entry["note"] = p.note;
        probes.push_back(entry);
    }
    Json checks = Json::array();
    for (const auto& c : report.checks)
        checks.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    Json j{{"experiment", report.experiment},
           {"marginal_coverage", to_json(report.marginal)},
           {"mean_length", extended_real(report.mean_length)},
           {"median_length", extended_real(report.median_length)}};
    if (report.keep_rate) {
        j["keep_rate"] = to_json(*report.keep_rate);
        j["keep_probability"] = *report.keep_probability;
    }
    if (!report.probes.empty()) {
        j["probes"] = probes;
        j["min_eligible_coverage"] =
            report.min_eligible_coverage ? Json(*report.min_eligible_coverage) : Json(nullptr);
    }
    if (report.hardness) j["hardness_lower_bound"] = to_json(*report.hardness);
    if (report.oracle_length) j["oracle_length"] = extended_real(*report.oracle_length);
    if (report.median_symmetric_difference)
        j["median_symmetric_difference"] = extended_real(*report.median_symmetric_difference);
    j["checks"] = checks;
    j["all_checks_passed"] = report.all_checks_passed();
    return j;
}

Json to_json(const SandwichReport& report)
{
    Json points = Json::array();
    for (const auto& x : report.probe_points) points.push_back(vector_json(x));
    Json rows = Json::array();
    for (const auto& r : report.rows)
        rows.push_back(Json{{"c_alpha", r.constants.c_alpha},
                            {"c_delta", r.constants.c_delta},
                            {"levels", to_json(r.levels)},
                            {"sandwiched", to_json(r.sandwiched)},
                            {"vacuous", r.vacuous},
                            {"degenerate", r.degenerate}});
    return Json{{"vc", report.vc}, {"probe_points", points}, {"rows", rows}};
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string format_records_csv(const CoverageReport& report)
{
    std::ostringstream os;
    os.precision(17);
    os << "trial,probe_id,covered,length\n";
    for (const auto& r : report.records) {
        os << r.trial << ',' << csv_field(r.probe_id) << ',' << (r.covered ? 1 : 0) << ',';
        if (std::isinf(r.length)) os << "inf";
        else os << r.length;
        os << '\n';
    }
    return os.str();
}

}  // namespace covlab
